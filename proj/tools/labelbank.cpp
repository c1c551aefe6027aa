#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "lbseg/config.hpp"
#include "lbseg/error.hpp"
#include "lbseg/experiment.hpp"

namespace {

using namespace lbseg;

ExperimentConfig config_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
  ExperimentConfig cfg = load_config(path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void print_scores(const Scores& s) {
  std::printf("pAcc %.6f  mAcc %.6f  mIU %.6f  fwIU %.6f\n", s.pacc, s.macc, s.miu, s.fwiu);
}

void print_bank(const char* label, const std::optional<PrecisionRecall>& pr) {
  if (pr) {
    std::printf("bank %s precision %.6f recall %.6f\n", label, pr->precision, pr->recall);
  } else {
    std::printf("bank %s precision nan recall nan\n", label);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LabelBank-guided segmentation experiments"};
  app.require_subcommand(1);

  SyntheticConfig gen;
  std::string gen_out;
  std::size_t size = 64;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen_out)->required();
  gen_cmd->add_option("--k", gen.k);
  gen_cmd->add_option("--n-train", gen.n_train);
  gen_cmd->add_option("--n-val", gen.n_val);
  gen_cmd->add_option("--size", size, "Image height and width");
  gen_cmd->add_option("--distractor-rate", gen.distractor_rate);

  std::string config_path;
  std::vector<std::string> sets;
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  train_cmd->add_option("--config", config_path)->required();
  train_cmd->add_option("--set", sets, "Override a config key (key=value)");

  EvalRequest eval;
  std::string eval_ckpt, eval_data, eval_mode, eval_order, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the val split");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data);
  eval_cmd->add_option("--mode", eval_mode, "baseline, filtered, oracle or multitask");
  eval_cmd->add_option("--filter-order", eval_order, "filter_then_upsample or upsample_then_filter");
  eval_cmd->add_option("--out", eval_out, "CSV path (default: eval.csv next to the checkpoint)");

  auto* oracle_cmd = app.add_subcommand("oracle-study", "Baseline vs filtered vs oracle");
  oracle_cmd->add_option("--config", config_path)->required();
  oracle_cmd->add_option("--set", sets, "Override a config key (key=value)");

  GridRequest grid;
  std::string grid_ckpt, grid_data, np_list = "0,1,2,3,4,5", nr_list = "0,1,2,3,4,5", grid_out;
  auto* grid_cmd = app.add_subcommand("noisy-grid", "mIU over contaminated oracle LabelBanks");
  grid_cmd->add_option("--checkpoint", grid_ckpt)->required();
  grid_cmd->add_option("--data", grid_data);
  grid_cmd->add_option("--np-list", np_list);
  grid_cmd->add_option("--nr-list", nr_list);
  grid_cmd->add_option("--seed", grid.seed);
  grid_cmd->add_option("--out", grid_out);
  grid_cmd->add_option("--threads", grid.threads);

  std::string runs_dir;
  auto* report_cmd = app.add_subcommand("report", "Aggregate CSVs into tables and plot data");
  report_cmd->add_option("--runs-dir", runs_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "labelbank: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gen_cmd->parsed()) {
      gen.height = gen.width = size;
      gen_data(gen, gen_out);
      std::printf("wrote %zu train and %zu val samples to %s\n", gen.n_train, gen.n_val, gen_out.c_str());
    } else if (train_cmd->parsed()) {
      const auto cfg = config_with_overrides(config_path, sets);
      const auto run = run_training(cfg, &std::cout);
      std::printf("best epoch %zu, outputs in %s\n", run.result.best_epoch, run.dir.c_str());
    } else if (eval_cmd->parsed()) {
      eval.checkpoint = eval_ckpt;
      if (!eval_data.empty()) eval.data = eval_data;
      if (!eval_mode.empty()) eval.mode = parse_train_mode(eval_mode);
      if (!eval_order.empty()) eval.order = parse_filter_order(eval_order);
      if (!eval_out.empty()) eval.out = eval_out;
      const auto report = run_eval(eval);
      print_scores(report.result.scores);
      print_bank("micro", report.result.bank_micro);
      print_bank("macro", report.result.bank_macro);
    } else if (oracle_cmd->parsed()) {
      const auto cfg = config_with_overrides(config_path, sets);
      for (const auto& row : run_oracle_study(cfg, &std::cout)) {
        std::printf("%-9s ", row.name.c_str());
        print_scores(row.scores);
      }
    } else if (grid_cmd->parsed()) {
      grid.checkpoint = grid_ckpt;
      if (!grid_data.empty()) grid.data = grid_data;
      grid.np_list = parse_double_list(np_list);
      grid.nr_list = parse_double_list(nr_list);
      if (!grid_out.empty()) grid.out = grid_out;
      for (const auto& c : run_noisy_grid(grid)) {
        std::printf("n_p %-4g n_r %-4g mIU %.6f precision %.4f recall %.4f\n", c.n_p, c.n_r, c.scores.miu,
                    c.micro.precision, c.micro.recall);
      }
    } else if (report_cmd->parsed()) {
      const auto summary = run_report(runs_dir);
      std::printf("%zu comparison rows, %zu plot files\n", summary.comparison_rows, summary.plot_files.size());
    }
  } catch (const std::exception& e) {
    std::cerr << "labelbank: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}
