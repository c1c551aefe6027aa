#include "lbseg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "lbseg/checkpoint.hpp"
#include "lbseg/error.hpp"

namespace lbseg {

namespace fs = std::filesystem;

namespace {

std::string csv_number(double v) { return format_double(v); }

std::string csv_optional(const std::optional<PrecisionRecall>& pr, bool precision) {
  if (!pr) return "nan";
  return csv_number(precision ? pr->precision : pr->recall);
}

std::string scores_csv(const Scores& s) {
  return csv_number(s.pacc) + "," + csv_number(s.macc) + "," + csv_number(s.miu) + "," +
         csv_number(s.fwiu);
}

fs::path run_dir_of(const fs::path& checkpoint) {
  auto dir = checkpoint.parent_path();
  return dir.empty() ? fs::path(".") : dir;
}

ExperimentConfig run_config(const fs::path& checkpoint) {
  if (!fs::is_regular_file(checkpoint)) throw FormatError("no checkpoint at " + checkpoint.string());
  return load_config(run_dir_of(checkpoint) / "config.txt");
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("csv lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty csv");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size()) throw FormatError(path.string() + ": ragged csv row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const DivergenceError*>(&e) != nullptr) return kExitDivergence;
  if (dynamic_cast<const FormatError*>(&e) != nullptr || dynamic_cast<const ShapeError*>(&e) != nullptr ||
      dynamic_cast<const DomainError*>(&e) != nullptr ||
      dynamic_cast<const UndefinedMetricError*>(&e) != nullptr ||
      dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) {
    return kExitData;
  }
  return 1;
}

void write_atomic(const fs::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
}

void gen_data(const SyntheticConfig& cfg, const fs::path& out) {
  const Dataset ds = generate_synthetic(cfg);
  auto tmp = out;
  tmp += ".tmp";
  fs::remove_all(tmp);
  write_dataset(tmp, ds);
  fs::remove_all(out);
  fs::rename(tmp, out);
}

TrainRun run_training(const ExperimentConfig& cfg, std::ostream* progress) {
  const Dataset ds = read_dataset(cfg.data_path);
  Model model(cfg.model, ModelDims::of(ds), mode_has_head(cfg.train.mode), derive_seed(cfg.seed, "init"));
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "train");

  fs::create_directories(cfg.out_dir);
  write_atomic(cfg.out_dir / "config.txt", format_config(cfg));
  if (progress != nullptr) *progress << cfg.name << ": " << log_header() << "\n";
  auto result = train(model, ds, tc, [&](const EpochLog& e) {
    if (progress != nullptr) *progress << cfg.name << ": " << format_log_line(e) << std::endl;
  });

  std::string tsv = log_header() + "\n";
  for (const auto& e : result.log) tsv += format_log_line(e) + "\n";
  write_atomic(cfg.out_dir / "metrics.tsv", tsv);
  save_checkpoint(cfg.out_dir / "best.lbck", result.best);
  save_checkpoint(cfg.out_dir / "last.lbck", result.last);
  return {std::move(result), cfg.out_dir};
}

Model load_model(const fs::path& checkpoint, const ExperimentConfig& cfg, const Dataset& ds) {
  Model model(cfg.model, ModelDims::of(ds), mode_has_head(cfg.train.mode), derive_seed(cfg.seed, "init"));
  model.params().assign(load_checkpoint(checkpoint));
  return model;
}

std::string eval_csv_header() {
  return "run,checkpoint,mode,filter_order,pAcc,mAcc,mIU,fwIU,bank_precision_micro,"
         "bank_recall_micro,bank_precision_macro,bank_recall_macro";
}

std::string eval_csv_row(const std::string& run, const std::string& checkpoint, const EvalReport& report) {
  const auto& r = report.result;
  return run + "," + checkpoint + "," + to_string(report.mode) + "," +
         to_string(report.order) + "," + scores_csv(r.scores) + "," + csv_optional(r.bank_micro, true) +
         "," + csv_optional(r.bank_micro, false) + "," + csv_optional(r.bank_macro, true) + "," +
         csv_optional(r.bank_macro, false);
}

EvalReport run_eval(const EvalRequest& req) {
  const auto cfg = run_config(req.checkpoint);
  const Dataset ds = read_dataset(req.data.value_or(cfg.data_path));
  Model model = load_model(req.checkpoint, cfg, ds);
  FilterMode filter = cfg.model.filter;
  if (req.order) filter.order = *req.order;
  EvalReport report;
  report.mode = req.mode.value_or(cfg.train.mode);
  report.order = filter.order;
  report.result = evaluate(model, ds.val, report.mode, filter, cfg.train.oracle_saturation);
  const auto row = eval_csv_row(cfg.name, req.checkpoint.filename().string(), report);
  report.csv = req.out.value_or(run_dir_of(req.checkpoint) / "eval.csv");
  write_atomic(report.csv, eval_csv_header() + "\n" + row + "\n");
  return report;
}

std::vector<OracleStudyRow> run_oracle_study(const ExperimentConfig& cfg, std::ostream* progress) {
  const std::vector<std::pair<std::string, TrainMode>> variants{
      {"baseline", TrainMode::kBaseline}, {"filtered", TrainMode::kFiltered}, {"oracle", TrainMode::kOracle}};
  const Dataset ds = read_dataset(cfg.data_path);
  std::vector<OracleStudyRow> rows;
  std::string csv = "row,pAcc,mAcc,mIU,fwIU\n";
  for (const auto& [name, mode] : variants) {
    ExperimentConfig sub = cfg;
    sub.name = cfg.name + "-" + name;
    sub.out_dir = cfg.out_dir / name;
    sub.train.mode = mode;
    run_training(sub, progress);
    Model model = load_model(sub.out_dir / "best.lbck", sub, ds);
    const auto ev = evaluate(model, ds.val, mode, sub.model.filter, sub.train.oracle_saturation);
    rows.push_back({name, ev.scores});
    csv += name + "," + scores_csv(ev.scores) + "\n";
  }
  fs::create_directories(cfg.out_dir);
  write_atomic(cfg.out_dir / "oracle_study.csv", csv);
  return rows;
}

std::size_t grid_thread_count(std::size_t requested) {
  std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LABELBANK_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const auto cap = std::strtoull(env, &end, 10);
    if (*end != '\0' || cap == 0) throw ConfigError("LABELBANK_THREADS must be a positive integer");
    n = std::min<std::size_t>(n, cap);
  }
  return n;
}

GridCell evaluate_grid_cell(const std::vector<Inference>& inferred, const std::vector<Sample>& split,
                            std::size_t k, double n_p, double n_r, std::uint64_t seed,
                            double saturation, const FilterMode& filter) {
  ConfusionMatrix cm(k);
  BankQuality quality;
  const NoiseSpec spec{n_p, n_r, seed};
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto truth = presence_from_labels(split[i].labels, k);
    const auto c = contaminate(truth, spec, k, saturation, i, split.size());
    quality.add(c.bank, truth);
    cm.accumulate(split[i].labels,
                  readout(inferred[i].seg_map, &c.bank, split[i].labels.height, split[i].labels.width, filter));
  }
  return {n_p, n_r, score(cm), quality.micro(), quality.macro()};
}

std::vector<GridCell> run_noisy_grid(const GridRequest& req) {
  if (req.np_list.empty() || req.nr_list.empty()) throw ConfigError("grid lists must not be empty");
  for (double v : req.np_list) {
    if (!(v >= 0.0)) throw ConfigError("n_p values must be non-negative");
  }
  for (double v : req.nr_list) {
    if (!(v >= 0.0)) throw ConfigError("n_r values must be non-negative");
  }
  const auto cfg = run_config(req.checkpoint);
  const Dataset ds = read_dataset(req.data.value_or(cfg.data_path));
  if (ds.val.empty()) throw FormatError("dataset has no val split");
  Model model = load_model(req.checkpoint, cfg, ds);
  std::vector<Inference> inferred;
  inferred.reserve(ds.val.size());
  for (const auto& s : ds.val) inferred.push_back(infer(model, s));

  std::vector<GridCell> cells;
  for (double np : req.np_list) {
    for (double nr : req.nr_list) cells.push_back({np, nr, {}, {}, {}});
  }
  const std::size_t n_threads = std::min(grid_thread_count(req.threads), cells.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_threads);
  auto worker = [&](std::size_t t) {
    try {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        cells[i] = evaluate_grid_cell(inferred, ds.val, ds.k, cells[i].n_p, cells[i].n_r, req.seed,
                                      cfg.train.oracle_saturation, cfg.model.filter);
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::string csv = "n_p,n_r,pAcc,mAcc,mIU,fwIU,precision_micro,recall_micro,precision_macro,recall_macro\n";
  for (const auto& c : cells) {
    csv += csv_number(c.n_p) + "," + csv_number(c.n_r) + "," + scores_csv(c.scores) + "," +
           csv_number(c.micro.precision) + "," + csv_number(c.micro.recall) + "," +
           csv_number(c.macro.precision) + "," + csv_number(c.macro.recall) + "\n";
  }
  write_atomic(req.out.value_or(run_dir_of(req.checkpoint) / "grid.csv"), csv);
  return cells;
}

ReportSummary run_report(const fs::path& runs_dir) {
  if (!fs::is_directory(runs_dir)) throw ConfigError("runs dir " + runs_dir.string() + " does not exist");
  const fs::path report_dir = runs_dir / "report";
  std::vector<fs::path> found;
  for (auto it = fs::recursive_directory_iterator(runs_dir); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && it->path() == report_dir) {
      it.disable_recursion_pending();
      continue;
    }
    const auto name = it->path().filename().string();
    if (it->is_regular_file() && (name == "eval.csv" || name == "oracle_study.csv" || name == "grid.csv")) {
      found.push_back(it->path());
    }
  }
  std::sort(found.begin(), found.end());

  ReportSummary summary;
  std::string comparison = "source,row,pAcc,mAcc,mIU,fwIU\n";
  std::map<fs::path, std::string> plots;
  for (const auto& path : found) {
    const auto rel = fs::relative(path, runs_dir).generic_string();
    const auto t = read_csv(path);
    const auto name = path.filename().string();
    if (name == "grid.csv") {
      const auto cnp = t.column("n_p"), cnr = t.column("n_r"), cmiu = t.column("mIU");
      std::string dat = "# n_p n_r mIU\n";
      for (const auto& r : t.rows) dat += r[cnp] + " " + r[cnr] + " " + r[cmiu] + "\n";
      auto stem = fs::relative(path.parent_path(), runs_dir).generic_string();
      std::replace(stem.begin(), stem.end(), '/', '_');
      if (stem == ".") stem = "root";
      plots[report_dir / (stem + "_grid.dat")] = dat;
      continue;
    }
    const auto cp = t.column("pAcc"), cm = t.column("mAcc"), ci = t.column("mIU"), cf = t.column("fwIU");
    for (const auto& r : t.rows) {
      std::string row_name;
      if (name == "eval.csv") {
        row_name = r[t.column("run")] + ":" + r[t.column("mode")] + ":" + r[t.column("filter_order")];
      } else {
        row_name = r[t.column("row")];
      }
      comparison += rel + "," + row_name + "," + r[cp] + "," + r[cm] + "," + r[ci] + "," + r[cf] + "\n";
      ++summary.comparison_rows;
    }
  }
  fs::create_directories(report_dir);
  write_atomic(report_dir / "comparison.csv", comparison);
  for (const auto& [path, dat] : plots) {
    write_atomic(path, dat);
    summary.plot_files.push_back(path);
  }
  return summary;
}

}  // namespace lbseg
