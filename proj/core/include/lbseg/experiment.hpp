#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lbseg/config.hpp"
#include "lbseg/dataio.hpp"
#include "lbseg/training.hpp"

namespace lbseg {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

// Maps the error hierarchy onto exit codes.
int exit_code_for(const std::exception& e);

// Writes the dataset under a temporary sibling directory and renames it to
// `out`. An existing `out` is replaced.
void gen_data(const SyntheticConfig& cfg, const std::filesystem::path& out);

struct TrainRun {
  TrainResult result;
  std::filesystem::path dir;
};

// Trains per `cfg` and writes config.txt, metrics.tsv, best.lbck and
// last.lbck into cfg.out_dir. Progress lines go to `progress` when given.
TrainRun run_training(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

// Rebuilds the model a checkpoint belongs to from config.txt in the same
// directory and loads the weights.
Model load_model(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg,
                 const Dataset& ds);

struct EvalRequest {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data;  // defaults to the run's data.path
  std::optional<TrainMode> mode;              // defaults to the run's train.mode
  std::optional<FilterOrder> order;
  std::optional<std::filesystem::path> out;   // defaults to <checkpoint dir>/eval.csv
};

struct EvalReport {
  TrainMode mode = TrainMode::kFiltered;
  FilterOrder order = FilterOrder::kFilterThenUpsample;
  EvalResult result;
  std::filesystem::path csv;
};

EvalReport run_eval(const EvalRequest& req);
std::string eval_csv_header();
std::string eval_csv_row(const std::string& run, const std::string& checkpoint, const EvalReport& report);

struct OracleStudyRow {
  std::string name;
  Scores scores;
};

// Trains baseline, filtered and oracle variants of `cfg` under
// cfg.out_dir/{baseline,filtered,oracle}, evaluates each best checkpoint on
// val and writes cfg.out_dir/oracle_study.csv.
std::vector<OracleStudyRow> run_oracle_study(const ExperimentConfig& cfg,
                                             std::ostream* progress = nullptr);

struct GridRequest {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data;
  std::vector<double> np_list{0, 1, 2, 3, 4, 5};
  std::vector<double> nr_list{0, 1, 2, 3, 4, 5};
  std::uint64_t seed = 7;
  std::optional<std::filesystem::path> out;  // defaults to <checkpoint dir>/grid.csv
  std::size_t threads = 0;                    // 0: LABELBANK_THREADS or hardware
};

struct GridCell {
  double n_p = 0.0;
  double n_r = 0.0;
  Scores scores;
  PrecisionRecall micro;
  PrecisionRecall macro;
};

std::vector<GridCell> run_noisy_grid(const GridRequest& req);

// Uncontaminated oracle-filtered evaluation through the same path the grid
// uses.
GridCell evaluate_grid_cell(const std::vector<Inference>& inferred, const std::vector<Sample>& split,
                            std::size_t k, double n_p, double n_r, std::uint64_t seed,
                            double saturation, const FilterMode& filter);

std::size_t grid_thread_count(std::size_t requested);

struct ReportSummary {
  std::size_t comparison_rows = 0;
  std::vector<std::filesystem::path> plot_files;
};

// Collects eval.csv, oracle_study.csv and grid.csv files below `runs_dir`
// into runs_dir/report/comparison.csv and one gnuplot .dat per grid.
ReportSummary run_report(const std::filesystem::path& runs_dir);

// Writes `bytes` to a temp sibling of `path` and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace lbseg
