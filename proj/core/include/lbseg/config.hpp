#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lbseg/training.hpp"

namespace lbseg {

// Everything a run needs, read from `section.key = value` lines.
struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 7;
  std::filesystem::path data_path = "data";
  std::filesystem::path out_dir = "runs/run";
  ModelConfig model;
  TrainConfig train;
};

// Sets one key from its textual value. Throws ConfigError for unknown keys
// and unparsable values.
void set_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Blank lines and lines starting with '#' are skipped. Errors name the line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value, in a fixed order. Parsing the result
// gives back an equal config.
std::string format_config(const ExperimentConfig& cfg);

std::vector<std::string> config_keys();

std::string to_string(TrainMode mode);
std::string to_string(FilterOrder order);
std::string to_string(HeadKind kind);
TrainMode parse_train_mode(std::string_view text);
FilterOrder parse_filter_order(std::string_view text);
HeadKind parse_head_kind(std::string_view text);

// Comma-separated numbers, e.g. "0.7,0.8,1".
std::vector<double> parse_double_list(std::string_view text);
std::string format_double(double v);

}  // namespace lbseg
