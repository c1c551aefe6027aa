#include "lbseg/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include "lbseg/dataio.hpp"
#include "lbseg/error.hpp"

namespace lbseg {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw ConfigError("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + std::string(s) + "'");
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

std::vector<std::size_t> parse_size_list(std::string_view s) {
  std::vector<std::size_t> out;
  for (auto part : split(s, ',')) out.push_back(parse_u64(part));
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

// "16x2,32x2"
std::vector<StageConfig> parse_stages(std::string_view s) {
  std::vector<StageConfig> out;
  for (auto part : split(s, ',')) {
    const auto x = part.find('x');
    if (x == std::string_view::npos) throw ConfigError("stage must look like 16x2");
    out.push_back({parse_u64(trim(part.substr(0, x))), parse_u64(trim(part.substr(x + 1)))});
  }
  return out;
}

std::string format_stages(const std::vector<StageConfig>& stages) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    out += (i ? "," : "") + std::to_string(stages[i].channels) + "x" + std::to_string(stages[i].n_convs);
  }
  return out;
}

struct Key {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Table = std::vector<std::pair<std::string, Key>>;

const Table& table() {
  static const Table t = [] {
    Table t;
    auto add = [&](std::string name, Key k) { t.emplace_back(std::move(name), std::move(k)); };
    add("experiment.name", {[](auto& c, auto v) { c.name = std::string(v); },
                            [](const auto& c) { return c.name; }});
    add("experiment.seed", {[](auto& c, auto v) { c.seed = parse_u64(v); },
                            [](const auto& c) { return std::to_string(c.seed); }});
    add("experiment.out", {[](auto& c, auto v) { c.out_dir = std::string(v); },
                           [](const auto& c) { return c.out_dir.string(); }});
    add("data.path", {[](auto& c, auto v) { c.data_path = std::string(v); },
                      [](const auto& c) { return c.data_path.string(); }});
    add("net.stages", {[](auto& c, auto v) { c.model.features.stages = parse_stages(v); },
                       [](const auto& c) { return format_stages(c.model.features.stages); }});
    add("net.dilated_last_stage",
        {[](auto& c, auto v) { c.model.features.dilated_last_stage = parse_bool(v); },
         [](const auto& c) { return format_bool(c.model.features.dilated_last_stage); }});
    add("net.shared_features", {[](auto& c, auto v) { c.model.shared_features = parse_bool(v); },
                                [](const auto& c) { return format_bool(c.model.shared_features); }});
    add("net.classifier_channels",
        {[](auto& c, auto v) { c.model.classifier.channels = parse_u64(v); },
         [](const auto& c) { return std::to_string(c.model.classifier.channels); }});
    add("net.classifier_kernel",
        {[](auto& c, auto v) { c.model.classifier.kernel = parse_u64(v); },
         [](const auto& c) { return std::to_string(c.model.classifier.kernel); }});
    add("net.classifier_dilation",
        {[](auto& c, auto v) { c.model.classifier.dilation = parse_u64(v); },
         [](const auto& c) { return std::to_string(c.model.classifier.dilation); }});
    add("head.kind", {[](auto& c, auto v) { c.model.head.kind = parse_head_kind(v); },
                      [](const auto& c) { return to_string(c.model.head.kind); }});
    add("head.hidden_units", {[](auto& c, auto v) { c.model.head.hidden_units = parse_u64(v); },
                              [](const auto& c) { return std::to_string(c.model.head.hidden_units); }});
    add("head.spp_levels", {[](auto& c, auto v) { c.model.head.spp_levels = parse_size_list(v); },
                            [](const auto& c) { return join_sizes(c.model.head.spp_levels); }});
    add("head.dc_window", {[](auto& c, auto v) { c.model.head.dc_window = parse_u64(v); },
                           [](const auto& c) { return std::to_string(c.model.head.dc_window); }});
    add("head.dc_stride", {[](auto& c, auto v) { c.model.head.dc_stride = parse_u64(v); },
                           [](const auto& c) { return std::to_string(c.model.head.dc_stride); }});
    add("head.dc_channels", {[](auto& c, auto v) { c.model.head.dc_channels = parse_u64(v); },
                             [](const auto& c) { return std::to_string(c.model.head.dc_channels); }});
    add("head.dc_dilation", {[](auto& c, auto v) { c.model.head.dc_dilation = parse_u64(v); },
                             [](const auto& c) { return std::to_string(c.model.head.dc_dilation); }});
    add("head.embed_dim", {[](auto& c, auto v) { c.model.head.embed_dim = parse_u64(v); },
                           [](const auto& c) { return std::to_string(c.model.head.embed_dim); }});
    add("head.meta_source",
        {[](auto& c, auto v) {
           if (v == "ohe") c.model.head.meta_source = MetaSource::kOhe;
           else if (v == "w2v") c.model.head.meta_source = MetaSource::kW2v;
           else throw ConfigError("head.meta_source must be ohe or w2v");
         },
         [](const auto& c) { return std::string(c.model.head.meta_source == MetaSource::kOhe ? "ohe" : "w2v"); }});
    add("filter.order", {[](auto& c, auto v) { c.model.filter.order = parse_filter_order(v); },
                         [](const auto& c) { return to_string(c.model.filter.order); }});
    add("filter.eps", {[](auto& c, auto v) { c.model.filter.eps = parse_double(v); },
                       [](const auto& c) { return format_double(c.model.filter.eps); }});
    add("oracle.saturation", {[](auto& c, auto v) { c.train.oracle_saturation = parse_double(v); },
                              [](const auto& c) { return format_double(c.train.oracle_saturation); }});
    add("train.mode", {[](auto& c, auto v) { c.train.mode = parse_train_mode(v); },
                       [](const auto& c) { return to_string(c.train.mode); }});
    add("train.epochs", {[](auto& c, auto v) { c.train.epochs = parse_u64(v); },
                         [](const auto& c) { return std::to_string(c.train.epochs); }});
    add("train.lr", {[](auto& c, auto v) { c.train.learning_rate = parse_double(v); },
                     [](const auto& c) { return format_double(c.train.learning_rate); }});
    add("train.momentum", {[](auto& c, auto v) { c.train.momentum = parse_double(v); },
                           [](const auto& c) { return format_double(c.train.momentum); }});
    add("train.lambda", {[](auto& c, auto v) { c.train.loss_balance = parse_double(v); },
                         [](const auto& c) { return format_double(c.train.loss_balance); }});
    add("train.auto_balance", {[](auto& c, auto v) { c.train.auto_balance = parse_bool(v); },
                               [](const auto& c) { return format_bool(c.train.auto_balance); }});
    add("train.flip", {[](auto& c, auto v) { c.train.flip_augment = parse_bool(v); },
                       [](const auto& c) { return format_bool(c.train.flip_augment); }});
    add("train.scales", {[](auto& c, auto v) { c.train.scale_set = parse_double_list(v); },
                         [](const auto& c) { return join_doubles(c.train.scale_set); }});
    return t;
  }();
  return t;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (auto part : split(text, ',')) out.push_back(parse_double(part));
  return out;
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kFiltered: return "filtered";
    case TrainMode::kOracle: return "oracle";
    case TrainMode::kMultitask: return "multitask";
  }
  return "?";
}

std::string to_string(FilterOrder order) {
  return order == FilterOrder::kFilterThenUpsample ? "filter_then_upsample" : "upsample_then_filter";
}

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::kSpp: return "spp";
    case HeadKind::kDc: return "dc";
    case HeadKind::kOhe: return "ohe";
    case HeadKind::kW2v: return "w2v";
    case HeadKind::kCombined: return "combined";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view text) {
  for (auto m : {TrainMode::kBaseline, TrainMode::kFiltered, TrainMode::kOracle, TrainMode::kMultitask}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

FilterOrder parse_filter_order(std::string_view text) {
  for (auto o : {FilterOrder::kFilterThenUpsample, FilterOrder::kUpsampleThenFilter}) {
    if (text == to_string(o)) return o;
  }
  throw ConfigError("unknown filter order '" + std::string(text) + "'");
}

HeadKind parse_head_kind(std::string_view text) {
  for (auto k : {HeadKind::kSpp, HeadKind::kDc, HeadKind::kOhe, HeadKind::kW2v, HeadKind::kCombined}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown head kind '" + std::string(text) + "'");
}

void set_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& [name, k] : table()) {
    if (name == key) {
      try {
        k.set(cfg, trim(value));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    try {
      set_config_key(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const FormatError&) {
    throw ConfigError("cannot read config " + path.string());
  }
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, k] : table()) out += name + " = " + k.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, _] : table()) out.push_back(name);
  return out;
}

}  // namespace lbseg
