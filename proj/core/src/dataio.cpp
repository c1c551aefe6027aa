#include "lbseg/dataio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lbseg/error.hpp"
#include "lbseg/rng.hpp"

namespace lbseg {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxSide = 1u << 15;

enum class Pattern { kHStripes, kVStripes, kChecker, kDiagonal, kDots, kPlain };

struct Appearance {
  std::array<double, 3> primary;
  std::array<double, 3> secondary;
  Pattern pattern;
  std::size_t period;
};

const std::array<std::array<double, 3>, 12> kPalette = {{
    {0.85, 0.20, 0.20},
    {0.20, 0.70, 0.25},
    {0.20, 0.35, 0.85},
    {0.90, 0.80, 0.15},
    {0.75, 0.25, 0.80},
    {0.15, 0.80, 0.80},
    {0.95, 0.55, 0.10},
    {0.55, 0.35, 0.15},
    {0.95, 0.60, 0.70},
    {0.45, 0.60, 0.10},
    {0.10, 0.20, 0.45},
    {0.60, 0.60, 0.95},
}};

const std::array<std::string_view, 12> kClassNames = {
    "background", "crate", "barrel", "cone", "drum", "slab",
    "ring",       "post",  "tile",   "block", "wheel", "vase"};

const std::array<std::string_view, 9> kBaseVocabulary = {
    "a", "photo", "of", "and", "with", "small", "large", "bright", "dark"};
constexpr std::size_t kFirstFiller = 5;
constexpr std::size_t kFillerCount = 4;

Appearance class_appearance(std::size_t c) {
  if (c == 0) return {{0.45, 0.45, 0.42}, {0.50, 0.48, 0.45}, Pattern::kPlain, 1};
  std::array<double, 3> primary{};
  if (c - 1 < kPalette.size()) {
    primary = kPalette[c - 1];
  } else {
    SplitMix64 rng(derive_seed(0, "class-color", c));
    for (auto& v : primary) v = rng.uniform(0.1, 0.95);
  }
  std::array<double, 3> secondary{};
  for (std::size_t ch = 0; ch < 3; ++ch) secondary[ch] = primary[ch] * 0.5 + 0.05;
  const auto pattern = static_cast<Pattern>((c - 1) % 6);
  return {primary, secondary, pattern, 3 + (c % 3)};
}

bool pattern_on(Pattern p, std::size_t period, std::size_t i, std::size_t j) {
  switch (p) {
    case Pattern::kHStripes: return (i / period) % 2 == 0;
    case Pattern::kVStripes: return (j / period) % 2 == 0;
    case Pattern::kChecker: return ((i / period) + (j / period)) % 2 == 0;
    case Pattern::kDiagonal: return ((i + j) / period) % 2 == 0;
    case Pattern::kDots: return (i % (2 * period)) < period / 2 + 1 && (j % (2 * period)) < period / 2 + 1;
    case Pattern::kPlain: return true;
  }
  return true;
}

enum class ShapeKind { kRect, kEllipse, kTriangle };

struct ShapeSpec {
  ShapeKind kind;
  double top, left, height, width;
};

bool shape_contains(const ShapeSpec& s, std::size_t i, std::size_t j) {
  const double y = static_cast<double>(i) + 0.5;
  const double x = static_cast<double>(j) + 0.5;
  switch (s.kind) {
    case ShapeKind::kRect:
      return y >= s.top && y < s.top + s.height && x >= s.left && x < s.left + s.width;
    case ShapeKind::kEllipse: {
      const double ry = s.height / 2, rx = s.width / 2;
      const double dy = (y - (s.top + ry)) / ry, dx = (x - (s.left + rx)) / rx;
      return dy * dy + dx * dx <= 1.0;
    }
    case ShapeKind::kTriangle: {
      // apex top-centre, base along the bottom edge
      const double ax = s.left + s.width / 2, ay = s.top;
      const double bx = s.left, by = s.top + s.height;
      const double cx = s.left + s.width, cy = s.top + s.height;
      const double d1 = (x - bx) * (ay - by) - (ax - bx) * (y - by);
      const double d2 = (x - cx) * (by - cy) - (bx - cx) * (y - cy);
      const double d3 = (x - ax) * (cy - ay) - (cx - ax) * (y - ay);
      const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
      const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
      return !(neg && pos);
    }
  }
  return false;
}

double quantize(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<double>(static_cast<int>(v * 255.0 + 0.5)) / 255.0;
}

// Triangular noise in (-amp, amp) from two uniforms; no transcendental calls.
double noise(SplitMix64& rng, double amp) { return amp * (rng.uniform() + rng.uniform() - 1.0); }

void paint(RgbImage& img, const Appearance& a, std::size_t i, std::size_t j, double jitter,
           SplitMix64& rng) {
  const auto& col = pattern_on(a.pattern, a.period, i, j) ? a.primary : a.secondary;
  for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, i, j) = col[ch] + jitter + noise(rng, 0.08);
}

std::vector<std::string> make_vocabulary(const std::vector<std::string>& class_names) {
  std::vector<std::string> v(kBaseVocabulary.begin(), kBaseVocabulary.end());
  v.insert(v.end(), class_names.begin(), class_names.end());
  return v;
}

Sample generate_sample(const SyntheticConfig& cfg, const Dataset& ds, std::uint64_t seed,
                       std::size_t quota_class) {
  SplitMix64 rng(seed);
  const std::size_t h = cfg.height, w = cfg.width;
  Sample s{RgbImage(h, w), LabelImage(h, w, 0), {}};

  const Appearance bg = class_appearance(0);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) paint(s.image, bg, i, j, 0.0, rng);
  }

  const std::size_t n_shapes = 1 + static_cast<std::size_t>(rng.below(3));
  for (std::size_t n = 0; n < n_shapes; ++n) {
    // The last shape is drawn on top and carries the per-image quota class.
    const std::size_t cls =
        n + 1 == n_shapes ? quota_class : 1 + static_cast<std::size_t>(rng.below(cfg.k - 1));
    ShapeSpec shape{};
    shape.kind = static_cast<ShapeKind>(rng.below(3));
    shape.height = rng.uniform(static_cast<double>(h) / 4, static_cast<double>(h) / 2);
    shape.width = rng.uniform(static_cast<double>(w) / 4, static_cast<double>(w) / 2);
    shape.top = rng.uniform(0.0, static_cast<double>(h) - shape.height);
    shape.left = rng.uniform(0.0, static_cast<double>(w) - shape.width);
    const bool distract = rng.bernoulli(cfg.distractor_rate);
    const Appearance look = class_appearance(distract ? confusable_class(cls, cfg.k) : cls);
    const double jitter = rng.uniform(-0.05, 0.05);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (!shape_contains(shape, i, j)) continue;
        paint(s.image, look, i, j, jitter, rng);
        s.labels.at(i, j) = static_cast<std::uint8_t>(cls);
      }
    }
  }
  for (auto& v : s.image.pixels) v = quantize(v);

  std::set<std::size_t> present;
  for (auto l : s.labels.labels) present.insert(l);
  const auto attrs = derive_attributes(present, ds.taxonomy);
  s.meta.attributes.assign(attrs.begin(), attrs.end());

  const std::size_t class_word = kBaseVocabulary.size();
  auto& cap = s.meta.caption;
  cap = {0, 1, 2};  // a photo of
  bool first = true;
  for (std::size_t c : present) {
    if (c == 0) continue;
    if (!first) cap.push_back(3);  // and
    first = false;
    if (rng.bernoulli(0.5)) cap.push_back(kFirstFiller + static_cast<std::size_t>(rng.below(kFillerCount)));
    cap.push_back(class_word + c);
  }
  if (present.count(0) != 0) {
    if (!first) cap.push_back(4);  // with
    cap.push_back(class_word);
  }
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::size_t parse_size(std::string_view tok, const std::string& what) {
  std::size_t v = 0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end) throw FormatError("bad " + what + ": '" + std::string(tok) + "'");
  return v;
}

// Parses "<magic> <w> <h> <maxval>" with '#' comments; returns payload offset.
std::size_t parse_netpbm_header(std::string_view bytes, std::string_view magic, std::size_t& w,
                                std::size_t& h) {
  if (bytes.substr(0, 2) != magic) {
    throw FormatError("expected netpbm magic " + std::string(magic));
  }
  std::size_t pos = 2;
  std::array<std::size_t, 3> fields{};
  for (auto& field : fields) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      if (pos - start > 9) throw FormatError("netpbm header field overflows");
      ++pos;
    }
    if (pos == start) throw FormatError("truncated netpbm header");
    field = parse_size(bytes.substr(start, pos - start), "netpbm header field");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("netpbm header must end with one whitespace byte");
  }
  ++pos;
  w = fields[0];
  h = fields[1];
  if (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide) {
    throw FormatError("netpbm dimensions out of range: " + std::to_string(w) + "x" + std::to_string(h));
  }
  if (fields[2] != 255) throw FormatError("netpbm maxval must be 255, got " + std::to_string(fields[2]));
  return pos;
}

std::string netpbm_header(std::string_view magic, std::size_t w, std::size_t h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

std::string indexed_name(std::string_view prefix, std::size_t i, std::string_view ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return std::string(prefix) + "_" + buf + std::string(ext);
}

}  // namespace

std::array<std::array<double, 3>, 2> class_colours(std::size_t c) {
  const auto a = class_appearance(c);
  return {a.primary, a.secondary};
}

std::size_t confusable_class(std::size_t c, std::size_t k) {
  if (c == 0) return 0;
  if (c % 2 == 1) return c + 1 < k ? c + 1 : c - 1 >= 1 ? c - 1 : c;
  return c - 1;
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.k < 3) throw ConfigError("synthetic data needs k >= 3");
  if (cfg.k > kIgnore) throw ConfigError("k must be below the ignore label");
  if (cfg.height < 32 || cfg.width < 32) throw ConfigError("synthetic images must be at least 32x32");
  if (cfg.height > kMaxSide || cfg.width > kMaxSide) throw ConfigError("synthetic image too large");
  if (!(cfg.distractor_rate >= 0.0 && cfg.distractor_rate <= 1.0)) {
    throw ConfigError("distractor rate must lie in [0,1]");
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.k = cfg.k;
  for (std::size_t c = 0; c < cfg.k; ++c) {
    ds.class_names.push_back(c < kClassNames.size() ? std::string(kClassNames[c])
                                                     : "class" + std::to_string(c));
  }
  // Two-level taxonomy. Level-one groups interleave classes so confusable
  // partners land in different groups; level two folds groups by parity.
  const std::size_t groups = cfg.k / 2;  // object groups
  ds.n_attributes = groups + 1 + 3;
  ds.taxonomy.resize(cfg.k);
  ds.taxonomy[0] = {groups, groups + 1 + 2};
  for (std::size_t c = 1; c < cfg.k; ++c) {
    const std::size_t g = (c - 1) % groups;
    ds.taxonomy[c] = {g, groups + 1 + g % 2};
  }
  ds.vocabulary = make_vocabulary(ds.class_names);

  auto make_split = [&](std::string_view label, std::size_t n) {
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(generate_sample(cfg, ds, derive_seed(cfg.seed, label, i), 1 + i % (cfg.k - 1)));
    }
    return out;
  };
  ds.train = make_split("train", cfg.n_train);
  ds.val = make_split("val", cfg.n_val);
  return ds;
}

std::set<std::size_t> derive_attributes(const std::set<std::size_t>& classes,
                                        const std::vector<std::vector<std::size_t>>& taxonomy) {
  std::set<std::size_t> out;
  for (std::size_t c : classes) {
    if (c >= taxonomy.size()) throw DomainError("class " + std::to_string(c) + " not in taxonomy");
    out.insert(taxonomy[c].begin(), taxonomy[c].end());
  }
  return out;
}

void validate_dataset(const Dataset& ds) {
  if (ds.k < 2 || ds.k > kIgnore) throw FormatError("dataset k out of range");
  if (ds.class_names.size() != ds.k) throw FormatError("class name count differs from k");
  if (ds.taxonomy.size() != ds.k) throw FormatError("taxonomy does not cover every class");
  for (const auto& anc : ds.taxonomy) {
    for (auto a : anc) {
      if (a >= ds.n_attributes) throw FormatError("taxonomy attribute id out of range");
    }
  }
  auto check = [&](const std::vector<Sample>& split, const char* name) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      const Sample& s = split[i];
      const std::string where = std::string(name) + " sample " + std::to_string(i);
      if (s.image.pixels.size() != 3 * s.image.height * s.image.width) {
        throw FormatError(where + ": image buffer size mismatch");
      }
      for (double v : s.image.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError(where + ": pixel outside [0,1]");
      }
      if (s.labels.height != s.image.height || s.labels.width != s.image.width ||
          s.labels.labels.size() != s.labels.height * s.labels.width) {
        throw FormatError(where + ": label map does not match image");
      }
      bool any = false;
      for (auto l : s.labels.labels) {
        if (l == kIgnore) continue;
        if (l >= ds.k) throw FormatError(where + ": label >= k");
        any = true;
      }
      if (!any) throw FormatError(where + ": no labelled pixel");
      for (auto a : s.meta.attributes) {
        if (a >= ds.n_attributes) throw FormatError(where + ": attribute id out of range");
      }
      if (s.meta.caption.empty()) throw FormatError(where + ": empty caption");
      for (auto wd : s.meta.caption) {
        if (wd >= ds.vocabulary.size()) throw FormatError(where + ": word id out of range");
      }
    }
  };
  check(ds.train, "train");
  check(ds.val, "val");
}

std::string encode_pgm(const LabelImage& img) {
  std::string out = netpbm_header("P5", img.width, img.height);
  out.append(img.labels.begin(), img.labels.end());
  return out;
}

LabelImage decode_pgm(std::string_view bytes, std::optional<std::size_t> k) {
  std::size_t w = 0, h = 0;
  const std::size_t pos = parse_netpbm_header(bytes, "P5", w, h);
  if (bytes.size() - pos < w * h) throw FormatError("truncated P5 payload");
  LabelImage img(h, w);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[pos + i]);
    if (k && v != kIgnore && v >= *k) {
      throw FormatError("label value " + std::to_string(v) + " >= k=" + std::to_string(*k));
    }
    img.labels[i] = v;
  }
  return img;
}

std::string encode_ppm(const RgbImage& img) {
  std::string out = netpbm_header("P6", img.width, img.height);
  out.reserve(out.size() + 3 * img.width * img.height);
  for (std::size_t i = 0; i < img.height; ++i) {
    for (std::size_t j = 0; j < img.width; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, i, j), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<int>(v * 255.0 + 0.5)));
      }
    }
  }
  return out;
}

RgbImage decode_ppm(std::string_view bytes) {
  std::size_t w = 0, h = 0;
  const std::size_t pos = parse_netpbm_header(bytes, "P6", w, h);
  if (bytes.size() - pos < 3 * w * h) throw FormatError("truncated P6 payload");
  RgbImage img(h, w);
  std::size_t p = pos;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(c, i, j) = static_cast<double>(static_cast<unsigned char>(bytes[p++])) / 255.0;
      }
    }
  }
  return img;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

void write_label_image(const fs::path& path, const LabelImage& img) { write_file(path, encode_pgm(img)); }

LabelImage read_label_image(const fs::path& path, std::optional<std::size_t> k) {
  try {
    return decode_pgm(read_file(path), k);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_rgb_image(const fs::path& path, const RgbImage& img) { write_file(path, encode_ppm(img)); }

RgbImage read_rgb_image(const fs::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string encode_meta(const MetaRecord& meta, const std::vector<std::string>& vocabulary) {
  std::string out = "attrs:";
  for (auto a : meta.attributes) out += " " + std::to_string(a);
  out += "\ncaption:";
  for (auto wd : meta.caption) {
    if (wd >= vocabulary.size()) throw FormatError("caption word id out of vocabulary");
    out += " " + vocabulary[wd];
  }
  out += "\n";
  return out;
}

MetaRecord decode_meta(std::string_view text, const std::vector<std::string>& vocabulary,
                       std::size_t n_attributes) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index.emplace(vocabulary[i], i);
  MetaRecord meta;
  bool seen_attrs = false, seen_caption = false;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (line.starts_with("attrs:")) {
      seen_attrs = true;
      std::set<std::size_t> ids;
      for (auto tok : split_ws(line.substr(6))) {
        const auto id = parse_size(tok, "attribute id");
        if (id >= n_attributes) throw FormatError("attribute id out of range");
        ids.insert(id);
      }
      meta.attributes.assign(ids.begin(), ids.end());
    } else if (line.starts_with("caption:")) {
      seen_caption = true;
      for (auto tok : split_ws(line.substr(8))) {
        auto it = index.find(tok);
        if (it == index.end()) throw FormatError("unknown caption word '" + std::string(tok) + "'");
        meta.caption.push_back(it->second);
      }
    } else {
      throw FormatError("unexpected meta line '" + std::string(line) + "'");
    }
  }
  if (!seen_attrs || !seen_caption) throw FormatError("meta file needs attrs: and caption: lines");
  return meta;
}

void write_dataset(const fs::path& root, const Dataset& ds) {
  fs::create_directories(root / "train");
  fs::create_directories(root / "val");
  std::ostringstream m;
  m << "name " << ds.name << "\n";
  m << "k " << ds.k << "\n";
  for (std::size_t c = 0; c < ds.k; ++c) m << "class " << c << " " << ds.class_names[c] << "\n";
  m << "attributes " << ds.n_attributes << "\n";
  for (std::size_t c = 0; c < ds.k; ++c) {
    for (auto a : ds.taxonomy[c]) m << "class " << c << " ancestor " << a << "\n";
  }
  for (std::size_t i = 0; i < ds.vocabulary.size(); ++i) m << "vocab " << i << " " << ds.vocabulary[i] << "\n";
  m << "split train " << ds.train.size() << "\n";
  m << "split val " << ds.val.size() << "\n";
  write_file(root / "manifest.txt", m.str());

  auto write_split = [&](const std::vector<Sample>& split, const fs::path& dir) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      write_rgb_image(dir / indexed_name("img", i, ".ppm"), split[i].image);
      write_label_image(dir / indexed_name("lbl", i, ".pgm"), split[i].labels);
      write_file(dir / indexed_name("meta", i, ".txt"), encode_meta(split[i].meta, ds.vocabulary));
    }
  };
  write_split(ds.train, root / "train");
  write_split(ds.val, root / "val");
}

Dataset read_dataset(const fs::path& root) {
  const std::string manifest = read_file(root / "manifest.txt");
  Dataset ds;
  std::map<std::size_t, std::string> names;
  std::map<std::size_t, std::vector<std::size_t>> ancestors;
  std::map<std::size_t, std::string> vocab;
  std::size_t n_train = 0, n_val = 0;
  bool have_k = false;
  std::istringstream in(manifest);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto tok = split_ws(raw);
    if (tok.empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    if (tok[0] == "name" && tok.size() == 2) {
      ds.name = tok[1];
    } else if (tok[0] == "k" && tok.size() == 2) {
      ds.k = parse_size(tok[1], "k");
      have_k = true;
    } else if (tok[0] == "class" && tok.size() == 3) {
      names[parse_size(tok[1], "class id")] = tok[2];
    } else if (tok[0] == "class" && tok.size() == 4 && tok[2] == "ancestor") {
      ancestors[parse_size(tok[1], "class id")].push_back(parse_size(tok[3], "ancestor id"));
    } else if (tok[0] == "attributes" && tok.size() == 2) {
      ds.n_attributes = parse_size(tok[1], "attribute count");
    } else if (tok[0] == "vocab" && tok.size() == 3) {
      vocab[parse_size(tok[1], "vocab id")] = tok[2];
    } else if (tok[0] == "split" && tok.size() == 3 && tok[1] == "train") {
      n_train = parse_size(tok[2], "train count");
    } else if (tok[0] == "split" && tok.size() == 3 && tok[1] == "val") {
      n_val = parse_size(tok[2], "val count");
    } else {
      throw FormatError(where + ": unrecognised '" + raw + "'");
    }
  }
  if (!have_k || ds.k < 2 || ds.k > kIgnore) throw FormatError("manifest lacks a valid k");
  for (std::size_t c = 0; c < ds.k; ++c) {
    auto it = names.find(c);
    if (it == names.end()) throw FormatError("manifest lacks name of class " + std::to_string(c));
    ds.class_names.push_back(it->second);
    ds.taxonomy.push_back(ancestors[c]);
  }
  if (names.size() != ds.k) throw FormatError("manifest names classes beyond k");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto it = vocab.find(i);
    if (it == vocab.end()) throw FormatError("vocabulary ids are not contiguous");
    ds.vocabulary.push_back(it->second);
  }

  auto read_split = [&](const fs::path& dir, std::size_t n) {
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      s.image = read_rgb_image(dir / indexed_name("img", i, ".ppm"));
      s.labels = read_label_image(dir / indexed_name("lbl", i, ".pgm"), ds.k);
      s.meta = decode_meta(read_file(dir / indexed_name("meta", i, ".txt")), ds.vocabulary,
                           ds.n_attributes);
      out.push_back(std::move(s));
    }
    return out;
  };
  ds.train = read_split(root / "train", n_train);
  ds.val = read_split(root / "val", n_val);
  validate_dataset(ds);
  return ds;
}

}  // namespace lbseg
