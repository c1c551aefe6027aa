#include "lbseg/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "lbseg/dataio.hpp"
#include "lbseg/error.hpp"

namespace lbseg {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint code assumes little-endian");

constexpr std::string_view kMagic = "LBCK";

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  bool done() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParamStore::Map& tensors) {
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    const auto data = t.data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  }
  return out;
}

ParamStore::Map decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ParamStore::Map out;
  while (!r.done()) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.take(name_len));
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError("bad rank for tensor " + name);
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      const auto v = r.get<std::uint64_t>();
      if (v == 0 || v > (std::uint64_t{1} << 32) || n > (std::size_t{1} << 40) / v) {
        throw FormatError("bad dimension for tensor " + name);
      }
      d = v;
      n *= v;
    }
    const auto raw = r.take(n * sizeof(double));
    std::vector<double> values(n);
    std::memcpy(values.data(), raw.data(), raw.size());
    if (!out.emplace(name, Tensor(shape, std::move(values))).second) {
      throw FormatError("duplicate tensor " + name);
    }
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore::Map& tensors) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, encode_checkpoint(tensors));
  std::filesystem::rename(tmp, path);
}

ParamStore::Map load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace lbseg
