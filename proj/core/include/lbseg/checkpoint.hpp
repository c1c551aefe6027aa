#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lbseg/params.hpp"

namespace lbseg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "LBCK", u32 version, then per tensor: u32 name length, name bytes, u32 rank,
// u64 dims, f64 values. Everything little-endian; tensors in name order.
std::string encode_checkpoint(const ParamStore::Map& tensors);
ParamStore::Map decode_checkpoint(std::string_view bytes);

// Writes to a sibling temp file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const ParamStore::Map& tensors);
ParamStore::Map load_checkpoint(const std::filesystem::path& path);

}  // namespace lbseg
