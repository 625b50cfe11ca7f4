#pragma once

// Binary velocity snapshot:
//   "EFRL" | u32 version | u32 n | f64 side | f64 time | n*n f64 ux | n*n f64 uy
// All values little-endian, fields row-major (x fastest).

#include "efrl/fields.hpp"

#include <cstdint>
#include <filesystem>

namespace efrl {

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  VelocityField u;
  double time = 0.0;
};

void write_snapshot(const std::filesystem::path& path, const VelocityField& u, double time);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace efrl
