#include "efrl/field_io.hpp"

#include "efrl/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "snapshot and checkpoint formats assume a little-endian host");

namespace efrl {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'F', 'R', 'L'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError("truncated snapshot: " + path.string());
  }
  return v;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const VelocityField& u, double time) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put(os, kSnapshotVersion);
  put(os, static_cast<std::uint32_t>(u.grid.n));
  put(os, u.grid.side);
  put(os, time);
  const auto bytes = static_cast<std::streamsize>(u.grid.size() * sizeof(double));
  os.write(reinterpret_cast<const char*>(u.ux.values.data()), bytes);
  os.write(reinterpret_cast<const char*>(u.uy.values.data()), bytes);
  if (!os) throw FormatError("write failed: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open snapshot: " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("bad snapshot magic: " + path.string());
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kSnapshotVersion) throw FormatError("unsupported snapshot version");
  const auto n = get<std::uint32_t>(is, path);
  const auto side = get<double>(is, path);
  Snapshot s;
  s.time = get<double>(is, path);
  s.u = VelocityField(GridSpec(static_cast<int>(n), side));
  const auto bytes = static_cast<std::streamsize>(s.u.grid.size() * sizeof(double));
  if (!is.read(reinterpret_cast<char*>(s.u.ux.values.data()), bytes) ||
      !is.read(reinterpret_cast<char*>(s.u.uy.values.data()), bytes)) {
    throw FormatError("truncated snapshot: " + path.string());
  }
  return s;
}

}  // namespace efrl
