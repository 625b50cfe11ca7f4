#include "efrl/env.hpp"
#include "efrl/errors.hpp"
#include "efrl/field_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

namespace efrl {

namespace {

std::filesystem::path snapshot_name(const std::filesystem::path& dir, std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06lld", static_cast<long long>(step));
  return dir / buf;
}

}  // namespace

void ReferenceStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (std::int64_t s = 1; s <= count(); ++s) {
    write_snapshot(snapshot_name(dir, s), at(s), static_cast<double>(s) * dt_);
  }
  std::ofstream idx(dir / "index");
  if (!idx) throw FormatError("cannot write reference index in " + dir.string());
  idx.precision(17);
  idx << "n=" << grid_.n << "\nside=" << grid_.side << "\ndt=" << dt_ << "\ncount=" << count() << "\n";
}

ReferenceStore ReferenceStore::load(const std::filesystem::path& dir) {
  std::ifstream idx(dir / "index");
  if (!idx) throw FormatError("missing reference index in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(idx, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"n", "side", "dt", "count"}) {
    if (!kv.contains(key)) throw FormatError(std::string("reference index lacks '") + key + "'");
  }
  ReferenceStore store(GridSpec(std::stoi(kv["n"]), std::stod(kv["side"])), std::stod(kv["dt"]));
  const long long count = std::stoll(kv["count"]);
  store.snapshots_.reserve(static_cast<std::size_t>(count));
  for (long long s = 1; s <= count; ++s) {
    Snapshot snap = read_snapshot(snapshot_name(dir, s));
    if (!(snap.u.grid == store.grid_)) throw FormatError("snapshot grid differs from the index");
    store.snapshots_.push_back(std::move(snap.u));
  }
  return store;
}

}  // namespace efrl
