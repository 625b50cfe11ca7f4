#include "efrl/dqn.hpp"
#include "efrl/errors.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace efrl {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'F', 'D', 'Q'};
constexpr std::uint32_t kMaxLayers = 64;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated checkpoint");
  return v;
}

void put_params(std::ostream& os, const MlpParams& p) {
  const std::vector<double> flat = p.flatten();
  os.write(reinterpret_cast<const char*>(flat.data()),
           static_cast<std::streamsize>(flat.size() * sizeof(double)));
}

void get_params(std::istream& is, MlpParams& p) {
  std::vector<double> flat(p.num_parameters());
  if (!is.read(reinterpret_cast<char*>(flat.data()),
               static_cast<std::streamsize>(flat.size() * sizeof(double)))) {
    throw FormatError("truncated checkpoint");
  }
  p.unflatten(flat);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params,
                     const AdamState& adam, const std::map<std::string, std::string>& metadata) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put(os, kCheckpointVersion);
  put(os, static_cast<std::uint32_t>(params.sizes.size()));
  for (int s : params.sizes) put(os, static_cast<std::uint32_t>(s));
  put_params(os, params);

  put(os, static_cast<std::uint64_t>(adam.step));
  const MlpParams zeros = MlpParams::zeros(params.sizes);
  put_params(os, adam.m.sizes == params.sizes ? adam.m : zeros);
  put_params(os, adam.v.sizes == params.sizes ? adam.v : zeros);

  std::ostringstream meta;
  for (const auto& [k, v] : metadata) meta << k << '=' << v << '\n';
  const std::string text = meta.str();
  put(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw FormatError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, int expected_input_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint: " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("bad checkpoint magic: " + path.string());
  }
  if (get<std::uint32_t>(is) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  const auto layers = get<std::uint32_t>(is);
  if (layers < 2 || layers > kMaxLayers) throw FormatError("implausible layer count in checkpoint");
  std::vector<int> sizes(layers);
  for (auto& s : sizes) s = static_cast<int>(get<std::uint32_t>(is));
  if (expected_input_dim > 0 && sizes.front() != expected_input_dim) {
    throw ShapeError("checkpoint input width " + std::to_string(sizes.front()) + " != expected " +
                     std::to_string(expected_input_dim));
  }

  Checkpoint c;
  c.params = MlpParams::zeros(sizes);
  get_params(is, c.params);
  c.adam = AdamState::for_params(c.params);
  c.adam.step = static_cast<std::int64_t>(get<std::uint64_t>(is));
  get_params(is, c.adam.m);
  get_params(is, c.adam.v);

  const auto len = get<std::uint64_t>(is);
  std::string text(len, '\0');
  if (len > 0 && !is.read(text.data(), static_cast<std::streamsize>(len))) {
    throw FormatError("truncated checkpoint metadata");
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) c.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return c;
}

}  // namespace efrl
