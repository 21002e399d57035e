#pragma once

// SCEFLD snapshot files: one ASCII header line
//   SCEFLD v1 <dim> <N> <L> <t>
// followed by the samples of each component in turn, row-major, as
// little-endian IEEE-754 doubles. The component count follows from the
// payload size.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sce/fields.hpp"

namespace sce {

struct Snapshot {
  Grid grid;
  double time = 0.0;
  std::vector<ScalarField> components;
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((bits >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return out;
  }
  return bits;
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, double time,
                           const std::vector<ScalarField>& components) {
  if (components.empty()) throw std::invalid_argument("snapshot: no components");
  const Grid& grid = components.front().grid();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path.string());
  char header[256];
  std::snprintf(header, sizeof header, "SCEFLD v1 %d %d %.17g %.17g\n", grid.dim(), grid.n(), grid.length(),
                time);
  out << header;
  for (const auto& c : components) {
    if (!(c.grid() == grid)) throw std::invalid_argument("snapshot: component grids differ");
    for (double v : c.values()) {
      const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!out) throw std::runtime_error("snapshot: write failed for " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic, version;
  int dim = 0, n = 0;
  double length = 0.0, time = 0.0;
  header >> magic >> version >> dim >> n >> length >> time;
  if (!header || magic != "SCEFLD" || version != "v1") {
    throw std::runtime_error("snapshot: bad header in " + path.string());
  }
  Snapshot snap{Grid(dim, n, length), time, {}};
  const std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t per_component = snap.grid.size() * sizeof(double);
  if (payload.empty() || payload.size() % per_component != 0) {
    throw std::runtime_error("snapshot: truncated payload in " + path.string());
  }
  const std::size_t count = payload.size() / per_component;
  for (std::size_t c = 0; c < count; ++c) {
    ScalarField field(snap.grid);
    for (std::size_t i = 0; i < snap.grid.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, payload.data() + c * per_component + i * sizeof bits, sizeof bits);
      field[i] = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    snap.components.push_back(std::move(field));
  }
  return snap;
}

}  // namespace sce
