#pragma once

// Binary cache for ResolventGrid.
//
// Layout (little-endian):
//   char[8]  magic "NCRESLV1"
//   u64      dim M
//   u64      K (index of the last node)
//   u64      content hash
//   u8       diagonal flag
//   f64[K+1] grid nodes
//   f64[...] R blocks, lower-triangular pair order (i, j<=i), each M×M row-major
//   f64[...] ∂R/∂s blocks, same order

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "nctrl/problem.hpp"
#include "nctrl/resolvent.hpp"
#include "nctrl/time_grid.hpp"

namespace nctrl {

static_assert(std::endian::native == std::endian::little, "cache I/O assumes a little-endian host");

/// FNV-1a over raw bytes.
class ContentHash {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ull;
    }
  }
  void real(double v) {
    if (v == 0.0) v = 0.0;  // fold -0.0
    bytes(&v, sizeof v);
  }
  void integer(std::uint64_t v) { bytes(&v, sizeof v); }
  void matrix(const Matrix& m) {
    integer(static_cast<std::uint64_t>(m.rows()));
    integer(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) real(m(r, c));
  }
  void text(const std::string& s) {
    integer(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ull;
};

/// Hash of everything the resolvent depends on: dims, grid nodes, A and ζ sampled on the grid.
inline std::uint64_t resolvent_content_hash(const ProblemSpec& spec, const TimeGrid& grid) {
  ContentHash h;
  h.integer(static_cast<std::uint64_t>(spec.state_dim));
  h.integer(grid.size());
  for (double t : grid.nodes()) h.real(t);
  for (double t : grid.nodes()) h.matrix(spec.a_op(t));
  h.integer(spec.has_kernel() ? 1 : 0);
  if (spec.has_kernel()) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t j = 0; j <= i; ++j) h.matrix(spec.kernel(grid[i], grid[j]));
  }
  return h.value();
}

namespace detail {

constexpr char kCacheMagic[8] = {'N', 'C', 'R', 'E', 'S', 'L', 'V', '1'};

inline void write_blocks(std::ofstream& out, const std::vector<double>& raw, int dim) {
  const std::size_t block = static_cast<std::size_t>(dim) * dim;
  std::vector<double> row(block);
  for (std::size_t b = 0; b < raw.size() / block; ++b) {
    const double* col = raw.data() + b * block;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) row[static_cast<std::size_t>(r) * dim + c] = col[static_cast<std::size_t>(c) * dim + r];
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(block * sizeof(double)));
  }
}

inline bool read_blocks(std::ifstream& in, std::vector<double>& raw, int dim) {
  const std::size_t block = static_cast<std::size_t>(dim) * dim;
  std::vector<double> row(block);
  for (std::size_t b = 0; b < raw.size() / block; ++b) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(block * sizeof(double)))) return false;
    double* col = raw.data() + b * block;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) col[static_cast<std::size_t>(c) * dim + r] = row[static_cast<std::size_t>(r) * dim + c];
  }
  return true;
}

}  // namespace detail

inline void save_resolvent_cache(const std::filesystem::path& path, const ResolventGrid& res, std::uint64_t hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write resolvent cache " + path.string());
  out.write(detail::kCacheMagic, sizeof detail::kCacheMagic);
  const std::uint64_t head[3] = {static_cast<std::uint64_t>(res.dim()),
                                 static_cast<std::uint64_t>(res.grid().last()), hash};
  out.write(reinterpret_cast<const char*>(head), sizeof head);
  const std::uint8_t diag = res.diagonal() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&diag), 1);
  out.write(reinterpret_cast<const char*>(res.grid().nodes().data()),
            static_cast<std::streamsize>(res.grid().size() * sizeof(double)));
  detail::write_blocks(out, res.raw_R(), res.dim());
  detail::write_blocks(out, res.raw_dsR(), res.dim());
  if (!out) throw std::runtime_error("short write on resolvent cache " + path.string());
}

/// Loads a cached grid if the file exists and its hash matches; nullopt otherwise.
inline std::optional<ResolventGrid> load_resolvent_cache(const std::filesystem::path& path, std::uint64_t hash,
                                                         const std::vector<double>& impulse_times = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint64_t head[3];
  std::uint8_t diag = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, detail::kCacheMagic, 8) != 0) return std::nullopt;
  if (!in.read(reinterpret_cast<char*>(head), sizeof head) || head[2] != hash) return std::nullopt;
  if (!in.read(reinterpret_cast<char*>(&diag), 1)) return std::nullopt;
  const int dim = static_cast<int>(head[0]);
  std::vector<double> nodes(head[1] + 1);
  if (!in.read(reinterpret_cast<char*>(nodes.data()), static_cast<std::streamsize>(nodes.size() * sizeof(double)))) {
    return std::nullopt;
  }
  TimeGrid grid(std::move(nodes), impulse_times);
  const std::size_t n = grid.size();
  std::vector<double> r(n * (n + 1) / 2 * static_cast<std::size_t>(dim) * dim);
  std::vector<double> ds(r.size());
  if (!detail::read_blocks(in, r, dim) || !detail::read_blocks(in, ds, dim)) return std::nullopt;
  return ResolventGrid(std::move(grid), dim, std::move(r), std::move(ds), diag != 0);
}

}  // namespace nctrl
