#pragma once

// Truncated cylindrical Wiener process and the multiplicative noise
// coefficients G_k(x, rho, q) = a_k(x) rho + A_k(x) q.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "sce/fields.hpp"
#include "sce/thermo.hpp"

namespace sce {

/// Axis-aligned box inside the torus.
struct Box {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  bool contains(std::span<const double> x) const {
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (x[d] < lo[d] || x[d] > hi[d]) return false;
    }
    return true;
  }
  double min_side(int dim) const {
    double s = hi[0] - lo[0];
    if (dim == 2) s = std::min(s, hi[1] - lo[1]);
    return s;
  }
};

/// C-infinity bump exp(1 - 1/(1 - |x-x0|^2/w^2)), equal to 1 at the center
/// and vanishing identically outside the ball of radius w.
inline double bump(std::span<const double> x, std::span<const double> center, double width) {
  double s2 = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double t = (x[d] - center[d]) / width;
    s2 += t * t;
  }
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

/// Quintic smoothstep cut-off: 1 on [0,R], 0 on [R+1, inf), C^2 in between.
inline double phi_cutoff(double y, double R) {
  if (y <= R) return 1.0;
  if (y >= R + 1.0) return 0.0;
  const double t = y - R;
  return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// phi_R(rho) phi_R(1/rho); identically 1 when no cut-off is configured.
inline double cutoff_weight(double rho, std::optional<double> R) {
  if (!R) return 1.0;
  if (rho <= 0.0) return 0.0;
  return phi_cutoff(rho, *R) * phi_cutoff(1.0 / rho, *R);
}

struct NoiseSpec {
  int modes = 8;
  double alpha0 = 0.1;
  Box support{{0.0, 0.0}, {1.0, 1.0}};
  std::optional<double> cutoff;
  double matrix_scale = 0.5;   // A_k = matrix_scale * amplitude_k * bump_k * I
  int derivative_order = 3;    // derivatives covered by the recorded bound alpha_k
};

/// User-supplied nodal coefficient: out = G_k(x, rho, q).
using NodalCoefficient =
    std::function<void(std::span<const double> x, double rho, std::span<const double> q, std::span<double> out)>;

class NoiseModel {
 public:
  NoiseModel() = default;

  /// Noise-free model on `grid`.
  explicit NoiseModel(const Grid& grid) : grid_(grid) {}

  /// Linear family: bumps of width min_side/4 placed inside the support box
  /// at K-independent low-discrepancy centers, amplitude alpha0 k^-2.
  static NoiseModel linear(const Grid& grid, const NoiseSpec& spec) {
    if (spec.modes < 0) throw std::invalid_argument("noise: mode count must be >= 0");
    const int dim = grid.dim();
    for (int d = 0; d < dim; ++d) {
      if (!(spec.support.lo[d] >= 0.0 && spec.support.hi[d] <= grid.length() &&
            spec.support.lo[d] < spec.support.hi[d])) {
        throw std::invalid_argument("noise: support box must lie inside the torus");
      }
    }
    NoiseModel m(grid);
    m.support_ = spec.support;
    m.cutoff_ = spec.cutoff;
    const double width = spec.support.min_side(dim) / 4.0;
    constexpr std::array<double, 2> step{0.7548776662466927, 0.5698402909980532};
    for (int k = 1; k <= spec.modes; ++k) {
      std::array<double, 2> center{};
      for (int d = 0; d < dim; ++d) {
        const double frac = std::fmod(0.5 + k * step[d], 1.0);
        const double span = spec.support.hi[d] - spec.support.lo[d] - 2.0 * width;
        center[d] = spec.support.lo[d] + width + frac * span;
      }
      const double amplitude = spec.alpha0 / (static_cast<double>(k) * k);
      const ScalarField profile = ScalarField::sample(grid, [&](std::span<const double> x) {
        return amplitude * bump(x, std::span<const double>(center.data(), dim), width);
      });
      VectorField a(grid);
      a[(k - 1) % dim] = profile;
      std::vector<ScalarField> A(static_cast<std::size_t>(dim * dim), ScalarField(grid));
      for (int d = 0; d < dim; ++d) A[static_cast<std::size_t>(d * dim + d)] = spec.matrix_scale * profile;
      m.amplitude_.push_back(amplitude);
      m.a_.push_back(std::move(a));
      m.A_.push_back(std::move(A));
    }
    for (int k = 0; k < spec.modes; ++k) m.alpha_.push_back(m.derivative_bound(k, spec.derivative_order));
    m.build_mask();
    return m;
  }

  /// Closure-backed family; `alpha` are the caller's bounds for each mode.
  static NoiseModel custom(const Grid& grid, std::vector<NodalCoefficient> coefficients, const Box& support,
                           std::vector<double> alpha, std::optional<double> cutoff = std::nullopt) {
    if (alpha.size() != coefficients.size()) throw std::invalid_argument("noise: one bound per mode required");
    NoiseModel m(grid);
    m.support_ = support;
    m.cutoff_ = cutoff;
    m.alpha_ = std::move(alpha);
    m.amplitude_ = m.alpha_;
    m.closures_ = std::move(coefficients);
    m.build_mask();
    return m;
  }

  const Grid& grid() const { return grid_; }
  int modes() const { return static_cast<int>(alpha_.size()); }
  bool is_linear() const { return closures_.empty(); }
  const Box& support() const { return support_; }
  std::optional<double> cutoff() const { return cutoff_; }
  void set_cutoff(std::optional<double> R) { cutoff_ = R; }
  double alpha(int k) const { return alpha_.at(static_cast<std::size_t>(k)); }
  double alpha_sum() const {
    double s = 0.0;
    for (double v : alpha_) s += v;
    return s;
  }
  double amplitude(int k) const { return amplitude_.at(static_cast<std::size_t>(k)); }
  const VectorField& a(int k) const { return a_.at(static_cast<std::size_t>(k)); }
  /// Entry (i, j) of A_k.
  const ScalarField& A(int k, int i, int j) const {
    return A_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(i * grid_.dim() + j));
  }
  /// True at nodes inside the support box.
  const std::vector<bool>& support_mask() const { return mask_; }

  /// Pointwise Frobenius norm of A_k, maximized over the grid.
  double matrix_sup(int k) const {
    if (!is_linear()) throw std::logic_error("noise: matrix_sup needs the linear family");
    double m = 0.0;
    const int dim = grid_.dim();
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double s = 0.0;
      for (int e = 0; e < dim * dim; ++e) s += A_[k][e][i] * A_[k][e][i];
      m = std::max(m, std::sqrt(s));
    }
    return m;
  }

  /// Nodal G_k(x_i, rho, q) written to out (size dim).
  void evaluate(int k, std::size_t node, double rho, std::span<const double> q, std::span<double> out) const {
    const int dim = grid_.dim();
    if (!is_linear()) {
      double x[2] = {0.0, 0.0};
      for (int d = 0; d < dim; ++d) x[d] = grid_.coordinate(node, d);
      closures_[k](std::span<const double>(x, dim), rho, q, out);
      return;
    }
    for (int i = 0; i < dim; ++i) {
      double v = a_[k][i][node] * rho;
      for (int j = 0; j < dim; ++j) v += A_[k][i * dim + j][node] * q[j];
      out[i] = v;
    }
  }

 private:
  // max over entries and multi-indices |beta| <= order of sup |d^beta entry|,
  // including the pointwise Frobenius norm of A_k.
  double derivative_bound(int k, int order) const {
    const int dim = grid_.dim();
    std::vector<ScalarField> entries;
    for (int i = 0; i < dim; ++i) entries.push_back(a_[k][i]);
    for (const auto& e : A_[k]) entries.push_back(e);
    double bound = matrix_sup(k);
    for (const auto& e : entries) {
      std::vector<ScalarField> level{e};
      for (int l = 0; l <= order; ++l) {
        std::vector<ScalarField> next;
        for (const auto& f : level) {
          bound = std::max(bound, sup_norm(f));
          if (l == order) continue;
          next.push_back(derivative(f, 0));
          if (dim == 2) next.push_back(derivative(f, 1));
        }
        level = std::move(next);
      }
    }
    return bound;
  }

  void build_mask() {
    mask_.assign(grid_.size(), false);
    double x[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      for (int d = 0; d < grid_.dim(); ++d) x[d] = grid_.coordinate(i, d);
      mask_[i] = support_.contains(std::span<const double>(x, grid_.dim()));
    }
  }

  Grid grid_;
  Box support_;
  std::optional<double> cutoff_;
  std::vector<double> alpha_;
  std::vector<double> amplitude_;
  std::vector<VectorField> a_;
  std::vector<std::vector<ScalarField>> A_;
  std::vector<NodalCoefficient> closures_;
  std::vector<bool> mask_;
};

namespace noise {

inline void check_mode(const NoiseModel& model, int k) {
  if (k < 0 || k >= model.modes()) throw std::out_of_range("noise: mode index out of range");
}

/// G(rho, q) e_k, nodewise.
inline VectorField apply_G(const NoiseModel& model, const ScalarField& rho, const VectorField& q, int k) {
  check_mode(model, k);
  require_valid(rho);
  require_valid(q);
  const Grid& grid = rho.grid();
  const int dim = grid.dim();
  VectorField out(grid);
  double qn[2] = {0.0, 0.0};
  double g[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int d = 0; d < dim; ++d) qn[d] = q[d][i];
    model.evaluate(k, i, rho[i], std::span<const double>(qn, dim), std::span<double>(g, dim));
    for (int d = 0; d < dim; ++d) out[d][i] = g[d];
  }
  return out;
}

/// Momentum noise coefficient actually injected by the solver:
/// phi_R(rho) phi_R(1/rho) G(rho, q) e_k (plain G when no cut-off is set).
inline VectorField effective_G(const NoiseModel& model, const ScalarField& rho, const VectorField& q, int k) {
  VectorField g = apply_G(model, rho, q, k);
  if (model.cutoff()) g *= rho.map([&](double r) { return cutoff_weight(r, model.cutoff()); });
  return g;
}

/// F_R(r, u) e_k = rho(r)^{-1} phi_R(rho) phi_R(1/rho) G(rho, rho u) e_k.
inline VectorField apply_F_R(const NoiseModel& model, const PhysParams& params, const ScalarField& r,
                             const VectorField& u, int k) {
  require_valid(r);
  const ScalarField rho = thermo::r_to_rho(params, r);
  VectorField g = effective_G(model, rho, rho * u, k);
  return g /= rho;
}

/// 1/2 sum_k rho^{-1} |G_k(rho, rho v)|^2, nodewise.
inline ScalarField ito_correction(const NoiseModel& model, const ScalarField& rho, const VectorField& v) {
  const auto& mask = model.support_mask();
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (mask[i] && !(rho[i] > 0.0)) throw std::domain_error("ito_correction: vacuum on noise support");
  }
  ScalarField out(rho.grid());
  const VectorField q = rho * v;
  for (int k = 0; k < model.modes(); ++k) {
    const VectorField g = effective_G(model, rho, q, k);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      double s = 0.0;
      for (int d = 0; d < rho.grid().dim(); ++d) s += g[d][i] * g[d][i];
      if (s > 0.0) out[i] += 0.5 * s / rho[i];
    }
  }
  return out;
}

}  // namespace noise

/// Seeded family of independent Brownian motions beta_k sampled on a dyadic
/// time lattice. Every increment is a pure function of
/// (seed, k, level, index), so paths are reproducible in any evaluation
/// order and refinements are Brownian-bridge consistent with coarser levels.
class WienerPath {
 public:
  WienerPath() = default;
  WienerPath(std::uint64_t seed, int modes, double dt) : seed_(seed), modes_(modes), dt_(dt) {
    if (modes < 0) throw std::invalid_argument("WienerPath: mode count must be >= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("WienerPath: dt must be > 0");
  }

  std::uint64_t seed() const { return seed_; }
  int modes() const { return modes_; }
  double dt() const { return dt_; }
  double substep(int level) const { return std::ldexp(dt_, -level); }

  /// Standard normal keyed on (seed, k, level, index).
  double standard_normal(int k, int level, std::int64_t index) const {
    std::uint64_t h = mix(seed_ ^ 0x5ce5ce5ce5ce5ce5ull);
    h = mix(h ^ (static_cast<std::uint64_t>(k) + 1) * 0x9E3779B97F4A7C15ull);
    h = mix(h ^ (static_cast<std::uint64_t>(level) << 56) ^ static_cast<std::uint64_t>(index));
    std::mt19937_64 engine(h);
    return std::normal_distribution<double>()(engine);
  }

  /// Increment of beta_k over [index h, (index+1) h], h = dt 2^-level.
  double increment(int k, std::int64_t index, int level = 0) const {
    check(k);
    if (level == 0) return std::sqrt(dt_) * standard_normal(k, 0, index);
    const double parent = increment(k, index >> 1, level - 1);
    const double left = bridge_left(parent, k, level, index & ~std::int64_t{1});
    return (index & 1) == 0 ? left : parent - left;
  }

  /// The 2^level sub-increments of macro step `step`; they sum to
  /// increment(k, step, 0).
  std::vector<double> refine(int k, std::int64_t step, int level) const {
    check(k);
    std::vector<double> incs{increment(k, step, 0)};
    for (int l = 1; l <= level; ++l) {
      std::vector<double> next(incs.size() * 2);
      for (std::size_t i = 0; i < incs.size(); ++i) {
        const std::int64_t left_index = (step << l) + static_cast<std::int64_t>(2 * i);
        const double left = bridge_left(incs[i], k, l, left_index);
        next[2 * i] = left;
        next[2 * i + 1] = incs[i] - left;
      }
      incs = std::move(next);
    }
    return incs;
  }

 private:
  void check(int k) const {
    if (k < 0 || k >= modes_) throw std::out_of_range("WienerPath: mode index out of range");
  }
  double bridge_left(double parent, int k, int level, std::int64_t left_index) const {
    return 0.5 * parent + std::sqrt(0.5 * substep(level)) * standard_normal(k, level, left_index);
  }
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_ = 0;
  int modes_ = 0;
  double dt_ = 1.0;
};

}  // namespace sce
