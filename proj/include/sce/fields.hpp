#pragma once

// Periodic grids, grid functions, spectral calculus and the discrete norms
// used throughout the solver.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sce/fft.hpp"

namespace sce {

/// Neumaier compensated sum; the result does not depend on how partial sums
/// are grouped beyond round-off of the compensation term itself.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Uniform periodic grid on the torus [0, L)^dim.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, int points_per_axis, double length)
      : dim_(dim), n_(points_per_axis), length_(length) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
    if (points_per_axis < 8 || (points_per_axis & (points_per_axis - 1)) != 0) {
      throw std::invalid_argument("Grid: points per axis must be a power of two >= 8");
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw std::invalid_argument("Grid: length must be positive");
    }
  }

  int dim() const { return dim_; }
  int n() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return length_ / n_; }
  double cell_volume() const { return std::pow(spacing(), dim_); }
  double volume() const { return std::pow(length_, dim_); }
  std::size_t size() const {
    return dim_ == 1 ? static_cast<std::size_t>(n_)
                     : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
  }

  /// Integer index along `axis` of a row-major node (axis 0 varies slowest).
  int index(std::size_t node, int axis) const {
    if (dim_ == 1) return static_cast<int>(node);
    return axis == 0 ? static_cast<int>(node / n_) : static_cast<int>(node % n_);
  }
  double coordinate(std::size_t node, int axis) const { return index(node, axis) * spacing(); }

  /// Signed FFT mode number of an FFT-layout index: 0..N/2-1, then -N/2..-1.
  int mode(int j) const { return j < n_ / 2 ? j : j - n_; }
  double wavenumber(int j) const { return 2.0 * std::numbers::pi / length_ * mode(j); }
  bool is_nyquist(int j) const { return j == n_ / 2; }
  /// Modes kept by the 2/3 truncation rule.
  bool is_resolved(int j) const { return 3 * std::abs(mode(j)) <= n_; }

  bool operator==(const Grid&) const = default;

 private:
  int dim_ = 1;
  int n_ = 8;
  double length_ = 2.0 * std::numbers::pi;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  ScalarField(const Grid& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw std::invalid_argument("ScalarField: size mismatch");
  }

  /// Samples f at every node; f receives the node coordinates.
  static ScalarField sample(const Grid& grid, const std::function<double(std::span<const double>)>& f) {
    ScalarField out(grid);
    double x[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (int d = 0; d < grid.dim(); ++d) x[d] = grid.coordinate(i, d);
      out.values_[i] = f(std::span<const double>(x, grid.dim()));
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool is_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  template <class Fn>
  ScalarField map(Fn fn) const {
    ScalarField out(grid_);
    for (std::size_t i = 0; i < size(); ++i) out.values_[i] = fn(values_[i]);
    return out;
  }

  ScalarField& operator+=(const ScalarField& o) { return zip(o, [](double a, double b) { return a + b; }); }
  ScalarField& operator-=(const ScalarField& o) { return zip(o, [](double a, double b) { return a - b; }); }
  ScalarField& operator*=(const ScalarField& o) { return zip(o, [](double a, double b) { return a * b; }); }
  ScalarField& operator/=(const ScalarField& o) { return zip(o, [](double a, double b) { return a / b; }); }
  ScalarField& operator+=(double c) {
    for (double& v : values_) v += c;
    return *this;
  }
  ScalarField& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }
  /// this += c * o
  ScalarField& axpy(double c, const ScalarField& o) {
    check(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += c * o.values_[i];
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
  friend ScalarField operator/(ScalarField a, const ScalarField& b) { return a /= b; }
  friend ScalarField operator*(double c, ScalarField a) { return a *= c; }
  friend ScalarField operator+(ScalarField a, double c) { return a += c; }
  friend ScalarField operator-(ScalarField a, double c) { return a += -c; }
  friend ScalarField operator+(double c, ScalarField a) { return a += c; }
  friend ScalarField operator*(ScalarField a, double c) { return a *= c; }
  ScalarField operator-() const { return map([](double v) { return -v; }); }

  bool operator==(const ScalarField&) const = default;

 private:
  void check(const ScalarField& o) const {
    if (!(o.grid_ == grid_)) throw std::invalid_argument("field grid mismatch");
  }
  template <class Op>
  ScalarField& zip(const ScalarField& o, Op op) {
    check(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] = op(values_[i], o.values_[i]);
    return *this;
  }

  Grid grid_;
  std::vector<double> values_;
};

/// Vector field with one component per spatial axis.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& grid, double value = 0.0)
      : grid_(grid), comps_(static_cast<std::size_t>(grid.dim()), ScalarField(grid, value)) {}
  explicit VectorField(std::vector<ScalarField> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw std::invalid_argument("VectorField: no components");
    grid_ = comps_.front().grid();
    if (comps_.size() != static_cast<std::size_t>(grid_.dim())) {
      throw std::invalid_argument("VectorField: component count must equal dim");
    }
    for (const auto& c : comps_) {
      if (!(c.grid() == grid_)) throw std::invalid_argument("field grid mismatch");
    }
  }

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  ScalarField& operator[](int axis) { return comps_[static_cast<std::size_t>(axis)]; }
  const ScalarField& operator[](int axis) const { return comps_[static_cast<std::size_t>(axis)]; }
  auto begin() { return comps_.begin(); }
  auto end() { return comps_.end(); }
  auto begin() const { return comps_.begin(); }
  auto end() const { return comps_.end(); }

  bool is_finite() const {
    return std::all_of(comps_.begin(), comps_.end(), [](const ScalarField& c) { return c.is_finite(); });
  }

  /// Pointwise Euclidean magnitude.
  ScalarField magnitude() const {
    ScalarField out(grid_);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double s = 0.0;
      for (const auto& c : comps_) s += c[i] * c[i];
      out[i] = std::sqrt(s);
    }
    return out;
  }

  VectorField& operator+=(const VectorField& o) {
    for (int d = 0; d < dim(); ++d) comps_[d] += o[d];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int d = 0; d < dim(); ++d) comps_[d] -= o[d];
    return *this;
  }
  VectorField& operator*=(double c) {
    for (auto& comp : comps_) comp *= c;
    return *this;
  }
  /// Componentwise multiplication by a scalar field.
  VectorField& operator*=(const ScalarField& s) {
    for (auto& comp : comps_) comp *= s;
    return *this;
  }
  VectorField& operator/=(const ScalarField& s) {
    for (auto& comp : comps_) comp /= s;
    return *this;
  }
  VectorField& axpy(double c, const VectorField& o) {
    for (int d = 0; d < dim(); ++d) comps_[d].axpy(c, o[d]);
    return *this;
  }

  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double c, VectorField a) { return a *= c; }
  friend VectorField operator*(const ScalarField& s, VectorField a) { return a *= s; }
  friend VectorField operator/(VectorField a, const ScalarField& s) { return a /= s; }

  bool operator==(const VectorField&) const = default;

 private:
  Grid grid_;
  std::vector<ScalarField> comps_;
};

inline void require_valid(const ScalarField& f) {
  if (f.size() == 0 || !f.is_finite()) throw std::invalid_argument("invalid field");
}
inline void require_valid(const VectorField& v) {
  for (const auto& c : v) require_valid(c);
}

// ---------------------------------------------------------------------------
// Spectral calculus

enum class Dealias { off, two_thirds };

/// Fourier coefficients in FFT layout, normalized so that the field equals
/// sum_xi c_xi exp(i xi . x) at the nodes.
class Spectrum {
 public:
  explicit Spectrum(const ScalarField& f) : grid_(f.grid()), coeffs_(f.size()) {
    for (std::size_t i = 0; i < f.size(); ++i) coeffs_[i] = f[i];
    detail::fft_plan(grid_.dim(), grid_.n()).forward(coeffs_);
    const double scale = 1.0 / static_cast<double>(f.size());
    for (auto& c : coeffs_) c *= scale;
  }
  Spectrum(const Grid& grid, std::vector<std::complex<double>> coeffs)
      : grid_(grid), coeffs_(std::move(coeffs)) {}

  const Grid& grid() const { return grid_; }
  std::complex<double>& operator[](std::size_t i) { return coeffs_[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return coeffs_[i]; }
  std::size_t size() const { return coeffs_.size(); }

  /// Calls fn(slot, j0, j1) for every coefficient (j1 = 0 in 1D).
  template <class Fn>
  void for_each_mode(Fn fn) const {
    const int n = grid_.n();
    if (grid_.dim() == 1) {
      for (int j = 0; j < n; ++j) fn(static_cast<std::size_t>(j), j, 0);
    } else {
      for (int j0 = 0; j0 < n; ++j0)
        for (int j1 = 0; j1 < n; ++j1) fn(static_cast<std::size_t>(j0) * n + j1, j0, j1);
    }
  }

  ScalarField to_field() const {
    std::vector<std::complex<double>> work = coeffs_;
    detail::fft_plan(grid_.dim(), grid_.n()).backward(work);
    ScalarField out(grid_);
    for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real();
    return out;
  }

  /// Spectrum of the derivative along `axis`; the Nyquist mode is dropped.
  Spectrum derivative(int axis, Dealias dealias) const {
    Spectrum out(grid_, coeffs_);
    for_each_mode([&](std::size_t slot, int j0, int j1) {
      const int j = axis == 0 ? j0 : j1;
      std::complex<double> factor(0.0, grid_.wavenumber(j));
      if (grid_.is_nyquist(j) || (dealias == Dealias::two_thirds && !resolved(j0, j1))) factor = 0.0;
      out.coeffs_[slot] *= factor;
    });
    return out;
  }

  /// 2/3-rule truncation.
  Spectrum truncated() const {
    Spectrum out(grid_, coeffs_);
    for_each_mode([&](std::size_t slot, int j0, int j1) {
      if (!resolved(j0, j1)) out.coeffs_[slot] = 0.0;
    });
    return out;
  }

  double wavenumber_squared(int j0, int j1) const {
    const double k0 = grid_.wavenumber(j0);
    const double k1 = grid_.dim() == 2 ? grid_.wavenumber(j1) : 0.0;
    return k0 * k0 + k1 * k1;
  }

 private:
  bool resolved(int j0, int j1) const {
    return grid_.is_resolved(j0) && (grid_.dim() == 1 || grid_.is_resolved(j1));
  }

  Grid grid_;
  std::vector<std::complex<double>> coeffs_;
};

inline ScalarField derivative(const ScalarField& f, int axis, Dealias dealias = Dealias::off) {
  return Spectrum(f).derivative(axis, dealias).to_field();
}

/// 2/3-rule projection onto the resolved band.
inline ScalarField project(const ScalarField& f) { return Spectrum(f).truncated().to_field(); }
inline VectorField project(const VectorField& v) {
  VectorField out(v.grid());
  for (int d = 0; d < v.dim(); ++d) out[d] = project(v[d]);
  return out;
}

inline VectorField gradient(const ScalarField& f, Dealias dealias = Dealias::off) {
  require_valid(f);
  const Spectrum spec(f);
  VectorField out(f.grid());
  for (int d = 0; d < f.grid().dim(); ++d) out[d] = spec.derivative(d, dealias).to_field();
  return out;
}

inline ScalarField divergence(const VectorField& v, Dealias dealias = Dealias::off) {
  require_valid(v);
  ScalarField out(v.grid());
  for (int d = 0; d < v.dim(); ++d) out += derivative(v[d], d, dealias);
  return out;
}

/// Velocity gradient J[i][j] = d v_i / d x_j, stored row-major (dim x dim).
inline std::vector<ScalarField> jacobian(const VectorField& v, Dealias dealias = Dealias::off) {
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(v.dim() * v.dim()));
  for (int i = 0; i < v.dim(); ++i) {
    const Spectrum spec(v[i]);
    for (int j = 0; j < v.dim(); ++j) out.push_back(spec.derivative(j, dealias).to_field());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature and norms

/// Nodal quadrature of the integral over the torus.
inline double integrate(const ScalarField& f) {
  CompensatedSum sum;
  for (double v : f.values()) sum.add(v);
  return sum.value() * f.grid().cell_volume();
}

inline double l2_norm(const ScalarField& f) {
  CompensatedSum sum;
  for (double v : f.values()) sum.add(v * v);
  return std::sqrt(sum.value() * f.grid().cell_volume());
}
inline double l2_norm(const VectorField& v) {
  double s = 0.0;
  for (const auto& c : v) {
    const double n = l2_norm(c);
    s += n * n;
  }
  return std::sqrt(s);
}

inline double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}
inline double sup_norm(const VectorField& v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, sup_norm(c));
  return m;
}

/// Squared W^{s,2} norm from Fourier coefficients weighted by (1+|xi|^2)^s.
inline double sobolev_norm_squared(const ScalarField& f, double s) {
  require_valid(f);
  if (!(s >= 0.0)) throw std::invalid_argument("sobolev order must be nonnegative");
  const Spectrum spec(f);
  CompensatedSum sum;
  spec.for_each_mode([&](std::size_t slot, int j0, int j1) {
    const double weight = std::pow(1.0 + spec.wavenumber_squared(j0, j1), s);
    sum.add(weight * std::norm(spec[slot]));
  });
  return sum.value() * f.grid().volume();
}

inline double sobolev_norm(const ScalarField& f, double s) { return std::sqrt(sobolev_norm_squared(f, s)); }
inline double sobolev_norm(const VectorField& v, double s) {
  double total = 0.0;
  for (const auto& c : v) total += sobolev_norm_squared(c, s);
  return std::sqrt(total);
}

/// Discrete ||u||_{1,inf} := max(||u||_inf, max_{i,j} ||d_j u_i||_inf).
inline double lipschitz_norm(const VectorField& u) {
  require_valid(u);
  double m = sup_norm(u);
  for (const auto& d : jacobian(u)) m = std::max(m, sup_norm(d));
  return m;
}

struct NormReport {
  double l2 = 0.0;
  double sobolev = 0.0;
  double sobolev_order = 0.0;
  double lipschitz = 0.0;
};

}  // namespace sce
