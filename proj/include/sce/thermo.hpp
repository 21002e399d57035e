#pragma once

// Barotropic pressure law p = a rho^gamma, its potentials, and the change of
// variables rho <-> r that symmetrizes the Euler system.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

#include "sce/fields.hpp"

namespace sce {

struct PhysParams {
  double gamma = 2.0;
  double a = 1.0;
  double rho_bar = 1.0;
  double nu = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;  // inverse Reynolds scale multiplying the stress

  void validate() const {
    if (!(gamma > 1.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > 1");
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("a must be > 0");
    if (!(rho_bar > 0.0) || !std::isfinite(rho_bar)) throw std::invalid_argument("rho_bar must be > 0");
    if (!(nu >= 0.0) || !(lambda >= 0.0)) throw std::invalid_argument("viscosities must be >= 0");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  }
  bool viscous() const { return epsilon > 0.0 && (nu > 0.0 || lambda > 0.0); }
};

namespace thermo {

inline double pressure(const PhysParams& p, double rho) {
  if (rho < 0.0) throw std::domain_error("negative density");
  return rho == 0.0 ? 0.0 : p.a * std::pow(rho, p.gamma);
}

inline double pressure_prime(const PhysParams& p, double rho) {
  if (rho < 0.0) throw std::domain_error("negative density");
  return rho == 0.0 ? 0.0 : p.a * p.gamma * std::pow(rho, p.gamma - 1.0);
}

inline double sound_speed(const PhysParams& p, double rho) { return std::sqrt(pressure_prime(p, rho)); }

/// Pressure potential P(rho) = a/(gamma-1) rho^gamma.
inline double pressure_potential(const PhysParams& p, double rho) {
  return pressure(p, rho) / (p.gamma - 1.0);
}

/// H(rho, r) = P(rho) - P'(r)(rho - r) - P(r), the Bregman distance of P.
inline double h_potential(const PhysParams& p, double rho, double r) {
  if (!(r > 0.0)) throw std::domain_error("h_potential: reference density must be > 0");
  if (rho < 0.0) throw std::domain_error("negative density");
  const double rg = std::pow(r, p.gamma);
  const double rhog = rho == 0.0 ? 0.0 : std::pow(rho, p.gamma);
  const double h = p.a / (p.gamma - 1.0) * (rhog - p.gamma * (rg / r) * (rho - r) - rg);
  return std::max(h, 0.0);
}

/// Constants of the coercivity bound
///   H(rho, r) >= c |rho - r|^2   on [r/2, 2r],
///   H(rho, r) >= c (1 + rho^gamma) elsewhere.
struct HLowerBound {
  double inner = std::numeric_limits<double>::infinity();
  double outer = std::numeric_limits<double>::infinity();
  double c() const { return std::min(inner, outer); }
};

/// Largest constants for which the coercivity bound holds on every point of
/// `rho_grid`. Returns nullopt if no positive constant exists there.
inline std::optional<HLowerBound> h_lower_bound_check(const PhysParams& p, double r,
                                                      std::span<const double> rho_grid) {
  if (!(r > 0.0)) throw std::domain_error("h_lower_bound_check: r must be > 0");
  HLowerBound bound;
  for (double rho : rho_grid) {
    const double h = h_potential(p, rho, r);
    if (rho >= 0.5 * r && rho <= 2.0 * r) {
      const double d = rho - r;
      // H / d^2 is continuous at rho = r; nodes too close to r only carry
      // cancellation error.
      if (std::abs(d) <= 1e-4 * r) continue;
      bound.inner = std::min(bound.inner, h / (d * d));
    } else {
      bound.outer = std::min(bound.outer, h / (1.0 + std::pow(rho, p.gamma)));
    }
  }
  if (!(bound.c() > 0.0) || !std::isfinite(bound.c())) return std::nullopt;
  return bound;
}

/// r(rho) = sqrt(2 a gamma / (gamma - 1)) rho^((gamma-1)/2).
inline double rho_to_r(const PhysParams& p, double rho) {
  if (!(rho > 0.0)) throw std::domain_error("vacuum state: transform invalid");
  return std::sqrt(2.0 * p.a * p.gamma / (p.gamma - 1.0)) * std::pow(rho, 0.5 * (p.gamma - 1.0));
}

inline double r_to_rho(const PhysParams& p, double r) {
  if (!(r > 0.0)) throw std::domain_error("vacuum state: transform invalid");
  return std::pow((p.gamma - 1.0) / (2.0 * p.a * p.gamma) * r * r, 1.0 / (p.gamma - 1.0));
}

/// dr/drho.
inline double r_prime(const PhysParams& p, double rho) {
  return 0.5 * (p.gamma - 1.0) * rho_to_r(p, rho) / rho;
}

inline double r_bar(const PhysParams& p) { return rho_to_r(p, p.rho_bar); }

inline ScalarField rho_to_r(const PhysParams& p, const ScalarField& rho) {
  return rho.map([&](double v) { return rho_to_r(p, v); });
}
inline ScalarField r_to_rho(const PhysParams& p, const ScalarField& r) {
  return r.map([&](double v) { return r_to_rho(p, v); });
}
inline ScalarField pressure(const PhysParams& p, const ScalarField& rho) {
  return rho.map([&](double v) { return pressure(p, v); });
}
inline ScalarField h_potential(const PhysParams& p, const ScalarField& rho, const ScalarField& r) {
  ScalarField out(rho.grid());
  for (std::size_t i = 0; i < rho.size(); ++i) out[i] = h_potential(p, rho[i], r[i]);
  return out;
}

}  // namespace thermo
}  // namespace sce
