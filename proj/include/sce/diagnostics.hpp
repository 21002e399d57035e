#pragma once

// Energy ledger, relative energy, remainder blocks with their certified
// bounds, and convergence metrics between a viscous and an inviscid run.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sce/dynamics.hpp"
#include "sce/fields.hpp"
#include "sce/noise.hpp"
#include "sce/thermo.hpp"

namespace sce {

struct EnergyTerms {
  double kinetic = 0.0;    // 1/2 int rho |v|^2
  double potential = 0.0;  // int H(rho, rho_bar)
  double total() const { return kinetic + potential; }
};

struct LedgerRow {
  double t = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double dissipation_accum = 0.0;
  double noise_work_accum = 0.0;
  double ito_accum = 0.0;
  double defect = 0.0;  // E(t) + dissipation - E(0) - noise work - ito
  double energy() const { return kinetic + potential; }
};

/// The four blocks of the remainder, in the order viscous, convective,
/// pressure, noise mismatch.
struct RemainderBlocks {
  double viscous = 0.0;
  double convective = 0.0;
  double pressure = 0.0;
  double noise = 0.0;

  std::array<double, 4> as_array() const { return {viscous, convective, pressure, noise}; }
};

struct RemainderReport {
  RemainderBlocks blocks;
  RemainderBlocks bounds;   // certified bound for |block| (noise: for block itself)
  double relative_energy = 0.0;
  double c_R = 0.0;         // rate constant: blocks other than viscous <= c_R * relative energy
  double viscous_budget = 0.0;  // 1/2 eps int S(grad u):grad u, the c(R) eps term
  double certificate = 0.0;     // c_R * relative energy + viscous_budget
  std::array<bool, 4> exceeded{false, false, false, false};

  bool any_exceeded() const { return std::any_of(exceeded.begin(), exceeded.end(), [](bool b) { return b; }); }
};

struct ConvergenceMetrics {
  double rho_gap = 0.0;
  double momentum_gap = 0.0;
};

namespace diagnostics {

/// L^q norm of the pointwise Euclidean magnitude.
inline double lq_norm(const ScalarField& f, double q) {
  CompensatedSum sum;
  for (double v : f.values()) sum.add(std::pow(std::abs(v), q));
  return std::pow(sum.value() * f.grid().cell_volume(), 1.0 / q);
}
inline double lq_norm(const VectorField& v, double q) { return lq_norm(v.magnitude(), q); }

inline EnergyTerms energy(const ScalarField& rho, const VectorField& v, const PhysParams& p) {
  const Grid& grid = rho.grid();
  ScalarField kin(grid);
  for (int d = 0; d < grid.dim(); ++d) kin += v[d] * v[d];
  kin *= rho;
  const ScalarField h = thermo::h_potential(p, rho, ScalarField(grid, p.rho_bar));
  return {0.5 * integrate(kin), integrate(h)};
}

inline EnergyTerms energy(const State& s, const PhysParams& p) {
  return energy(dynamics::density_of(s, p), dynamics::velocity_of(s, p), p);
}

/// Nodal S(A):B for gradients stored row-major.
inline ScalarField stress_contraction(const PhysParams& p, const std::vector<ScalarField>& A,
                                      const std::vector<ScalarField>& B, int dim) {
  const auto S = dynamics::viscous_stress(p, A, dim);
  ScalarField out(A.front().grid());
  for (std::size_t e = 0; e < S.size(); ++e) out += S[e] * B[e];
  return out;
}

/// eps int S(grad v):grad v >= 0.
inline double dissipation_rate(const State& s, const PhysParams& p) {
  if (!(p.epsilon > 0.0)) return 0.0;
  const auto J = jacobian(dynamics::velocity_of(s, p));
  return p.epsilon * integrate(stress_contraction(p, J, J, s.grid().dim()));
}

/// int G_k(rho, m) . v dx, with the cut-off weight the solver uses.
inline double noise_work_density(const NoiseModel& model, const ScalarField& rho, const VectorField& v, int k) {
  const VectorField g = noise::effective_G(model, rho, rho * v, k);
  ScalarField dot(rho.grid());
  for (int d = 0; d < rho.grid().dim(); ++d) dot += g[d] * v[d];
  return integrate(dot);
}

/// Ledger of the energy inequality along a recorded trajectory. The noise
/// work is a left-point (Ito) sum over the recorded increments; dissipation
/// uses the trapezoid rule between records.
inline std::vector<LedgerRow> energy_audit(const Trajectory& traj, const NoiseModel& model) {
  const PhysParams& p = traj.params;
  const bool noisy = model.modes() > 0;
  if (noisy && !traj.path) throw std::runtime_error("path not recorded");
  std::vector<LedgerRow> rows;
  if (traj.records.empty()) return rows;
  for (const auto& rec : traj.records) {
    if (!rec.state) throw std::runtime_error("states not recorded");
  }
  double diss = 0.0, work = 0.0, ito = 0.0;
  double diss_prev = 0.0;
  EnergyTerms e0;
  for (std::size_t j = 0; j < traj.records.size(); ++j) {
    const auto& rec = traj.records[j];
    if (rec.report.stop == StopReason::vacuum || rec.report.stop == StopReason::non_finite) break;
    const State& s = *rec.state;
    const EnergyTerms e = energy(s, p);
    const double diss_now = dissipation_rate(s, p);
    if (j == 0) {
      e0 = e;
    } else {
      const auto& prev = traj.records[j - 1];
      const State& sp = *prev.state;
      const double dt = rec.time - prev.time;
      diss += 0.5 * dt * (diss_prev + diss_now);
      if (noisy) {
        const ScalarField rho = dynamics::density_of(sp, p);
        const VectorField v = dynamics::velocity_of(sp, p);
        for (int k = 0; k < model.modes(); ++k) {
          double dB = 0.0;
          for (std::int64_t n = prev.macro_index; n < rec.macro_index; ++n) dB += traj.path->increment(k, n);
          work += noise_work_density(model, rho, v, k) * dB;
        }
        ito += dt * integrate(noise::ito_correction(model, rho, v));
      }
    }
    diss_prev = diss_now;
    LedgerRow row{rec.time, e.kinetic, e.potential, diss, work, ito, 0.0};
    row.defect = e.total() + diss - e0.total() - work - ito;
    rows.push_back(row);
  }
  return rows;
}

inline void check_reference_density(const ScalarField& rho_ref) {
  for (double v : rho_ref.values()) {
    if (!(v > 0.0)) throw std::domain_error("reference density must be strictly positive");
  }
}

/// int 1/2 rho_e |v_e - u|^2 + H(rho_e, rho_ref).
inline double relative_energy(const ScalarField& rho_e, const VectorField& v_e, const ScalarField& rho_ref,
                              const VectorField& u, const PhysParams& p) {
  check_reference_density(rho_ref);
  const Grid& grid = rho_e.grid();
  if (!(rho_ref.grid() == grid) || !(v_e.grid() == grid) || !(u.grid() == grid)) {
    throw std::invalid_argument("relative_energy: grid mismatch");
  }
  ScalarField w2(grid);
  for (int d = 0; d < grid.dim(); ++d) {
    const ScalarField w = v_e[d] - u[d];
    w2 += w * w;
  }
  ScalarField integrand = 0.5 * (rho_e * w2);
  integrand += thermo::h_potential(p, rho_e, rho_ref);
  return integrate(integrand);
}

inline double relative_energy(const State& weak, const State& ref, const PhysParams& p) {
  return relative_energy(dynamics::density_of(weak, p), dynamics::velocity_of(weak, p), dynamics::density_of(ref, p),
                         dynamics::velocity_of(ref, p), p);
}

/// Lipschitz constant of rho -> phi_R(rho) phi_R(1/rho).
inline double cutoff_lipschitz(std::optional<double> R) {
  if (!R) return 0.0;
  constexpr double smoothstep_slope = 1.875;  // max of 30 t^2 (1-t)^2
  return smoothstep_slope * std::max(1.0, (*R + 1.0) * (*R + 1.0));
}

/// Remainder blocks
///   viscous    eps int S(grad u):(grad u - grad v)
///   convective int rho (v - u) . grad u . (u - v)
///   pressure   -int [p(rho) - (rho - r) p'(r) - p(r)] div u
///   noise      1/2 sum_k int rho |G_k(rho, rho v)/rho - G_k(r, r u)/r|^2
/// for the weak state (rho, v) against the reference (r, u), with bounds
///   |viscous|    <= 1/2 eps int S(grad(v-u)):grad(v-u) + 1/2 eps int S(grad u):grad u
///   |convective| <= sup|grad u| int rho |v-u|^2
///   |pressure|   <= (gamma-1) sup|div u| int H(rho, r)
///   noise        <= c_noise * relative energy
inline RemainderReport remainder_terms(const ScalarField& rho, const VectorField& v, const ScalarField& rho_ref,
                                       const VectorField& u, const NoiseModel& model, const PhysParams& p) {
  check_reference_density(rho_ref);
  const Grid& grid = rho.grid();
  const int dim = grid.dim();
  RemainderReport rep;
  rep.relative_energy = relative_energy(rho, v, rho_ref, u, p);

  const auto Ju = jacobian(u);
  const auto Jv = jacobian(v);
  std::vector<ScalarField> Jd;  // grad(u - v)
  for (std::size_t e = 0; e < Ju.size(); ++e) Jd.push_back(Ju[e] - Jv[e]);

  // viscous
  if (p.epsilon > 0.0) {
    rep.blocks.viscous = p.epsilon * integrate(stress_contraction(p, Ju, Jd, dim));
    rep.viscous_budget = 0.5 * p.epsilon * integrate(stress_contraction(p, Ju, Ju, dim));
    rep.bounds.viscous = 0.5 * p.epsilon * integrate(stress_contraction(p, Jd, Jd, dim)) + rep.viscous_budget;
  }

  // convective
  ScalarField conv(grid), kin2(grid), grad_frob(grid);
  for (int i = 0; i < dim; ++i) {
    const ScalarField wi = v[i] - u[i];
    kin2 += wi * wi;
    for (int j = 0; j < dim; ++j) {
      const ScalarField wj = u[j] - v[j];
      const ScalarField& dij = Ju[static_cast<std::size_t>(j * dim + i)];  // d_i u_j
      conv += wi * dij * wj;
      grad_frob += dij * dij;
    }
  }
  rep.blocks.convective = integrate(rho * conv);
  const double grad_sup = std::sqrt(grad_frob.max());
  const double rho_w2 = integrate(rho * kin2);
  rep.bounds.convective = grad_sup * rho_w2;

  // pressure
  ScalarField div_u(grid);
  for (int d = 0; d < dim; ++d) div_u += Ju[static_cast<std::size_t>(d * dim + d)];
  ScalarField bregman(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    bregman[i] = thermo::pressure(p, rho[i]) - (rho[i] - rho_ref[i]) * thermo::pressure_prime(p, rho_ref[i]) -
                 thermo::pressure(p, rho_ref[i]);
  }
  rep.blocks.pressure = -integrate(bregman * div_u);
  const double h_int = integrate(thermo::h_potential(p, rho, rho_ref));
  rep.bounds.pressure = (p.gamma - 1.0) * sup_norm(div_u) * h_int;

  // noise mismatch
  double c_noise = 0.0;
  if (model.modes() > 0) {
    ScalarField mismatch(grid);
    const VectorField q = rho * v;
    const VectorField q_ref = rho_ref * u;
    for (int k = 0; k < model.modes(); ++k) {
      const VectorField g = noise::effective_G(model, rho, q, k);
      const VectorField g_ref = noise::effective_G(model, rho_ref, q_ref, k);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(rho[i] > 0.0)) continue;  // G(0, 0) = 0: the integrand vanishes with rho
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double diff = g[d][i] / rho[i] - g_ref[d][i] / rho_ref[i];
          s += diff * diff;
        }
        mismatch[i] += 0.5 * rho[i] * s;
      }
    }
    rep.blocks.noise = integrate(mismatch);
    if (!model.is_linear()) {
      rep.bounds.noise = std::numeric_limits<double>::infinity();
    } else {
      // |G/rho - G_ref/r| <= w(rho)|A (v-u)| + |w(rho) - w(r)| |a + A u|
      double a_sq = 0.0, drift_sq = 0.0;
      for (int k = 0; k < model.modes(); ++k) {
        const double m = model.matrix_sup(k);
        a_sq += m * m;
        double sup_au = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          double s = 0.0;
          for (int r = 0; r < dim; ++r) {
            double e = model.a(k)[r][i];
            for (int c = 0; c < dim; ++c) e += model.A(k, r, c)[i] * u[c][i];
            s += e * e;
          }
          sup_au = std::max(sup_au, s);
        }
        drift_sq += sup_au;
      }
      // without cut-off the block is 1/2 sum int rho |A_k (v-u)|^2
      double block_bound = 0.5 * a_sq * rho_w2;
      c_noise = a_sq;
      if (model.cutoff()) {
        // 1/2 |X + Y|^2 <= |X|^2 + |Y|^2, and int rho (w(rho) - w(r))^2 <= C_H int H(rho, r)
        // from the coercivity constants of H on the reference range
        const double lip = cutoff_lipschitz(model.cutoff());
        const double r_lo = rho_ref.min(), r_hi = rho_ref.max();
        const double rho_top = std::max(4.0 * r_hi, rho.max()) * 1.01;
        std::vector<double> rho_grid(4001);
        for (std::size_t i = 0; i < rho_grid.size(); ++i) rho_grid[i] = rho_top * i / (rho_grid.size() - 1);
        double inner = std::numeric_limits<double>::infinity(), outer = inner;
        for (int j = 0; j <= 8; ++j) {
          const double r = r_lo + (r_hi - r_lo) * j / 8.0;
          const auto c = thermo::h_lower_bound_check(p, r, rho_grid);
          if (!c) throw std::runtime_error("remainder_terms: coercivity constant not found");
          inner = std::min(inner, c->inner);
          outer = std::min(outer, c->outer);
        }
        const double c_h = std::max(2.0 * r_hi * lip * lip / inner, 1.0 / outer);
        block_bound = a_sq * rho_w2 + drift_sq * c_h * h_int;
        c_noise = std::max(2.0 * a_sq, drift_sq * c_h);
      }
      rep.bounds.noise = block_bound;
    }
  }

  rep.c_R = 2.0 * grad_sup + (p.gamma - 1.0) * sup_norm(div_u) + c_noise;
  rep.certificate = rep.c_R * rep.relative_energy + rep.viscous_budget;

  const auto b = rep.blocks.as_array();
  const auto B = rep.bounds.as_array();
  for (std::size_t i = 0; i < 4; ++i) {
    const double slack = 1e-12 * (std::abs(B[i]) + std::abs(b[i])) + 1e-300;
    rep.exceeded[i] = !(std::abs(b[i]) <= B[i] + slack);
  }
  return rep;
}

inline RemainderReport remainder_terms(const State& weak, const State& ref, const NoiseModel& model,
                                       const PhysParams& p) {
  return remainder_terms(dynamics::density_of(weak, p), dynamics::velocity_of(weak, p), dynamics::density_of(ref, p),
                         dynamics::velocity_of(ref, p), model, p);
}

/// Density gap in L^gbar and momentum gap in L^{2 gbar/(gbar+1)}, gbar = min(2, gamma).
inline ConvergenceMetrics convergence_metrics(const ScalarField& rho, const VectorField& v,
                                              const ScalarField& rho_ref, const VectorField& u,
                                              const PhysParams& p) {
  if (!(rho.grid() == rho_ref.grid())) throw std::invalid_argument("convergence_metrics: mismatched grids");
  const double gbar = std::min(2.0, p.gamma);
  ConvergenceMetrics m;
  m.rho_gap = lq_norm(rho - rho_ref, gbar);
  m.momentum_gap = lq_norm(rho * v - rho_ref * u, 2.0 * gbar / (gbar + 1.0));
  return m;
}

/// Supremum of the snapshot metrics over records with t in [t0, t1]. Both
/// trajectories must carry states at the same record times.
inline ConvergenceMetrics convergence_metrics(const Trajectory& weak, const Trajectory& ref, double t0, double t1) {
  const PhysParams& p = ref.params;
  ConvergenceMetrics out;
  std::size_t j = 0;
  for (const auto& rw : weak.records) {
    if (rw.time < t0 - 1e-12 || rw.time > t1 + 1e-12) continue;
    while (j < ref.records.size() && ref.records[j].time < rw.time - 1e-12) ++j;
    if (j == ref.records.size() || std::abs(ref.records[j].time - rw.time) > 1e-12) {
      throw std::invalid_argument("convergence_metrics: mismatched time grids");
    }
    if (!rw.state || !ref.records[j].state) throw std::runtime_error("states not recorded");
    const State& sw = *rw.state;
    const State& sr = *ref.records[j].state;
    if (!(sw.grid() == sr.grid())) throw std::invalid_argument("convergence_metrics: mismatched grids");
    const auto m = convergence_metrics(dynamics::density_of(sw, weak.params), dynamics::velocity_of(sw, weak.params),
                                       dynamics::density_of(sr, p), dynamics::velocity_of(sr, p), p);
    out.rho_gap = std::max(out.rho_gap, m.rho_gap);
    out.momentum_gap = std::max(out.momentum_gap, m.momentum_gap);
  }
  return out;
}

}  // namespace diagnostics
}  // namespace sce
