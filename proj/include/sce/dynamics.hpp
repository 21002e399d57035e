#pragma once

// Pseudo-spectral right-hand sides for the barotropic Euler / Navier-Stokes
// system in conservative (rho, m) and symmetric (r, u) variables, the
// stochastic time stepper, and the stopping-time detectors.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sce/fields.hpp"
#include "sce/noise.hpp"
#include "sce/thermo.hpp"

namespace sce {

enum class Formulation { conservative, symmetric };

/// Conservative: density = rho, flow = m = rho u.
/// Symmetric:    density = r,   flow = u.
struct State {
  Formulation form = Formulation::conservative;
  ScalarField density;
  VectorField flow;
  double time = 0.0;

  const Grid& grid() const { return density.grid(); }
  bool operator==(const State&) const = default;
};

enum class StopReason { none, sobolev_level, lipschitz_blowup, vacuum, non_finite };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::sobolev_level: return "sobolev_level";
    case StopReason::lipschitz_blowup: return "lipschitz_blowup";
    case StopReason::vacuum: return "vacuum";
    case StopReason::non_finite: return "non_finite";
  }
  return "unknown";
}

/// Raised inside right-hand-side evaluation when the state left the domain
/// of the equations; the stepper converts it into a StopReason.
struct NumericalStop : std::runtime_error {
  explicit NumericalStop(StopReason why)
      : std::runtime_error(std::string("numerical stop: ") + std::string(to_string(why))), reason(why) {}
  StopReason reason;
};

struct StopConfig {
  double R_detector = std::numeric_limits<double>::infinity();  // ||u||_{1,inf} level
  double N_level = std::numeric_limits<double>::infinity();     // ||(r - r_bar, u)||_{s,2} level
  std::optional<double> s_order;                                 // default dim/2 + 2.5
  double T_max = 1.0;
  double cfl = 0.4;

  double sobolev_order(int dim) const { return s_order.value_or(0.5 * dim + 2.5); }
  void validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0,1]");
    if (!(T_max > 0.0)) throw std::invalid_argument("T_max must be > 0");
    if (!(R_detector > 0.0) || !(N_level > 0.0)) throw std::invalid_argument("detector levels must be > 0");
    if (s_order && !(*s_order >= 0.0)) throw std::invalid_argument("sobolev order must be >= 0");
  }
};

enum class Integrator { heun, ssp_rk3 };

/// Pseudo-spectral (default) or first-order Rusanov finite volumes; the
/// latter exists as an independent cross-check and needs the conservative
/// formulation.
enum class Scheme { spectral, rusanov };

struct StepOptions {
  bool drift = true;
  Scheme scheme = Scheme::spectral;
  bool noise = true;
  Integrator integrator = Integrator::ssp_rk3;
  Dealias dealias = Dealias::two_thirds;
  std::optional<int> fixed_level;  // force 2^level substeps per macro step
  int max_level = 20;
};

struct StepReport {
  double dt_used = 0.0;
  int substeps = 0;
  double max_wave_speed = 0.0;
  StopReason stop = StopReason::none;
  NormReport norms;
  double div_u_integral = 0.0;  // integral of ||div u||_inf over this step
  double min_rho = 0.0;
  double max_rho = 0.0;
};

namespace dynamics {

/// Densities at or below this fraction of rho_bar count as vacuum.
inline constexpr double kVacuumFraction = 1e-8;

inline ScalarField density_of(const State& s, const PhysParams& p) {
  return s.form == Formulation::conservative ? s.density : thermo::r_to_rho(p, s.density);
}

inline VectorField velocity_of(const State& s, const PhysParams& /*p*/) {
  return s.form == Formulation::conservative ? s.flow / s.density : s.flow;
}

inline State make_state(Formulation form, const PhysParams& p, const ScalarField& rho, const VectorField& u,
                        double time = 0.0) {
  if (form == Formulation::conservative) return State{form, rho, rho * u, time};
  return State{form, thermo::rho_to_r(p, rho), u, time};
}

inline State to_symmetric(const State& s, const PhysParams& p) {
  if (s.form == Formulation::symmetric) return s;
  return make_state(Formulation::symmetric, p, s.density, velocity_of(s, p), s.time);
}

inline State to_conservative(const State& s, const PhysParams& p) {
  if (s.form == Formulation::conservative) return s;
  return make_state(Formulation::conservative, p, density_of(s, p), s.flow, s.time);
}

/// Throws NumericalStop on non-finite samples or vacuum.
inline void check_state(const State& s, const PhysParams& p) {
  const double floor = s.form == Formulation::conservative
                           ? kVacuumFraction * p.rho_bar
                           : thermo::rho_to_r(p, kVacuumFraction * p.rho_bar);
  for (double v : s.density.values()) {
    if (std::isfinite(v) && v <= floor) throw NumericalStop(StopReason::vacuum);
  }
  if (!s.density.is_finite() || !s.flow.is_finite()) throw NumericalStop(StopReason::non_finite);
}

struct Tendency {
  ScalarField density;
  VectorField flow;
};

/// d rho/dt = -div m,  dm/dt = -div(m (x) m / rho) - a grad rho^gamma.
inline Tendency rhs_euler_conservative(const State& s, const PhysParams& p,
                                       Dealias dealias = Dealias::two_thirds) {
  if (s.form != Formulation::conservative) throw std::invalid_argument("rhs_euler_conservative: wrong formulation");
  check_state(s, p);
  const int dim = s.grid().dim();
  const VectorField u = s.flow / s.density;
  Tendency t{ScalarField(s.grid()), VectorField(s.grid())};
  t.density = -divergence(s.flow, dealias);
  const ScalarField pressure = thermo::pressure(p, s.density);
  for (int i = 0; i < dim; ++i) {
    ScalarField acc = derivative(pressure, i, dealias);
    for (int j = 0; j < dim; ++j) acc += derivative(s.flow[i] * u[j], j, dealias);
    t.flow[i] = -acc;
  }
  return t;
}

/// dr/dt = -u.grad r - (gamma-1)/2 r div u,  du/dt = -u.grad u - r grad r.
inline Tendency rhs_euler_symmetric(const State& s, const PhysParams& p, Dealias dealias = Dealias::two_thirds) {
  if (s.form != Formulation::symmetric) throw std::invalid_argument("rhs_euler_symmetric: wrong formulation");
  check_state(s, p);
  const int dim = s.grid().dim();
  const auto& r = s.density;
  const auto& u = s.flow;
  const VectorField grad_r = gradient(r, dealias);
  const auto jac = jacobian(u, dealias);
  ScalarField div_u(s.grid());
  for (int d = 0; d < dim; ++d) div_u += jac[static_cast<std::size_t>(d * dim + d)];

  auto finish = [&](ScalarField f) { return dealias == Dealias::two_thirds ? project(f) : f; };

  Tendency t{ScalarField(s.grid()), VectorField(s.grid())};
  ScalarField dr = 0.5 * (p.gamma - 1.0) * (r * div_u);
  for (int j = 0; j < dim; ++j) dr += u[j] * grad_r[j];
  t.density = -finish(std::move(dr));
  for (int i = 0; i < dim; ++i) {
    ScalarField acc = r * grad_r[i];
    for (int j = 0; j < dim; ++j) acc += u[j] * jac[static_cast<std::size_t>(i * dim + j)];
    t.flow[i] = -finish(std::move(acc));
  }
  return t;
}

/// Newtonian stress S = nu (J + J^T - (2/n) tr J I) + lambda tr J I for a
/// velocity gradient J (row-major, J[i*dim+j] = d_j u_i). Not scaled by epsilon.
inline std::vector<ScalarField> viscous_stress(const PhysParams& p, const std::vector<ScalarField>& jac, int dim) {
  ScalarField trace(jac.front().grid());
  for (int d = 0; d < dim; ++d) trace += jac[static_cast<std::size_t>(d * dim + d)];
  std::vector<ScalarField> S;
  S.reserve(jac.size());
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      ScalarField e = p.nu * (jac[static_cast<std::size_t>(i * dim + j)] + jac[static_cast<std::size_t>(j * dim + i)]);
      if (i == j) e.axpy(p.lambda - 2.0 * p.nu / dim, trace);
      S.push_back(std::move(e));
    }
  }
  return S;
}

/// epsilon div S(grad v): added to dm/dt, or divided by rho for du/dt.
inline VectorField rhs_viscous(const State& s, const PhysParams& p, Dealias dealias = Dealias::two_thirds) {
  const Grid& grid = s.grid();
  const int dim = grid.dim();
  VectorField out(grid);
  if (!p.viscous()) return out;
  const VectorField v = velocity_of(s, p);
  const auto S = viscous_stress(p, jacobian(v, dealias), dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) out[i] += derivative(S[static_cast<std::size_t>(i * dim + j)], j, dealias);
    out[i] *= p.epsilon;
  }
  if (s.form == Formulation::symmetric) {
    out /= density_of(s, p);
    if (dealias == Dealias::two_thirds) out = project(out);
  }
  return out;
}

/// First-order Rusanov (local Lax-Friedrichs) flux divergence for the
/// conservative Euler system.
inline Tendency rhs_rusanov(const State& s, const PhysParams& p) {
  if (s.form != Formulation::conservative) throw std::invalid_argument("rhs_rusanov: wrong formulation");
  check_state(s, p);
  const Grid& grid = s.grid();
  const int dim = grid.dim();
  const int n = grid.n();
  const double inv_dx = 1.0 / grid.spacing();
  Tendency t{ScalarField(grid), VectorField(grid)};
  auto neighbour = [&](std::size_t node, int axis) -> std::size_t {
    if (dim == 1) return (node + 1) % static_cast<std::size_t>(n);
    const std::size_t i0 = node / n, i1 = node % n;
    return axis == 0 ? ((i0 + 1) % n) * n + i1 : i0 * n + (i1 + 1) % n;
  };
  std::vector<double> fl(static_cast<std::size_t>(dim + 1)), fr(fl.size()), flux(fl.size());
  auto physical_flux = [&](std::size_t node, int axis, std::vector<double>& f, double& speed) {
    const double rho = s.density[node];
    const double un = s.flow[axis][node] / rho;
    f[0] = s.flow[axis][node];
    for (int i = 0; i < dim; ++i) f[i + 1] = s.flow[i][node] * un;
    f[axis + 1] += thermo::pressure(p, rho);
    speed = std::abs(un) + thermo::sound_speed(p, rho);
  };
  for (int axis = 0; axis < dim; ++axis) {
    for (std::size_t node = 0; node < grid.size(); ++node) {
      const std::size_t right = neighbour(node, axis);
      double sl = 0.0, sr = 0.0;
      physical_flux(node, axis, fl, sl);
      physical_flux(right, axis, fr, sr);
      const double smax = std::max(sl, sr);
      flux[0] = 0.5 * (fl[0] + fr[0]) - 0.5 * smax * (s.density[right] - s.density[node]);
      for (int i = 0; i < dim; ++i) {
        flux[i + 1] = 0.5 * (fl[i + 1] + fr[i + 1]) - 0.5 * smax * (s.flow[i][right] - s.flow[i][node]);
      }
      // flux through the face between node and right
      t.density[node] -= inv_dx * flux[0];
      t.density[right] += inv_dx * flux[0];
      for (int i = 0; i < dim; ++i) {
        t.flow[i][node] -= inv_dx * flux[i + 1];
        t.flow[i][right] += inv_dx * flux[i + 1];
      }
    }
  }
  return t;
}

/// Full deterministic drift of the state's formulation.
inline Tendency rhs(const State& s, const PhysParams& p, Dealias dealias = Dealias::two_thirds,
                    Scheme scheme = Scheme::spectral) {
  if (scheme == Scheme::rusanov) {
    Tendency t = rhs_rusanov(s, p);
    if (p.viscous()) t.flow += rhs_viscous(s, p, Dealias::off);
    return t;
  }
  Tendency t = s.form == Formulation::conservative ? rhs_euler_conservative(s, p, dealias)
                                                   : rhs_euler_symmetric(s, p, dealias);
  if (p.viscous()) t.flow += rhs_viscous(s, p, dealias);
  return t;
}

inline double max_wave_speed(const State& s, const PhysParams& p) {
  const ScalarField rho = density_of(s, p);
  const VectorField u = velocity_of(s, p);
  const ScalarField speed = u.magnitude();
  double m = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) m = std::max(m, speed[i] + thermo::sound_speed(p, rho[i]));
  return m;
}

/// Largest explicit step allowed by the advective CFL condition and, for
/// viscous runs, the diffusive limit of the dealiased spectrum.
inline double stable_dt(const State& s, const PhysParams& p, double cfl) {
  const Grid& grid = s.grid();
  const double speed = max_wave_speed(s, p);
  double dt = speed > 0.0 ? cfl * grid.spacing() / speed : cfl * grid.spacing();
  if (p.viscous()) {
    const double k_max = 2.0 * std::numbers::pi / grid.length() * (grid.n() / 3);
    const double mu = std::max(p.nu, 2.0 * p.nu * (1.0 - 1.0 / grid.dim()) + p.lambda);
    const double rho_min = density_of(s, p).min();
    const double rate = p.epsilon * mu * grid.dim() * k_max * k_max / rho_min;
    dt = std::min(dt, 2.0 * cfl / rate);
  }
  return dt;
}

inline double div_velocity_sup(const State& s, const PhysParams& p) {
  return sup_norm(divergence(velocity_of(s, p)));
}

/// Norms of (r - r_bar, u) used by the detectors.
inline NormReport norm_report(const State& s, const PhysParams& p, double sobolev_order) {
  const State sym = to_symmetric(s, p);
  const ScalarField r_hat = sym.density - thermo::r_bar(p);
  NormReport n;
  const double lr = l2_norm(r_hat), lu = l2_norm(sym.flow);
  n.l2 = std::sqrt(lr * lr + lu * lu);
  const double sr = sobolev_norm(r_hat, sobolev_order), su = sobolev_norm(sym.flow, sobolev_order);
  n.sobolev = std::sqrt(sr * sr + su * su);
  n.sobolev_order = sobolev_order;
  n.lipschitz = lipschitz_norm(sym.flow);
  return n;
}

/// Detector cascade: Vacuum -> NonFinite -> SobolevLevel -> LipschitzBlowup.
inline StopReason detect(const State& s, const PhysParams& p, const StopConfig& stop, NormReport* norms = nullptr) {
  try {
    check_state(s, p);
  } catch (const NumericalStop& e) {
    return e.reason;
  }
  const NormReport n = norm_report(s, p, stop.sobolev_order(s.grid().dim()));
  if (norms != nullptr) *norms = n;
  if (n.sobolev >= stop.N_level) return StopReason::sobolev_level;
  if (n.lipschitz >= stop.R_detector) return StopReason::lipschitz_blowup;
  return StopReason::none;
}

namespace detail {

inline State axpy(const State& y, double c, const Tendency& k) {
  State out = y;
  out.density.axpy(c, k.density);
  out.flow.axpy(c, k.flow);
  return out;
}

/// out = wa * a + wb * b (fieldwise).
inline State blend(double wa, const State& a, double wb, const State& b) {
  State out = a;
  out.density *= wa;
  out.density.axpy(wb, b.density);
  out.flow *= wa;
  out.flow.axpy(wb, b.flow);
  return out;
}

inline State drift_step(const State& y0, const PhysParams& p, double dt, const StepOptions& opt) {
  State y = y0;
  const bool spectral = opt.scheme == Scheme::spectral;
  if (spectral && opt.dealias == Dealias::two_thirds) {
    y.density = project(y.density);
    y.flow = project(y.flow);
  }
  auto f = [&](const State& x) { return rhs(x, p, opt.dealias, opt.scheme); };
  if (opt.integrator == Integrator::heun) {
    const State y1 = axpy(y, dt, f(y));
    return blend(0.5, y, 0.5, axpy(y1, dt, f(y1)));
  }
  const State y1 = axpy(y, dt, f(y));
  const State y2 = blend(0.75, y, 0.25, axpy(y1, dt, f(y1)));
  return blend(1.0 / 3.0, y, 2.0 / 3.0, axpy(y2, dt, f(y2)));
}

/// Euler-Maruyama noise increment with every coefficient evaluated at the
/// pre-increment state.
inline void noise_step(State& y, const PhysParams& p, const NoiseModel& model, const std::vector<double>& dB) {
  if (y.form == Formulation::conservative) {
    const VectorField m0 = y.flow;
    for (int k = 0; k < model.modes(); ++k) {
      if (dB[k] == 0.0) continue;
      y.flow.axpy(dB[k], noise::effective_G(model, y.density, m0, k));
    }
  } else {
    const VectorField u0 = y.flow;
    for (int k = 0; k < model.modes(); ++k) {
      if (dB[k] == 0.0) continue;
      y.flow.axpy(dB[k], noise::apply_F_R(model, p, y.density, u0, k));
    }
  }
}

}  // namespace detail

/// Advances one macro step [n dt, (n+1) dt] of the Wiener path, split into
/// 2^level substeps so that each substep satisfies the stability limit.
/// Each substep is a deterministic drift step followed by an Ito
/// (left-point) noise increment built from the bridge-refined path.
inline std::pair<State, StepReport> step(const State& state, const PhysParams& p, const WienerPath& path,
                                         std::int64_t macro_index, const NoiseModel& model,
                                         const StopConfig& stop, const StepOptions& opt = {}) {
  StepReport report;
  State y = state;
  try {
    check_state(y, p);
    report.max_wave_speed = max_wave_speed(y, p);
    int level = 0;
    if (opt.fixed_level) {
      level = *opt.fixed_level;
    } else {
      const double limit = stable_dt(y, p, stop.cfl);
      while (path.substep(level) > limit * (1.0 + 1e-12)) {
        if (++level > opt.max_level) throw NumericalStop(StopReason::non_finite);
      }
    }
    const int substeps = 1 << level;
    const double dt = path.substep(level);
    report.dt_used = dt;
    report.substeps = substeps;

    const bool use_noise = opt.noise && model.modes() > 0;
    std::vector<std::vector<double>> increments;
    if (use_noise) {
      if (path.modes() < model.modes()) throw std::invalid_argument("step: Wiener path has too few modes");
      for (int k = 0; k < model.modes(); ++k) increments.push_back(path.refine(k, macro_index, level));
    }

    double div_prev = div_velocity_sup(y, p);
    std::vector<double> dB(static_cast<std::size_t>(model.modes()), 0.0);
    for (int sub = 0; sub < substeps; ++sub) {
      if (opt.drift) y = detail::drift_step(y, p, dt, opt);
      if (use_noise) {
        for (int k = 0; k < model.modes(); ++k) dB[k] = increments[k][sub];
        detail::noise_step(y, p, model, dB);
      }
      y.time = state.time + (sub + 1) * dt;
      check_state(y, p);
      const double div_now = div_velocity_sup(y, p);
      report.div_u_integral += 0.5 * dt * (div_prev + div_now);
      div_prev = div_now;
    }
    y.time = state.time + path.dt();
  } catch (const NumericalStop& e) {
    report.stop = e.reason;
    return {y, report};
  }
  report.stop = detect(y, p, stop, &report.norms);
  if (report.stop == StopReason::none || report.stop == StopReason::sobolev_level ||
      report.stop == StopReason::lipschitz_blowup) {
    const ScalarField rho = density_of(y, p);
    report.min_rho = rho.min();
    report.max_rho = rho.max();
  }
  return {y, report};
}

}  // namespace dynamics

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryRecord {
  double time = 0.0;
  std::int64_t macro_index = 0;  // path step reached at this record
  StepReport report;             // report of the macro step ending here
  double div_u_integral = 0.0;   // cumulative integral of ||div u||_inf
  std::optional<State> state;
};

struct Trajectory {
  PhysParams params;
  std::optional<WienerPath> path;
  std::vector<TrajectoryRecord> records;
  StopReason stop = StopReason::none;
  double stopping_time = 0.0;
};

struct RunOptions {
  StepOptions step;
  int record_every = 1;
  bool store_states = true;
  bool record_path = true;
  /// Called after every macro step (including the initial state, index 0).
  std::function<void(std::int64_t macro_index, const State&, const StepReport&)> observer;
};

struct RunResult {
  Trajectory trajectory;
  State final_state;
  StepReport final_report;
  double stopping_time = 0.0;
  StopReason stop = StopReason::none;
};

namespace dynamics {

/// Iterates `step` from the initial state until a detector fires or the
/// horizon stop.T_max is reached. The stopping time is the first detector
/// hit, or T_max.
inline RunResult run_until(const State& initial, const PhysParams& p, const WienerPath& path,
                           const NoiseModel& model, const StopConfig& stop, const RunOptions& opt = {}) {
  p.validate();
  stop.validate();
  if (opt.record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  RunResult result;
  Trajectory& traj = result.trajectory;
  traj.params = p;
  if (opt.record_path) traj.path = path;

  const std::int64_t total = std::max<std::int64_t>(1, std::llround(stop.T_max / path.dt()));
  double div_integral = 0.0;

  StepReport initial_report;
  initial_report.stop = detect(initial, p, stop, &initial_report.norms);
  if (initial_report.stop == StopReason::none || initial_report.stop == StopReason::sobolev_level ||
      initial_report.stop == StopReason::lipschitz_blowup) {
    const ScalarField rho = density_of(initial, p);
    initial_report.min_rho = rho.min();
    initial_report.max_rho = rho.max();
    initial_report.max_wave_speed = max_wave_speed(initial, p);
  }
  auto push = [&](const State& s, const StepReport& r, std::int64_t index) {
    TrajectoryRecord rec{s.time, index, r, div_integral, std::nullopt};
    if (opt.store_states) rec.state = s;
    traj.records.push_back(std::move(rec));
  };
  push(initial, initial_report, 0);
  if (opt.observer) opt.observer(0, initial, initial_report);
  result.final_report = initial_report;
  result.final_state = initial;
  if (initial_report.stop != StopReason::none) {
    result.stop = traj.stop = initial_report.stop;
    result.stopping_time = traj.stopping_time = initial.time;
    return result;
  }

  State y = initial;
  for (std::int64_t n = 0; n < total; ++n) {
    auto [next, report] = step(y, p, path, n, model, stop, opt.step);
    y = std::move(next);
    div_integral += report.div_u_integral;
    result.final_report = report;
    if (opt.observer) opt.observer(n + 1, y, report);
    const bool last = report.stop != StopReason::none || n + 1 == total;
    if ((n + 1) % opt.record_every == 0 || last) push(y, report, n + 1);
    if (report.stop != StopReason::none) {
      result.stop = traj.stop = report.stop;
      result.stopping_time = traj.stopping_time = y.time;
      result.final_state = std::move(y);
      return result;
    }
  }
  result.stopping_time = traj.stopping_time = y.time;
  result.final_state = std::move(y);
  return result;
}

}  // namespace dynamics

struct MaxPrincipleResult {
  std::vector<double> times;
  std::vector<double> lower;
  std::vector<double> upper;
  bool violated = false;
  double worst_excess = 0.0;  // largest exit beyond the envelope, net of tolerance
};

namespace dynamics {

/// Density envelopes inf rho0 exp(-int ||div u||_inf) <= rho <= sup rho0 exp(+int ||div u||_inf)
/// checked at every record, with tolerance 10 dt (upper - lower) plus a
/// round-off floor.
inline MaxPrincipleResult max_principle_bounds(const Trajectory& traj) {
  MaxPrincipleResult out;
  if (traj.records.empty()) return out;
  const double inf0 = traj.records.front().report.min_rho;
  const double sup0 = traj.records.front().report.max_rho;
  const double dt = traj.path ? traj.path->dt() : 0.0;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * sup0;
  for (const auto& rec : traj.records) {
    if (rec.report.stop == StopReason::vacuum || rec.report.stop == StopReason::non_finite) break;
    const double lo = inf0 * std::exp(-rec.div_u_integral);
    const double hi = sup0 * std::exp(rec.div_u_integral);
    const double tol = 10.0 * dt * (hi - lo) + floor;
    out.times.push_back(rec.time);
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    const double excess = std::max(lo - rec.report.min_rho, rec.report.max_rho - hi) - tol;
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > 0.0) out.violated = true;
  }
  return out;
}

}  // namespace dynamics
}  // namespace sce
