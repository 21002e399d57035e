#pragma once

// Initial-data recipes, ill-prepared perturbations, single runs, the
// inviscid-limit sweep over a shared Wiener path, and refinement studies.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "sce/diagnostics.hpp"
#include "sce/dynamics.hpp"
#include "sce/harness/config.hpp"

namespace sce {

struct Setup {
  Grid grid;
  PhysParams phys;
  NoiseModel model;
  StopConfig stop;
  StepOptions step;
  ScalarField rho0;
  VectorField u0;
  State initial;
};

struct SweepRow {
  double eps = 0.0;
  double sup_mean = 0.0;     // sup over recorded t of the path-mean relative energy
  double std_error = 0.0;    // standard error of that mean at the maximizing time
  double t_sup = 0.0;
  double initial_mean = 0.0; // mean relative energy at t = 0
  double c_R = 0.0;          // largest remainder rate constant seen on the window
  double gronwall = 0.0;     // c_R (E(0) + eps) exp(c_R window)
  double audit_defect_mean = 0.0;  // path-mean ledger defect at the window end
  double audit_defect_stderr = 0.0;
  int remainder_violations = 0;
  double rho_gap = 0.0;       // path-mean windowed convergence metrics
  double momentum_gap = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending in eps
  double window = 0.0;
  int paths = 0;
  int excluded = 0;
  bool failed = false;          // more than 10% of the paths excluded
  std::vector<std::uint64_t> excluded_seeds;
  std::vector<double> ref_stop_times;
  std::vector<double> lipschitz_hit_times;  // first detector hits of each reference run (inf: none)
  std::vector<double> sobolev_hit_times;
};

struct RefinementRow {
  std::string kind;  // "time" or "space"
  int n = 0;
  double dt = 0.0;
  double error = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();  // log2 of the error ratio to the previous row
};

namespace harness {

inline double default_width(const Grid& g, double w) { return w > 0.0 ? w : g.length() / 4.0; }

/// Smooth compactly supported profile centred in the box.
inline ScalarField centred_bump(const Grid& g, double width) {
  const double c[2] = {0.5 * g.length(), 0.5 * g.length()};
  return ScalarField::sample(g, [&](std::span<const double> x) {
    return bump(x, std::span<const double>(c, x.size()), width);
  });
}

/// Base (well-prepared) data of a recipe.
inline std::pair<ScalarField, VectorField> initial_data(const Grid& g, const PhysParams& p, const InitialData& init) {
  const double kappa = 2.0 * std::numbers::pi / g.length() * init.wavenumber;
  ScalarField rho(g, p.rho_bar);
  VectorField u(g);
  switch (init.recipe) {
    case Recipe::constant:
      rho = ScalarField(g, p.rho_bar * (1.0 + init.rho_amplitude));
      u[0] = ScalarField(g, init.amplitude);
      break;
    case Recipe::sine:
      rho = ScalarField::sample(g, [&](auto x) { return p.rho_bar * (1.0 + init.rho_amplitude * std::cos(kappa * x[0])); });
      for (int d = 0; d < g.dim(); ++d) {
        u[d] = ScalarField::sample(g, [&](auto x) { return init.amplitude * std::sin(kappa * x[d]); });
      }
      break;
    case Recipe::bump: {
      const ScalarField b = centred_bump(g, default_width(g, init.width));
      rho = p.rho_bar * (1.0 + init.rho_amplitude * b);
      u[0] = init.amplitude * b;
      break;
    }
    case Recipe::steep:
      rho = ScalarField::sample(g, [&](auto x) { return p.rho_bar * (1.0 + init.rho_amplitude * std::cos(kappa * x[0])); });
      u[0] = ScalarField::sample(g, [&](auto x) {
        return init.amplitude * std::tanh(init.steepness * std::sin(kappa * x[0])) / std::tanh(init.steepness);
      });
      break;
  }
  if (!(rho.min() > 0.0)) throw ConfigError("initial data: density must be strictly positive");
  return {rho, u};
}

/// rho_{0,eps} = clamp(rho0 (1 + sqrt(eps) psi), [rho_lo, rho_hi]), v_{0,eps} = u0 + sqrt(eps) zeta
/// with psi, zeta fixed centred bumps of width L/4.
inline std::pair<ScalarField, VectorField> make_ill_prepared(double eps, const ScalarField& rho0, const VectorField& u0,
                                                             double rho_lo, double rho_hi) {
  if (!(eps >= 0.0)) throw std::invalid_argument("make_ill_prepared: eps must be >= 0");
  if (!(rho_lo > 0.0) || !(rho0.min() >= rho_lo) || !(rho0.max() <= rho_hi)) {
    throw std::domain_error("make_ill_prepared: base density outside the positive corridor");
  }
  const Grid& g = rho0.grid();
  const ScalarField psi = centred_bump(g, g.length() / 4.0);
  const double s = std::sqrt(eps);
  ScalarField rho(g);
  for (std::size_t i = 0; i < g.size(); ++i) rho[i] = std::clamp(rho0[i] * (1.0 + s * psi[i]), rho_lo, rho_hi);
  VectorField v = u0;
  for (int d = 0; d < g.dim(); ++d) v[d].axpy(s / (d + 1), psi);
  return {rho, v};
}

inline NoiseModel make_model(const RunConfig& c) { return NoiseModel::linear(c.grid(), c.noise); }

inline WienerPath make_path(const RunConfig& c, std::uint64_t seed) {
  return WienerPath(seed, c.noise.modes, c.path_dt);
}

/// Everything needed to run `c` with viscosity scale eps.
inline Setup make_setup(const RunConfig& c, double eps) {
  c.validate();
  Setup s;
  s.grid = c.grid();
  s.phys = c.phys;
  s.phys.epsilon = eps;
  s.model = make_model(c);
  s.stop = c.stop;
  s.step.integrator = c.integrator;
  s.step.scheme = c.scheme;
  auto [rho, u] = initial_data(s.grid, s.phys, c.init);
  s.rho0 = rho;
  s.u0 = u;
  if (c.ill == IllPrepared::sqrt_eps) {
    std::tie(rho, u) = make_ill_prepared(eps, rho, u, c.ill_rho_min * c.phys.rho_bar, c.ill_rho_max * c.phys.rho_bar);
  }
  s.initial = dynamics::make_state(c.formulation, s.phys, rho, u);
  return s;
}

/// Runs fn(i) for i in [0, count) on `workers` threads.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline bool breakdown(StopReason r) { return r == StopReason::vacuum || r == StopReason::non_finite; }

/// Mean and standard error of the mean, summed in index order.
inline std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double mean = s.value() / xs.size();
  if (xs.size() < 2) return {mean, 0.0};
  CompensatedSum v;
  for (double x : xs) v.add((x - mean) * (x - mean));
  return {mean, std::sqrt(v.value() / (xs.size() - 1) / xs.size())};
}

/// Inviscid-limit sweep: for every seed an Euler reference and one viscous
/// run per eps, all driven by the same Wiener path. The comparison window is
/// the earliest reference stopping time over the non-excluded paths.
inline SweepResult inviscid_sweep(const RunConfig& c) {
  c.validate();
  const Setup base = make_setup(c, 0.0);
  const int M = c.paths;
  SweepResult result;
  result.paths = M;

  struct RefRun {
    RunResult run;
    bool excluded = false;
    double lipschitz_hit = std::numeric_limits<double>::infinity();
    double sobolev_hit = std::numeric_limits<double>::infinity();
  };
  std::vector<RefRun> refs(static_cast<std::size_t>(M));
  RunOptions ref_opt;
  ref_opt.step = base.step;
  ref_opt.record_every = c.output_every;
  parallel_for(M, c.workers, [&](int m) {
    RefRun& r = refs[static_cast<std::size_t>(m)];
    const WienerPath path = make_path(c, c.seed + static_cast<std::uint64_t>(m));
    r.run = dynamics::run_until(base.initial, base.phys, path, base.model, base.stop, ref_opt);
    r.excluded = breakdown(r.run.stop);
    if (r.run.stop == StopReason::lipschitz_blowup) r.lipschitz_hit = r.run.stopping_time;
    if (r.run.stop == StopReason::sobolev_level) r.sobolev_hit = r.run.stopping_time;
    // the run halts at the first hit; the other detector is checked on the records
    for (const auto& rec : r.run.trajectory.records) {
      if (rec.report.stop == StopReason::vacuum || rec.report.stop == StopReason::non_finite) break;
      if (rec.report.norms.lipschitz >= c.stop.R_detector) r.lipschitz_hit = std::min(r.lipschitz_hit, rec.time);
      if (rec.report.norms.sobolev >= c.stop.N_level) r.sobolev_hit = std::min(r.sobolev_hit, rec.time);
    }
  });

  double window = c.stop.T_max;
  for (const auto& r : refs) {
    result.ref_stop_times.push_back(r.run.stopping_time);
    result.lipschitz_hit_times.push_back(r.lipschitz_hit);
    result.sobolev_hit_times.push_back(r.sobolev_hit);
    if (!r.excluded) window = std::min(window, r.run.stopping_time);
  }
  const std::int64_t window_steps = std::llround(window / c.path_dt);
  result.window = window;

  std::vector<double> eps = c.eps_list;
  std::sort(eps.begin(), eps.end());
  const int E = static_cast<int>(eps.size());

  // macro indices compared: multiples of the output cadence inside the window
  std::vector<std::int64_t> compare;
  for (std::int64_t n = 0; n <= window_steps; n += c.output_every) compare.push_back(n);

  struct Cell {
    std::vector<double> energy;  // relative energy at each compared index
    double c_R = 0.0;
    int violations = 0;
    double defect = 0.0;
    ConvergenceMetrics metrics;
    bool breakdown = false;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(M * E));
  if (window_steps > 0 || !compare.empty()) {
    parallel_for(M * E, c.workers, [&](int task) {
      const int m = task / E, e = task % E;
      if (refs[static_cast<std::size_t>(m)].excluded) return;
      Cell& cell = cells[static_cast<std::size_t>(task)];
      const Setup s = make_setup(c, eps[static_cast<std::size_t>(e)]);
      const WienerPath path = make_path(c, c.seed + static_cast<std::uint64_t>(m));
      StopConfig stop = s.stop;
      stop.T_max = std::max(window, c.path_dt);
      stop.R_detector = std::numeric_limits<double>::infinity();
      stop.N_level = std::numeric_limits<double>::infinity();
      RunOptions opt;
      opt.step = s.step;
      opt.record_every = c.output_every;
      RunResult run = dynamics::run_until(s.initial, s.phys, path, s.model, stop, opt);
      if (breakdown(run.stop)) {
        cell.breakdown = true;
        return;
      }
      const auto& ref_records = refs[static_cast<std::size_t>(m)].run.trajectory.records;
      auto find = [](const std::vector<TrajectoryRecord>& recs, std::int64_t idx) -> const TrajectoryRecord* {
        for (const auto& r : recs) {
          if (r.macro_index == idx) return &r;
        }
        return nullptr;
      };
      for (std::int64_t idx : compare) {
        const TrajectoryRecord* rw = find(run.trajectory.records, idx);
        const TrajectoryRecord* rr = find(ref_records, idx);
        if (rw == nullptr || rr == nullptr) throw std::logic_error("sweep: missing record on the comparison grid");
        const ScalarField rho = dynamics::density_of(*rw->state, s.phys);
        const VectorField v = dynamics::velocity_of(*rw->state, s.phys);
        const ScalarField rho_ref = dynamics::density_of(*rr->state, base.phys);
        const VectorField u = dynamics::velocity_of(*rr->state, base.phys);
        const RemainderReport rep = diagnostics::remainder_terms(rho, v, rho_ref, u, s.model, s.phys);
        cell.energy.push_back(rep.relative_energy);
        cell.c_R = std::max(cell.c_R, rep.c_R);
        if (rep.any_exceeded()) ++cell.violations;
        const ConvergenceMetrics cm = diagnostics::convergence_metrics(rho, v, rho_ref, u, base.phys);
        cell.metrics.rho_gap = std::max(cell.metrics.rho_gap, cm.rho_gap);
        cell.metrics.momentum_gap = std::max(cell.metrics.momentum_gap, cm.momentum_gap);
      }
      const auto ledger = diagnostics::energy_audit(run.trajectory, s.model);
      cell.defect = ledger.empty() ? 0.0 : ledger.back().defect;
    });
  }

  for (int m = 0; m < M; ++m) {
    bool excluded = refs[static_cast<std::size_t>(m)].excluded;
    for (int e = 0; e < E; ++e) excluded = excluded || cells[static_cast<std::size_t>(m * E + e)].breakdown;
    if (excluded) {
      ++result.excluded;
      result.excluded_seeds.push_back(c.seed + static_cast<std::uint64_t>(m));
    }
  }
  result.failed = result.excluded * 10 > M;

  for (int e = 0; e < E; ++e) {
    SweepRow row;
    row.eps = eps[static_cast<std::size_t>(e)];
    std::vector<const Cell*> kept;
    for (int m = 0; m < M; ++m) {
      if (std::find(result.excluded_seeds.begin(), result.excluded_seeds.end(),
                    c.seed + static_cast<std::uint64_t>(m)) != result.excluded_seeds.end()) {
        continue;
      }
      kept.push_back(&cells[static_cast<std::size_t>(m * E + e)]);
    }
    if (!kept.empty()) {
      for (std::size_t j = 0; j < compare.size(); ++j) {
        std::vector<double> xs;
        for (const Cell* cell : kept) xs.push_back(cell->energy[j]);
        const auto [mean, se] = mean_stderr(xs);
        if (j == 0) row.initial_mean = mean;
        if (j == 0 || mean > row.sup_mean) {
          row.sup_mean = mean;
          row.std_error = se;
          row.t_sup = static_cast<double>(compare[j]) * c.path_dt;
        }
      }
      std::vector<double> defects, rho_gaps, mom_gaps;
      for (const Cell* cell : kept) {
        row.c_R = std::max(row.c_R, cell->c_R);
        row.remainder_violations += cell->violations;
        defects.push_back(cell->defect);
        rho_gaps.push_back(cell->metrics.rho_gap);
        mom_gaps.push_back(cell->metrics.momentum_gap);
      }
      std::tie(row.audit_defect_mean, row.audit_defect_stderr) = mean_stderr(defects);
      row.rho_gap = mean_stderr(rho_gaps).first;
      row.momentum_gap = mean_stderr(mom_gaps).first;
      row.gronwall = row.c_R * (row.initial_mean + row.eps) * std::exp(row.c_R * window);
    }
    result.rows.push_back(row);
  }
  return result;
}

/// Least-squares slope of log(y) against log(x) over the positive pairs.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Deterministic final state of `c` (noise off) on a given grid size and
/// fixed substep level.
inline State deterministic_final(const RunConfig& c, int n, std::optional<int> level) {
  RunConfig rc = c;
  rc.n = n;
  rc.noise.modes = 0;
  const Setup s = make_setup(rc, c.phys.epsilon);
  StopConfig stop = s.stop;
  stop.R_detector = std::numeric_limits<double>::infinity();
  stop.N_level = std::numeric_limits<double>::infinity();
  RunOptions opt;
  opt.step = s.step;
  opt.step.fixed_level = level;
  opt.store_states = false;
  opt.record_path = false;
  const RunResult r = dynamics::run_until(s.initial, s.phys, make_path(rc, rc.seed), s.model, stop, opt);
  if (r.stop != StopReason::none) throw std::runtime_error("refinement run stopped early");
  return dynamics::to_conservative(r.final_state, s.phys);
}

inline double state_distance(const State& a, const State& b) {
  return std::sqrt(std::pow(l2_norm(a.density - b.density), 2) + std::pow(l2_norm(a.flow - b.flow), 2));
}

/// Restriction of a state on a grid of size 2N to the nodes of size N.
inline State restrict_half(const State& fine, const Grid& coarse) {
  auto pick = [&](const ScalarField& f) {
    ScalarField out(coarse);
    const int nf = f.grid().n();
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      std::size_t j = 0;
      if (coarse.dim() == 1) {
        j = 2 * i;
      } else {
        j = static_cast<std::size_t>(2 * coarse.index(i, 0)) * nf + 2 * coarse.index(i, 1);
      }
      out[i] = f[j];
    }
    return out;
  };
  State out{fine.form, pick(fine.density), VectorField(coarse), fine.time};
  for (int d = 0; d < coarse.dim(); ++d) out.flow[d] = pick(fine.flow[d]);
  return out;
}

/// Self-convergence in time (fixed grid, substep levels L..L+levels) and in
/// space (grid sizes n, 2n, ... with a fixed fine step).
inline std::vector<RefinementRow> refinement_study(const RunConfig& c, int base_level, int levels, int base_n,
                                                   int grids, int space_level) {
  std::vector<RefinementRow> rows;
  std::vector<State> states;
  for (int l = 0; l <= levels; ++l) states.push_back(deterministic_final(c, c.n, base_level + l));
  for (int l = 0; l < levels; ++l) {
    RefinementRow r{"time", c.n, std::ldexp(c.path_dt, -(base_level + l)), state_distance(states[l], states[l + 1])};
    if (!rows.empty()) r.order = std::log2(rows.back().error / r.error);
    rows.push_back(r);
  }
  std::vector<State> space;
  for (int g = 0; g <= grids; ++g) space.push_back(deterministic_final(c, base_n << g, space_level));
  const std::size_t first_space = rows.size();
  for (int g = 0; g < grids; ++g) {
    const Grid coarse = space[g].grid();
    RefinementRow r{"space", coarse.n(), std::ldexp(c.path_dt, -space_level),
                    state_distance(space[g], restrict_half(space[g + 1], coarse))};
    if (rows.size() > first_space) r.order = std::log2(rows.back().error / r.error);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace harness
}  // namespace sce
