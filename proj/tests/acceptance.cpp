// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "oracles.hpp"
#include "sce/sce.hpp"

using namespace sce;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PhysParams gas(double gamma = 2.0, double a = 1.0) {
  PhysParams p;
  p.gamma = gamma;
  p.a = a;
  return p;
}

VectorField vec(const ScalarField& f) {
  VectorField v(f.grid());
  v[0] = f;
  return v;
}

ScalarField sampled(const Grid& g, const std::function<double(double)>& f) {
  return ScalarField::sample(g, [&](auto x) { return f(x[0]); });
}

double rel_l2(const State& a, const State& b) {
  const double den = std::sqrt(std::pow(l2_norm(b.density), 2) + std::pow(l2_norm(b.flow), 2));
  return harness::state_distance(a, b) / den;
}

RunConfig sweep_config() { return config::load(std::string(SCE_CONFIG_DIR) + "/sweep.cfg"); }

// 1 -------------------------------------------------------------------------
Outcome transform_fidelity() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> lrho(-6.0, 3.0), gam(1.01, 4.0), la(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PhysParams p = gas(gam(rng), std::pow(10.0, la(rng)));
    const double rho = std::pow(10.0, lrho(rng));
    worst = std::max(worst, std::abs(thermo::r_to_rho(p, thermo::rho_to_r(p, rho)) - rho) / rho);
  }
  double closed = 0.0;
  const PhysParams p2 = gas();
  std::uniform_real_distribution<double> d(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double rho = d(rng), ref = 0.01 + d(rng);
    if (rho > 0.0) closed = std::max(closed, std::abs(thermo::rho_to_r(p2, rho) - 2.0 * std::sqrt(rho)));
    const double h = (rho - ref) * (rho - ref);
    closed = std::max(closed, std::abs(thermo::h_potential(p2, rho, ref) - h) / std::max(1.0, h));
  }
  return {worst <= 1e-12 && closed <= 1e-12, fmt("roundtrip %.2e, closed forms %.2e", worst, closed)};
}

// 2 -------------------------------------------------------------------------
Outcome norm_correctness() {
  std::mt19937_64 rng(202);
  const Grid g(1, 128, kTwoPi);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto poly = oracle::random_trig(rng, 20);
    const ScalarField f = sampled(g, poly);
    const double exact = std::sqrt(poly.l2_squared());
    const double s0 = sobolev_norm(f, 0.0);
    worst = std::max({worst, std::abs(s0 - l2_norm(f)) / exact, std::abs(s0 - exact) / exact});
  }
  const double quad = std::sqrt(oracle::periodic_quadrature(
      [](double x) { return std::sin(x) * std::sin(x) + std::cos(x) * std::cos(x); }, kTwoPi, 4096));
  const double s1 = sobolev_norm(sampled(Grid(1, 64, kTwoPi), [](double x) { return std::sin(x); }), 1.0);
  const double e1 = std::max(std::abs(s1 - quad), std::abs(s1 - std::sqrt(kTwoPi)));
  return {worst <= 1e-10 && e1 <= 1e-8, fmt("Parseval %.2e, ||sin||_1 error %.2e", worst, e1)};
}

// 3 -------------------------------------------------------------------------
double formulation_gap(int n, int level) {
  RunConfig c;
  c.n = n;
  c.noise.modes = 8;
  c.noise.support = Box{{2.0, 0.0}, {4.0, 0.0}};
  c.init.amplitude = 0.3;
  c.init.rho_amplitude = 0.2;
  c.stop.T_max = 0.2;
  RunOptions opt;
  opt.store_states = false;
  opt.step.fixed_level = level;
  const WienerPath path = harness::make_path(c, 7);
  const sce::Setup cons = harness::make_setup(c, 0.0);
  c.formulation = Formulation::symmetric;
  const sce::Setup sym = harness::make_setup(c, 0.0);
  const RunResult a = dynamics::run_until(cons.initial, cons.phys, path, cons.model, cons.stop, opt);
  const RunResult b = dynamics::run_until(sym.initial, sym.phys, path, sym.model, sym.stop, opt);
  if (a.stop != StopReason::none || b.stop != StopReason::none) return kInf;
  return rel_l2(dynamics::to_conservative(b.final_state, sym.phys), a.final_state);
}

Outcome formulation_equivalence() {
  const double coarse = formulation_gap(256, 2);
  const double fine = formulation_gap(512, 3);
  return {coarse <= 5e-3 && fine <= 0.5 * coarse,
          fmt("N=256 gap %.2e, N=512 with dt/2 gap %.2e (drop %.2fx)", coarse, fine, coarse / fine)};
}

// 4 -------------------------------------------------------------------------
Outcome deterministic_convergence() {
  RunConfig c;
  c.n = 128;
  c.integrator = Integrator::heun;
  c.init.amplitude = 0.5;
  c.init.rho_amplitude = 0.1;
  c.stop.T_max = 0.5;
  c.path_dt = 0.01;
  const auto rows = harness::refinement_study(c, 2, 3, 16, 2, 6);
  double min_order = kInf, min_drop = kInf;
  std::string detail;
  for (const auto& r : rows) {
    if (r.kind == "time" && std::isfinite(r.order)) min_order = std::min(min_order, r.order);
    if (r.kind == "space" && std::isfinite(r.order)) min_drop = std::min(min_drop, std::exp2(r.order));
  }
  return {min_order >= 1.8 && min_drop >= 10.0,
          fmt("Heun temporal order %.3f, spatial drop per doubling %.1fx", min_order, min_drop)};
}

// 5 -------------------------------------------------------------------------
Outcome maximum_principle() {
  RunConfig c;
  c.n = 256;
  c.noise.modes = 8;
  c.noise.alpha0 = 0.2;
  c.noise.support = Box{{2.0, 0.0}, {4.5, 0.0}};
  c.init.amplitude = 0.5;
  c.init.rho_amplitude = 0.2;
  c.stop.T_max = 1.0;
  c.stop.R_detector = 20.0;
  const sce::Setup s = harness::make_setup(c, 0.0);
  int violations = 0, broken = 0;
  double worst = -kInf;
  for (std::uint64_t seed = 1; seed <= 16; ++seed) {
    const RunResult r = dynamics::run_until(s.initial, s.phys, harness::make_path(c, seed), s.model, s.stop);
    if (harness::breakdown(r.stop)) ++broken;
    const MaxPrincipleResult mp = dynamics::max_principle_bounds(r.trajectory);
    if (mp.violated) ++violations;
    worst = std::max(worst, mp.worst_excess);
  }
  return {violations == 0 && broken == 0,
          fmt("%d/16 violations, %d breakdowns, worst excess over tolerance %.2e", violations, broken, worst)};
}

// 6 -------------------------------------------------------------------------
Outcome energy_ledger() {
  RunConfig c;
  c.n = 256;
  c.phys.lambda = 1.0;
  c.init.amplitude = 0.5;
  c.stop.T_max = 1.0;

  // deterministic, eps > 0
  RunConfig det = c;
  det.noise.modes = 0;
  const sce::Setup ds = harness::make_setup(det, 0.01);
  const RunResult dr = dynamics::run_until(ds.initial, ds.phys, harness::make_path(det, 1), ds.model, ds.stop);
  const auto dl = diagnostics::energy_audit(dr.trajectory, ds.model);
  const double e0 = dl.front().energy();
  double excess = -kInf;
  for (const auto& row : dl) excess = std::max(excess, (row.energy() + row.dissipation_accum - e0) / e0);
  const bool det_ok = excess <= 1e-8 && dl.back().dissipation_accum > 0.0;

  // stochastic, 64 paths
  RunConfig sto = c;
  sto.noise.modes = 8;
  sto.noise.alpha0 = 0.2;
  sto.noise.support = Box{{2.0, 0.0}, {4.5, 0.0}};
  const sce::Setup ss = harness::make_setup(sto, 0.01);
  std::vector<double> defects;
  for (std::uint64_t seed = 1; seed <= 64; ++seed) {
    const RunResult r = dynamics::run_until(ss.initial, ss.phys, harness::make_path(sto, seed), ss.model, ss.stop);
    defects.push_back(diagnostics::energy_audit(r.trajectory, ss.model).back().defect);
  }
  const auto [mean, se] = harness::mean_stderr(defects);
  const bool sto_ok = std::abs(mean) <= 3.0 * se;

  // zero noise, eps = 0, smooth short run: defect against dt
  RunConfig zero = c;
  zero.noise.modes = 0;
  zero.stop.T_max = 0.5;
  std::vector<double> worst;
  for (double dt : {0.004, 0.002, 0.001}) {
    zero.path_dt = dt;
    const sce::Setup zs = harness::make_setup(zero, 0.0);
    RunOptions opt;
    opt.step = zs.step;
    opt.step.fixed_level = 0;
    const RunResult r = dynamics::run_until(zs.initial, zs.phys, harness::make_path(zero, 1), zs.model, zs.stop, opt);
    double w = 0.0;
    for (const auto& row : diagnostics::energy_audit(r.trajectory, zs.model)) w = std::max(w, std::abs(row.defect));
    worst.push_back(w);
  }
  const bool halves = worst[1] <= 0.5 * worst[0] && worst[2] <= 0.5 * worst[1];
  return {det_ok && sto_ok && halves,
          fmt("deterministic max (E+D-E0)/E0 %.2e; stochastic mean defect %.2e +- %.2e (%.2f SE); "
              "zero-noise |defect| %.2e -> %.2e -> %.2e",
              excess, mean, se, se > 0.0 ? std::abs(mean) / se : 0.0, worst[0], worst[1], worst[2])};
}

// 7 -------------------------------------------------------------------------
Outcome blowup_detection() {
  RunConfig c;
  c.n = 256;
  c.init.recipe = Recipe::steep;
  c.init.amplitude = 0.5;
  c.init.steepness = 10.0;
  c.noise.modes = 8;
  c.noise.support = Box{{2.0, 0.0}, {4.5, 0.0}};
  c.stop.R_detector = 25.0;
  c.stop.T_max = 3.0;
  const sce::Setup s = harness::make_setup(c, 0.0);
  int good = 0, broke = 0, vacuum = 0;
  double latest = 0.0;
  for (std::uint64_t seed = 1; seed <= 16; ++seed) {
    const WienerPath path = harness::make_path(c, seed);
    // detector on: where does it fire, and was every sample up to it finite?
    bool saw_bad = false;
    RunOptions opt;
    opt.store_states = false;
    opt.observer = [&](std::int64_t, const State& st, const StepReport&) {
      saw_bad = saw_bad || !st.density.is_finite() || !st.flow.is_finite();
    };
    const RunResult on = dynamics::run_until(s.initial, s.phys, path, s.model, s.stop, opt);
    // detector off: first non-finite sample of the same path, if any
    StopConfig open = s.stop;
    open.R_detector = kInf;
    open.T_max = s.stop.T_max;
    RunOptions plain;
    plain.store_states = false;
    plain.step.max_level = 12;
    const RunResult off = dynamics::run_until(s.initial, s.phys, path, s.model, open, plain);
    const double first_bad = off.stop == StopReason::non_finite ? off.stopping_time : kInf;
    if (std::isfinite(first_bad)) ++broke;
    if (off.stop == StopReason::vacuum) ++vacuum;
    const bool ok = on.stop == StopReason::lipschitz_blowup && !saw_bad && on.stopping_time < first_bad;
    if (ok) ++good;
    latest = std::max(latest, on.stopping_time);
  }
  return {good == 16,
          fmt("%d/16 seeds stopped by the Lipschitz detector on finite samples (latest t=%.2f); "
              "undetected continuations to t=%.0f: %d non-finite, %d vacuum",
              good, latest, s.stop.T_max, broke, vacuum)};
}

// 8 -------------------------------------------------------------------------
Outcome inviscid_limit() {
  const RunConfig c = sweep_config();
  const SweepResult r = harness::inviscid_sweep(c);
  std::vector<double> eps, e;
  for (const auto& row : r.rows) {
    eps.push_back(row.eps);
    e.push_back(row.sup_mean);
  }
  // rows ascend in eps: strictly decreasing as eps decreases means strictly increasing here
  bool monotone = true;
  for (std::size_t i = 1; i < e.size(); ++i) monotone = monotone && e[i] > e[i - 1];
  const double ratio = e.front() / e.back();
  const double slope = harness::loglog_slope(eps, e);
  std::string values;
  for (std::size_t i = e.size(); i-- > 0;) values += fmt("%s%.3e", i + 1 == e.size() ? "" : ", ", e[i]);
  return {!r.failed && monotone && ratio <= 0.05 && slope >= 0.7 && slope <= 1.3,
          fmt("sup E [%s], ratio %.4f, slope %.3f, window %.2f, excluded %d", values.c_str(), ratio, slope,
              r.window, r.excluded)};
}

// 9 -------------------------------------------------------------------------
Outcome ill_prepared() {
  const RunConfig c = sweep_config();
  const Grid g = c.grid();
  const auto [rho0, u0] = harness::initial_data(g, c.phys, c.init);
  std::vector<double> eps{1e-2, 1e-3, 1e-4}, h, k;
  for (double e : eps) {
    const auto [rho, v] =
        harness::make_ill_prepared(e, rho0, u0, c.ill_rho_min * c.phys.rho_bar, c.ill_rho_max * c.phys.rho_bar);
    h.push_back(integrate(thermo::h_potential(c.phys, rho, rho0)));
    const ScalarField dv = v[0] - u0[0];
    k.push_back(integrate(dv * dv));
  }
  const double sh = harness::loglog_slope(eps, h), sk = harness::loglog_slope(eps, k);
  return {std::abs(sh - 1.0) <= 0.1 && std::abs(sk - 1.0) <= 0.1,
          fmt("slope of int H %.4f, slope of int |v-u|^2 %.4f", sh, sk)};
}

// 10 ------------------------------------------------------------------------
Outcome remainder_certificates() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double gammas[] = {1.4, 5.0 / 3.0, 2.0, 3.0};
  const Grid g(1, 128, kTwoPi);
  NoiseSpec spec;
  spec.modes = 6;
  spec.alpha0 = 0.3;
  spec.support = Box{{1.5, 0.0}, {5.0, 0.0}};
  int flagged = 0, independent = 0;
  for (int t = 0; t < 100; ++t) {
    PhysParams p = gas(gammas[t % 4], 0.5 + unit(rng));
    p.lambda = 0.5 + unit(rng);
    p.epsilon = std::pow(10.0, -3.0 * unit(rng));
    spec.cutoff = t % 2 ? std::optional<double>(2.0 + 3.0 * unit(rng)) : std::nullopt;
    const NoiseModel m = NoiseModel::linear(g, spec);
    // densities in [0.5, 2], velocities of size <= 1
    auto field = [&](double centre, double spread) {
      const auto poly = oracle::random_trig(rng, 6);
      ScalarField f = sampled(g, poly);
      const double s = std::max(std::abs(f.min()), std::abs(f.max()));
      return centre + (spread / s) * f;
    };
    const ScalarField rho = field(1.25, 0.7 * unit(rng) + 0.05);
    const ScalarField rho_e = field(1.25, 0.7 * unit(rng) + 0.05);
    const ScalarField u = field(0.0, unit(rng));
    const ScalarField v = field(0.0, unit(rng));
    const RemainderReport rep = diagnostics::remainder_terms(rho_e, vec(v), rho, vec(u), m, p);
    if (rep.any_exceeded()) ++flagged;

    // the same bounds, recomputed here from their definitions
    const ScalarField du = derivative(u, 0), dv = derivative(v, 0);
    const double re = diagnostics::relative_energy(rho_e, vec(v), rho, vec(u), p);
    const double lip = sup_norm(du);
    const ScalarField w = v - u;
    const double kin = integrate(rho_e * w * w);
    const double hint = integrate(thermo::h_potential(p, rho_e, rho));
    const double visc = 0.5 * p.epsilon * p.lambda * (integrate((du - dv) * (du - dv)) + integrate(du * du));
    const double tol = 1e-12;
    bool ok = std::abs(rep.blocks.viscous) <= visc * (1.0 + tol) + tol;
    ok = ok && std::abs(rep.blocks.convective) <= lip * kin * (1.0 + tol) + tol;
    ok = ok && std::abs(rep.blocks.pressure) <= (p.gamma - 1.0) * lip * hint * (1.0 + tol) + tol;
    ok = ok && rep.blocks.noise >= 0.0 && rep.blocks.noise <= rep.bounds.noise * (1.0 + tol) + tol;
    ok = ok && std::abs(re - rep.relative_energy) <= 1e-12 * (1.0 + re);
    const double others = std::abs(rep.blocks.convective) + std::abs(rep.blocks.pressure) + rep.blocks.noise;
    ok = ok && others <= rep.c_R * re * (1.0 + tol) + tol;
    if (!ok) ++independent;
  }
  return {flagged == 0 && independent == 0,
          fmt("100 pairs: %d flagged by the report, %d by the independent recomputation", flagged, independent)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"transform fidelity", transform_fidelity},
      {"norm correctness", norm_correctness},
      {"formulation equivalence", formulation_equivalence},
      {"deterministic convergence", deterministic_convergence},
      {"maximum principle", maximum_principle},
      {"energy ledger", energy_ledger},
      {"blow-up detection", blowup_detection},
      {"inviscid limit", inviscid_limit},
      {"ill-prepared data", ill_prepared},
      {"remainder certificates", remainder_certificates},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s  %2d %-26s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
