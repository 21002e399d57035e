#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sce/diagnostics.hpp"
#include "sce/harness/experiment.hpp"

using namespace sce;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

PhysParams gas(double gamma = 2.0) {
  PhysParams p;
  p.gamma = gamma;
  return p;
}

ScalarField wave(const Grid& g, double c0, double amp, double k, double phase = 0.0) {
  return ScalarField::sample(g, [&](auto x) { return c0 + amp * std::sin(k * x[0] + phase); });
}

VectorField vec(const ScalarField& f) {
  VectorField v(f.grid());
  v[0] = f;
  return v;
}

NoiseModel linear_noise(const Grid& g, std::optional<double> cutoff = std::nullopt, int modes = 4) {
  NoiseSpec s;
  s.modes = modes;
  s.alpha0 = 0.5;
  s.support = Box{{2.0, 0.0}, {4.5, 0.0}};
  s.cutoff = cutoff;
  return NoiseModel::linear(g, s);
}

/// Deterministic run with states recorded every macro step.
RunResult det_run(const RunConfig& c, double eps, double dt, std::optional<int> level = std::nullopt) {
  RunConfig rc = c;
  rc.path_dt = dt;
  rc.noise.modes = 0;
  const sce::Setup s = harness::make_setup(rc, eps);
  RunOptions opt;
  opt.step = s.step;
  opt.step.fixed_level = level;
  return dynamics::run_until(s.initial, s.phys, harness::make_path(rc, 1), s.model, s.stop, opt);
}

}  // namespace

TEST(Energy, ClosedForm) {
  const Grid g(1, 64, kTwoPi);
  const PhysParams p = gas();
  const ScalarField rho(g, 2.0);
  const VectorField v = vec(ScalarField(g, 3.0));
  const EnergyTerms e = diagnostics::energy(rho, v, p);
  EXPECT_NEAR(e.kinetic, 0.5 * 2.0 * 9.0 * kTwoPi, 1e-12);
  EXPECT_NEAR(e.potential, 1.0 * kTwoPi, 1e-12);  // H(2, 1) = 1
}

TEST(Energy, DissipationIsPositiveForNonConstantVelocity) {
  const Grid g(1, 64, kTwoPi);
  PhysParams p = gas();
  p.lambda = 1.0;
  p.epsilon = 0.1;
  const State s = dynamics::make_state(Formulation::conservative, p, ScalarField(g, 1.0), vec(wave(g, 0.0, 1.0, 2.0)));
  // eps lambda int (u')^2 = 0.1 * 4 * pi
  EXPECT_NEAR(diagnostics::dissipation_rate(s, p), 0.1 * 4.0 * std::numbers::pi, 1e-12);
  const State flat = dynamics::make_state(Formulation::conservative, p, ScalarField(g, 1.0), vec(ScalarField(g, 1.0)));
  EXPECT_NEAR(diagnostics::dissipation_rate(flat, p), 0.0, 1e-14);
}

TEST(EnergyAudit, ViscousDeterministicRunSatisfiesInequality) {
  RunConfig c;
  c.n = 128;
  c.phys.lambda = 1.0;
  c.stop.T_max = 1.0;
  const RunResult r = det_run(c, 0.01, 0.01);
  const auto ledger = diagnostics::energy_audit(r.trajectory, NoiseModel(c.grid()));
  ASSERT_EQ(ledger.size(), 101u);
  const double e0 = ledger.front().energy();
  double prev_d = 0.0;
  for (const auto& row : ledger) {
    EXPECT_LE(row.energy() + row.dissipation_accum, e0 * (1.0 + 1e-8));
    EXPECT_GE(row.dissipation_accum, prev_d);
    prev_d = row.dissipation_accum;
  }
  EXPECT_GT(ledger.back().dissipation_accum, 0.0);
}

TEST(EnergyAudit, DeterministicDefectIsFirstOrderOrBetter) {
  RunConfig c;
  c.n = 128;
  c.phys.lambda = 1.0;
  c.stop.T_max = 1.0;
  for (double eps : {0.0, 0.01}) {
    std::vector<double> worst;
    for (double dt : {0.008, 0.004, 0.002}) {
      const RunResult r = det_run(c, eps, dt, 0);
      double w = 0.0;
      for (const auto& row : diagnostics::energy_audit(r.trajectory, NoiseModel(c.grid()))) {
        w = std::max(w, std::abs(row.defect));
      }
      worst.push_back(w);
    }
    for (std::size_t i = 1; i < worst.size(); ++i) EXPECT_LE(worst[i], 0.5 * worst[i - 1]) << "eps=" << eps;
  }
}

TEST(EnergyAudit, NoiseTermsAreMonotoneAndFinite) {
  RunConfig c;
  c.n = 128;
  c.noise.modes = 4;
  c.noise.support = Box{{2.0, 0.0}, {4.5, 0.0}};
  c.stop.T_max = 0.3;
  const sce::Setup s = harness::make_setup(c, 0.0);
  const auto r = dynamics::run_until(s.initial, s.phys, harness::make_path(c, 3), s.model, s.stop);
  const auto ledger = diagnostics::energy_audit(r.trajectory, s.model);
  double prev = 0.0;
  for (const auto& row : ledger) {
    EXPECT_GE(row.ito_accum, prev);
    prev = row.ito_accum;
    EXPECT_TRUE(std::isfinite(row.noise_work_accum));
    EXPECT_TRUE(std::isfinite(row.defect));
  }
  EXPECT_GT(ledger.back().ito_accum, 0.0);
}

TEST(EnergyAudit, MissingPathOrStatesRejected) {
  RunConfig c;
  c.n = 64;
  c.noise.modes = 2;
  c.noise.support = Box{{2.0, 0.0}, {4.5, 0.0}};
  c.stop.T_max = 0.05;
  const sce::Setup s = harness::make_setup(c, 0.0);
  RunOptions opt;
  opt.record_path = false;
  auto r = dynamics::run_until(s.initial, s.phys, harness::make_path(c, 3), s.model, s.stop, opt);
  try {
    diagnostics::energy_audit(r.trajectory, s.model);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "path not recorded");
  }
  opt.record_path = true;
  opt.store_states = false;
  r = dynamics::run_until(s.initial, s.phys, harness::make_path(c, 3), s.model, s.stop, opt);
  EXPECT_THROW(diagnostics::energy_audit(r.trajectory, s.model), std::runtime_error);
}

TEST(RelativeEnergy, Examples) {
  const Grid g(1, 64, kTwoPi);
  const PhysParams p = gas();
  const ScalarField rho = wave(g, 1.0, 0.3, 1.0);
  const ScalarField u = wave(g, 0.0, 0.5, 2.0);
  EXPECT_EQ(diagnostics::relative_energy(rho, vec(u), rho, vec(u), p), 0.0);
  const double c = 0.7;
  EXPECT_NEAR(diagnostics::relative_energy(rho, vec(u + c), rho, vec(u), p), 0.5 * c * c * integrate(rho), 1e-12);
  EXPECT_NEAR(diagnostics::relative_energy(ScalarField(g, 1.5), vec(u), ScalarField(g, 1.0), vec(u), p),
              0.25 * kTwoPi, 1e-12);
  ScalarField bad(g, 1.0);
  bad[5] = 0.0;
  EXPECT_THROW(diagnostics::relative_energy(rho, vec(u), bad, vec(u), p), std::domain_error);
}

TEST(RelativeEnergy, NonnegativeAndVanishesOnlyForCoincidentStates) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> amp(0.0, 0.5), ph(0.0, kTwoPi), scale(0.0, 1.0);
  const Grid g(1, 64, kTwoPi);
  for (double gamma : {1.4, 2.0, 3.0}) {
    const PhysParams p = gas(gamma);
    for (int t = 0; t < 50; ++t) {
      const double s = std::pow(10.0, -8.0 * scale(rng));
      const ScalarField r1 = wave(g, 1.0, amp(rng), 1.0, ph(rng));
      const ScalarField r2 = r1 + s * wave(g, 0.0, 0.4, 2.0, ph(rng));
      const ScalarField u1 = wave(g, 0.0, amp(rng), 1.0, ph(rng));
      const ScalarField u2 = u1 + s * wave(g, 0.0, 1.0, 3.0, ph(rng));
      const double re = diagnostics::relative_energy(r2, vec(u2), r1, vec(u1), p);
      EXPECT_GE(re, 0.0);
      if (re < 1e-12) {
        EXPECT_LT(l2_norm(r2 - r1) + l2_norm(u2 - u1), 1e-5);
      }
    }
  }
}

TEST(Remainder, IdenticalStatesGiveZeroBlocks) {
  const Grid g(1, 64, kTwoPi);
  const PhysParams p = gas();
  const ScalarField rho = wave(g, 1.0, 0.3, 1.0);
  const VectorField u = vec(wave(g, 0.0, 0.5, 2.0));
  const RemainderReport r = diagnostics::remainder_terms(rho, u, rho, u, linear_noise(g, 5.0), p);
  for (double b : r.blocks.as_array()) EXPECT_EQ(b, 0.0);
  EXPECT_FALSE(r.any_exceeded());
}

TEST(Remainder, PressureBlockAtGammaTwoIsHTimesDivergence) {
  const Grid g(1, 64, kTwoPi);
  const PhysParams p = gas(2.0);
  const ScalarField rho_e = wave(g, 1.0, 0.3, 1.0);
  const ScalarField rho = wave(g, 1.1, 0.2, 2.0, 0.4);
  const ScalarField u = wave(g, 0.0, 0.5, 1.0, 1.0);
  const RemainderReport r = diagnostics::remainder_terms(rho_e, vec(u), rho, vec(u), NoiseModel(g), p);
  const ScalarField h = (rho_e - rho) * (rho_e - rho);
  const double want = -integrate(h * derivative(u, 0));
  EXPECT_NEAR(r.blocks.pressure, want, 1e-12);
}

TEST(Remainder, NoiseBlockWithEqualDensitiesMatchesBruteForce) {
  const Grid g(1, 128, kTwoPi);
  const PhysParams p = gas();
  const NoiseModel m = linear_noise(g);
  const ScalarField rho = wave(g, 1.0, 0.3, 1.0);
  const ScalarField u = wave(g, 0.0, 0.5, 1.0);
  const ScalarField v = wave(g, 0.2, 0.4, 3.0, 0.5);
  const RemainderReport r = diagnostics::remainder_terms(rho, vec(v), rho, vec(u), m, p);
  std::vector<double> rv(rho.values().begin(), rho.values().end()), w(g.size());
  std::vector<std::vector<double>> A;
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = v[i] - u[i];
  for (int k = 0; k < m.modes(); ++k) A.emplace_back(m.A(k, 0, 0).values().begin(), m.A(k, 0, 0).values().end());
  EXPECT_NEAR(r.blocks.noise, oracle::noise_block_linear_1d(rv, A, w, g.spacing()), 1e-14);
  EXPECT_GT(r.blocks.noise, 0.0);
}

TEST(Remainder, BlocksRespectCertifiedBounds) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> amp(0.0, 0.4), ph(0.0, kTwoPi), vel(-0.6, 0.6);
  for (double gamma : {1.4, 2.0, 3.0}) {
    for (std::optional<double> cutoff : {std::optional<double>{}, std::optional<double>{3.0}}) {
      const Grid g(1, 64, kTwoPi);
      PhysParams p = gas(gamma);
      p.lambda = 1.0;
      p.epsilon = 0.01;
      const NoiseModel m = linear_noise(g, cutoff);
      for (int t = 0; t < 10; ++t) {
        const ScalarField rho = wave(g, 1.0, amp(rng), 1.0, ph(rng));
        const ScalarField rho_e = rho * wave(g, 1.0, amp(rng), 2.0, ph(rng));
        const ScalarField u = wave(g, vel(rng), amp(rng), 1.0, ph(rng));
        const ScalarField v = u + wave(g, vel(rng), amp(rng), 3.0, ph(rng));
        const RemainderReport r = diagnostics::remainder_terms(rho_e, vec(v), rho, vec(u), m, p);
        EXPECT_FALSE(r.any_exceeded());
        const double du = sup_norm(derivative(u, 0));
        EXPECT_LE(std::abs(r.blocks.convective), 2.0 * du * r.relative_energy * (1.0 + 1e-12));
        const double h = integrate(thermo::h_potential(p, rho_e, rho));
        EXPECT_LE(std::abs(r.blocks.pressure), (gamma - 1.0) * du * h * (1.0 + 1e-12) + 1e-15);
        EXPECT_GE(r.blocks.noise, 0.0);
        EXPECT_LE(r.blocks.noise, r.bounds.noise);
        EXPECT_NEAR(r.certificate, r.c_R * r.relative_energy + r.viscous_budget, 1e-14);
      }
    }
  }
}

TEST(Remainder, VacuumReferenceRejected) {
  const Grid g(1, 32, kTwoPi);
  ScalarField rho_ref(g, 1.0);
  rho_ref[0] = -1.0;
  EXPECT_THROW(diagnostics::remainder_terms(ScalarField(g, 1.0), VectorField(g), rho_ref, VectorField(g),
                                            NoiseModel(g), gas()),
               std::domain_error);
}

TEST(ConvergenceMetrics, Examples) {
  const Grid g(1, 64, kTwoPi);
  const PhysParams p = gas(2.0);
  const ScalarField rho = wave(g, 1.0, 0.3, 1.0);
  const ScalarField u = wave(g, 0.0, 0.5, 2.0);
  const auto zero = diagnostics::convergence_metrics(rho, vec(u), rho, vec(u), p);
  EXPECT_EQ(zero.rho_gap, 0.0);
  EXPECT_EQ(zero.momentum_gap, 0.0);
  const double c = 0.3;
  const auto shift = diagnostics::convergence_metrics(rho, vec(u + c), rho, vec(u), p);
  EXPECT_EQ(shift.rho_gap, 0.0);
  // L^{4/3} norm of rho c, by quadrature
  const double q = 4.0 / 3.0;
  const double want = std::pow(
      oracle::periodic_quadrature([&](double x) { return std::pow(c * (1.0 + 0.3 * std::sin(x)), q); }, kTwoPi, 64),
      1.0 / q);
  EXPECT_NEAR(shift.momentum_gap, want, 1e-12);
}

TEST(ConvergenceMetrics, ExponentFollowsGammaBar) {
  const Grid g(1, 64, kTwoPi);
  const ScalarField rho = wave(g, 1.0, 0.3, 1.0);
  const ScalarField rho2 = rho + 0.1;
  // gamma = 1.4: density gap in L^1.4
  const auto m = diagnostics::convergence_metrics(rho2, VectorField(g), rho, VectorField(g), gas(1.4));
  EXPECT_NEAR(m.rho_gap, std::pow(kTwoPi * std::pow(0.1, 1.4), 1.0 / 1.4), 1e-12);
}

TEST(ConvergenceMetrics, HolderBoundByRelativeEnergy) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> amp(0.0, 0.4), ph(0.0, kTwoPi);
  const Grid g(1, 64, kTwoPi);
  const PhysParams p = gas(2.0);
  for (int t = 0; t < 16; ++t) {
    const ScalarField rho = wave(g, 1.0, amp(rng), 1.0, ph(rng));
    const ScalarField rho_e = wave(g, 1.0, amp(rng), 2.0, ph(rng));
    const ScalarField u = wave(g, 0.0, amp(rng), 1.0, ph(rng));
    const ScalarField v = wave(g, 0.1, amp(rng), 3.0, ph(rng));
    const double re = diagnostics::relative_energy(rho_e, vec(v), rho, vec(u), p);
    const auto m = diagnostics::convergence_metrics(rho_e, vec(v), rho, vec(u), p);
    // gamma = a... = 2: H = |rho_e - rho|^2, and
    // ||rho_e v - rho u||_{4/3} <= sup|u| |Omega|^{1/4} ||rho_e - rho||_2 + ||rho_e||_2^{1/2} (2 re)^{1/2}
    EXPECT_LE(m.rho_gap, std::sqrt(re) * (1.0 + 1e-12));
    const double C = sup_norm(u) * std::pow(kTwoPi, 0.25) + std::sqrt(2.0) * std::sqrt(l2_norm(rho_e));
    EXPECT_LE(m.momentum_gap, C * std::sqrt(re) * (1.0 + 1e-12));
  }
}

TEST(ConvergenceMetrics, WindowedTrajectories) {
  RunConfig c;
  c.n = 64;
  c.noise.modes = 0;
  c.stop.T_max = 0.2;
  const RunResult a = det_run(c, 0.0, 0.05);
  const auto zero = diagnostics::convergence_metrics(a.trajectory, a.trajectory, 0.0, 0.2);
  EXPECT_EQ(zero.rho_gap, 0.0);
  EXPECT_EQ(zero.momentum_gap, 0.0);
  RunConfig c2 = c;
  c2.phys.lambda = 1.0;
  const RunResult b = det_run(c2, 0.1, 0.05);
  const auto gap = diagnostics::convergence_metrics(b.trajectory, a.trajectory, 0.0, 0.2);
  EXPECT_GT(gap.momentum_gap, 0.0);
  const RunResult coarse_t = det_run(c, 0.0, 0.1);
  EXPECT_THROW(diagnostics::convergence_metrics(a.trajectory, coarse_t.trajectory, 0.0, 0.2), std::invalid_argument);
  RunConfig c3 = c;
  c3.n = 32;
  const RunResult coarse_x = det_run(c3, 0.0, 0.05);
  EXPECT_THROW(diagnostics::convergence_metrics(a.trajectory, coarse_x.trajectory, 0.0, 0.2), std::invalid_argument);
}
