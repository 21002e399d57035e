#pragma once

// Quick invariant checks runnable from the command line.

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sce/diagnostics.hpp"
#include "sce/dynamics.hpp"
#include "sce/harness/experiment.hpp"

namespace sce::harness {

struct SelfCheck {
  std::string name;
  std::function<bool()> run;
};

inline std::vector<SelfCheck> self_checks() {
  std::vector<SelfCheck> checks;
  checks.push_back({"parseval", [] {
    const Grid g(1, 64, 2.0 * std::numbers::pi);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    std::vector<double> c(8);
    for (double& v : c) v = n01(rng);
    const ScalarField f = ScalarField::sample(g, [&](auto x) {
      double s = c[0];
      for (int k = 1; k < 4; ++k) s += c[2 * k - 1] * std::cos(k * x[0]) + c[2 * k] * std::sin(k * x[0]);
      return s;
    });
    const double a = sobolev_norm(f, 0.0), b = l2_norm(f);
    return std::abs(a - b) <= 1e-10 * (1.0 + b);
  }});
  checks.push_back({"transform_roundtrip", [] {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> rho(0.01, 10.0), gam(1.05, 3.0), a(0.1, 5.0);
    for (int i = 0; i < 1000; ++i) {
      PhysParams p;
      p.gamma = gam(rng);
      p.a = a(rng);
      const double r = rho(rng);
      if (std::abs(thermo::r_to_rho(p, thermo::rho_to_r(p, r)) - r) > 1e-12 * r) return false;
    }
    return true;
  }});
  checks.push_back({"h_lower_bound", [] {
    std::vector<double> grid(20001);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 10.0 * i / (grid.size() - 1);
    for (double gamma : {1.4, 5.0 / 3.0, 2.0, 3.0}) {
      PhysParams p;
      p.gamma = gamma;
      if (!thermo::h_lower_bound_check(p, 1.0, grid)) return false;
    }
    return true;
  }});
  checks.push_back({"mass_momentum_conservation", [] {
    const Grid g(1, 64, 2.0 * std::numbers::pi);
    PhysParams p;
    const ScalarField rho = ScalarField::sample(g, [](auto x) { return 1.0 + 0.2 * std::cos(x[0]); });
    VectorField u(g);
    u[0] = ScalarField::sample(g, [](auto x) { return 0.3 * std::sin(x[0]); });
    const State s = dynamics::make_state(Formulation::conservative, p, rho, u);
    const auto t = dynamics::rhs(s, p);
    return std::abs(integrate(t.density)) < 1e-12 && std::abs(integrate(t.flow[0])) < 1e-12;
  }});
  checks.push_back({"bridge_refinement", [] {
    const WienerPath path(3, 2, 0.1);
    for (int k = 0; k < 2; ++k) {
      for (int step = 0; step < 4; ++step) {
        double s = 0.0;
        for (double v : path.refine(k, step, 5)) s += v;
        if (std::abs(s - path.increment(k, step)) > 1e-14) return false;
      }
    }
    return true;
  }});
  checks.push_back({"determinism", [] {
    RunConfig c;
    c.n = 64;
    c.stop.T_max = 0.1;
    const Setup s = make_setup(c, 0.0);
    const auto a = dynamics::run_until(s.initial, s.phys, make_path(c, 5), s.model, s.stop);
    const auto b = dynamics::run_until(s.initial, s.phys, make_path(c, 5), s.model, s.stop);
    return a.final_state == b.final_state;
  }});
  return checks;
}

/// Runs every check, printing one line each; returns the number of failures.
inline int run_self_checks(std::ostream& out) {
  int failures = 0;
  for (const auto& c : self_checks()) {
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception&) {
      ok = false;
    }
    out << (ok ? "PASS " : "FAIL ") << c.name << '\n';
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace sce::harness
