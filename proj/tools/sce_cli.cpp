// sce: command-line driver for simulations, inviscid-limit sweeps,
// refinement studies and energy audits.
//
// Exit codes: 0 success, 1 validation error, 2 numerical stop.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sce/sce.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c, bool config_required = true) {
  auto* opt = app->add_option("--config", c.config, "run configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "seed (overrides run.seed)");
  app->add_option("--out-dir", c.out_dir, "output directory");
  app->add_option("--override", c.overrides, "key=value applied after the config file")->allow_extra_args(false);
}

sce::RunConfig load(const Common& c) {
  sce::RunConfig cfg = sce::config::load(c.config);
  for (const auto& o : c.overrides) sce::config::apply_override(cfg, o);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void warn_inviscid_1d(const sce::RunConfig& cfg, double eps) {
  if (cfg.dim == 1 && eps > 0.0 && cfg.phys.lambda == 0.0) {
    std::cerr << "warning: in 1D the nu-part of the stress vanishes; with lambda = 0 the run is inviscid\n";
  }
}

int simulate(const Common& c) {
  const sce::RunConfig cfg = load(c);
  warn_inviscid_1d(cfg, cfg.phys.epsilon);
  const sce::Setup s = sce::harness::make_setup(cfg, cfg.phys.epsilon);
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  auto csv_file = sce::io::open_out(out / "diagnostics.csv");
  sce::io::DiagnosticsCsv csv(csv_file, cfg.dim);
  std::optional<sce::io::TrajectoryWriter> writer;
  if (cfg.snapshot_every > 0) writer.emplace(out / "trajectory", cfg, cfg.seed);

  double div_integral = 0.0;
  std::int64_t last_snapshot = -1;
  sce::RunOptions opt;
  opt.step = s.step;
  opt.store_states = false;
  opt.record_every = cfg.output_every;
  opt.observer = [&](std::int64_t n, const sce::State& st, const sce::StepReport& r) {
    div_integral += r.div_u_integral;
    const bool stopped = r.stop != sce::StopReason::none;
    if (n % cfg.output_every == 0 || stopped) csv.row(st, r, s.phys);
    if (writer && (n % cfg.snapshot_every == 0 || stopped) && !sce::harness::breakdown(r.stop)) {
      writer->add(n, st, r, div_integral);
      last_snapshot = n;
    }
  };
  const sce::WienerPath path = sce::harness::make_path(cfg, cfg.seed);
  const sce::RunResult run = sce::dynamics::run_until(s.initial, s.phys, path, s.model, s.stop, opt);
  const std::int64_t final_index = run.trajectory.records.back().macro_index;
  if (run.final_report.stop == sce::StopReason::none && final_index % cfg.output_every != 0) {
    csv.row(run.final_state, run.final_report, s.phys);
  }
  if (writer && last_snapshot != final_index && !sce::harness::breakdown(run.stop)) {
    writer->add(final_index, run.final_state, run.final_report, div_integral);
  }
  const auto mp = sce::dynamics::max_principle_bounds(run.trajectory);
  std::printf("stop=%s stopping_time=%.6g max_principle=%s\n", std::string(sce::to_string(run.stop)).c_str(),
              run.stopping_time, mp.violated ? "violated" : "ok");
  return sce::harness::breakdown(run.stop) ? kNumerical : kOk;
}

int sweep(const Common& c) {
  const sce::RunConfig cfg = load(c);
  for (double e : cfg.eps_list) warn_inviscid_1d(cfg, e);
  const sce::SweepResult r = sce::harness::inviscid_sweep(cfg);
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  {
    auto f = sce::io::open_out(out / "sweep.csv");
    sce::io::write_sweep(f, r);
  }
  {
    auto f = sce::io::open_out(out / "reference_stops.csv");
    sce::io::write_reference_stops(f, r, cfg.seed);
  }
  sce::io::open_out(out / "sweep.svg") << sce::io::sweep_svg(r);
  std::vector<double> eps, val;
  for (const auto& row : r.rows) {
    std::printf("eps=%-10.4g sup_E=%.6e se=%.2e\n", row.eps, row.sup_mean, row.std_error);
    eps.push_back(row.eps);
    val.push_back(row.sup_mean);
  }
  std::printf("window=%.6g excluded=%d/%d slope=%.4f\n", r.window, r.excluded, r.paths,
              sce::harness::loglog_slope(eps, val));
  if (r.failed) {
    std::cerr << "error: more than 10% of the paths were excluded\n";
    return kNumerical;
  }
  return kOk;
}

int convergence(const Common& c, int base_level, int levels, int base_n, int grids, int space_level) {
  const sce::RunConfig cfg = load(c);
  const auto rows = sce::harness::refinement_study(cfg, base_level, levels, base_n, grids, space_level);
  const fs::path out = c.out_dir;
  auto f = sce::io::open_out(out / "refinement.csv");
  sce::io::write_refinement(f, rows);
  for (const auto& r : rows) {
    std::printf("%-5s n=%-5d dt=%.3e error=%.3e order=%.3f\n", r.kind.c_str(), r.n, r.dt, r.error, r.order);
  }
  return kOk;
}

int audit(const Common& c, std::string trajectory) {
  if (trajectory.empty()) trajectory = (fs::path(c.out_dir) / "trajectory").string();
  const auto loaded = sce::io::load_trajectory(trajectory);
  const sce::NoiseModel model = sce::harness::make_model(loaded.config);
  const auto rows = sce::diagnostics::energy_audit(loaded.trajectory, model);
  auto f = sce::io::open_out(fs::path(c.out_dir) / "ledger.csv");
  sce::io::write_ledger(f, rows);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.defect));
  const auto mp = sce::dynamics::max_principle_bounds(loaded.trajectory);
  std::printf("records=%zu max_abs_defect=%.6e max_principle=%s\n", rows.size(), worst,
              mp.violated ? "violated" : "ok");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic compressible Euler / Navier-Stokes simulator"};
  app.require_subcommand(1);

  Common sim_opts, sweep_opts, conv_opts, audit_opts;
  auto* sim = app.add_subcommand("simulate", "run one trajectory and write diagnostics.csv");
  add_common(sim, sim_opts);
  auto* sw = app.add_subcommand("sweep", "inviscid-limit sweep over the eps list");
  add_common(sw, sweep_opts);
  auto* conv = app.add_subcommand("convergence", "dt and grid refinement study (noise off)");
  add_common(conv, conv_opts);
  int base_level = 2, levels = 3, base_n = 16, grids = 3, space_level = 6;
  conv->add_option("--base-level", base_level, "coarsest substep level");
  conv->add_option("--levels", levels, "number of time halvings");
  conv->add_option("--base-n", base_n, "coarsest grid size");
  conv->add_option("--grids", grids, "number of grid doublings");
  conv->add_option("--space-level", space_level, "substep level of the spatial study");
  auto* aud = app.add_subcommand("audit", "energy ledger of a stored trajectory");
  add_common(aud, audit_opts, false);
  std::string trajectory;
  aud->add_option("--trajectory", trajectory, "trajectory directory (default <out-dir>/trajectory)");
  auto* self = app.add_subcommand("selftest", "run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*sim) return simulate(sim_opts);
    if (*sw) return sweep(sweep_opts);
    if (*conv) return convergence(conv_opts, base_level, levels, base_n, grids, space_level);
    if (*aud) return audit(audit_opts, trajectory);
    if (*self) return sce::harness::run_self_checks(std::cout) == 0 ? kOk : kValidation;
  } catch (const sce::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
