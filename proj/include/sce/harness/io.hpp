#pragma once

// CSV streams with versioned headers, trajectory directories (snapshots plus
// manifest), and the SVG log-log plot of a sweep.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sce/diagnostics.hpp"
#include "sce/dynamics.hpp"
#include "sce/harness/config.hpp"
#include "sce/harness/experiment.hpp"
#include "sce/snapshot.hpp"

namespace sce::io {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// Per-step diagnostics stream:
///   t, dt, mass, momentum_<i>..., energy, sobolev_s, lipschitz, min_rho, max_rho, stop_flag
class DiagnosticsCsv {
 public:
  DiagnosticsCsv(std::ostream& out, int dim) : out_(out) {
    out_ << "# sce-diagnostics v1\n" << "t,dt,mass";
    for (int d = 0; d < dim; ++d) out_ << ",momentum_" << d;
    out_ << ",energy,sobolev_s,lipschitz,min_rho,max_rho,stop_flag\n";
  }

  void row(const State& s, const StepReport& r, const PhysParams& p) {
    const bool broken = r.stop == StopReason::vacuum || r.stop == StopReason::non_finite;
    out_ << num(s.time) << ',' << num(r.dt_used);
    if (broken) {
      out_ << ",nan";
      for (int d = 0; d < s.grid().dim(); ++d) out_ << ",nan";
      out_ << ",nan";
    } else {
      const State c = dynamics::to_conservative(s, p);
      out_ << ',' << num(integrate(c.density));
      for (int d = 0; d < s.grid().dim(); ++d) out_ << ',' << num(integrate(c.flow[d]));
      out_ << ',' << num(diagnostics::energy(c, p).total());
    }
    out_ << ',' << num(r.norms.sobolev) << ',' << num(r.norms.lipschitz) << ',' << num(r.min_rho) << ','
         << num(r.max_rho) << ',' << to_string(r.stop) << '\n';
  }

 private:
  std::ostream& out_;
};

inline void write_ledger(std::ostream& out, const std::vector<LedgerRow>& rows) {
  out << "# sce-ledger v1\n"
      << "t,kinetic,potential,energy,dissipation_accum,noise_work_accum,ito_accum,defect\n";
  for (const auto& r : rows) {
    out << num(r.t) << ',' << num(r.kinetic) << ',' << num(r.potential) << ',' << num(r.energy()) << ','
        << num(r.dissipation_accum) << ',' << num(r.noise_work_accum) << ',' << num(r.ito_accum) << ','
        << num(r.defect) << '\n';
  }
}

inline void write_sweep(std::ostream& out, const SweepResult& s) {
  out << "# sce-sweep v1 window=" << num(s.window) << " paths=" << s.paths << " excluded=" << s.excluded << "\n"
      << "eps,sup_relative_energy,std_error,t_sup,initial_relative_energy,c_R,gronwall_bound,"
         "audit_defect_mean,audit_defect_stderr,remainder_violations,rho_gap,momentum_gap\n";
  for (const auto& r : s.rows) {
    out << num(r.eps) << ',' << num(r.sup_mean) << ',' << num(r.std_error) << ',' << num(r.t_sup) << ','
        << num(r.initial_mean) << ',' << num(r.c_R) << ',' << num(r.gronwall) << ',' << num(r.audit_defect_mean)
        << ',' << num(r.audit_defect_stderr) << ',' << r.remainder_violations << ',' << num(r.rho_gap) << ','
        << num(r.momentum_gap) << '\n';
  }
}

inline void write_reference_stops(std::ostream& out, const SweepResult& s, std::uint64_t seed) {
  out << "# sce-reference-stops v1\n" << "seed,stopping_time,lipschitz_hit,sobolev_hit\n";
  for (std::size_t m = 0; m < s.ref_stop_times.size(); ++m) {
    out << seed + m << ',' << num(s.ref_stop_times[m]) << ',' << num(s.lipschitz_hit_times[m]) << ','
        << num(s.sobolev_hit_times[m]) << '\n';
  }
}

inline void write_refinement(std::ostream& out, const std::vector<RefinementRow>& rows) {
  out << "# sce-refinement v1\n" << "kind,n,dt,error,order\n";
  for (const auto& r : rows) {
    out << r.kind << ',' << r.n << ',' << num(r.dt) << ',' << num(r.error) << ',' << num(r.order) << '\n';
  }
}

/// Log-log plot of the sup relative energy against eps with one-standard-error bars.
inline std::string sweep_svg(const SweepResult& s) {
  std::vector<const SweepRow*> pts;
  for (const auto& r : s.rows) {
    if (r.eps > 0.0 && r.sup_mean > 0.0) pts.push_back(&r);
  }
  const double W = 640, H = 480, left = 80, right = 20, top = 30, bottom = 60;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pts.empty()) {
    o << "<text x=\"20\" y=\"40\">no positive data</text>\n</svg>\n";
    return o.str();
  }
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto* r : pts) {
    xlo = std::min(xlo, std::log10(r->eps));
    xhi = std::max(xhi, std::log10(r->eps));
    const double lo = r->sup_mean - r->std_error > 0 ? r->sup_mean - r->std_error : r->sup_mean;
    ylo = std::min(ylo, std::log10(lo));
    yhi = std::max(yhi, std::log10(r->sup_mean + r->std_error));
  }
  xlo = std::floor(xlo), xhi = std::ceil(xhi), ylo = std::floor(ylo), yhi = std::ceil(yhi);
  if (xhi <= xlo) xhi = xlo + 1;
  if (yhi <= ylo) yhi = ylo + 1;
  auto X = [&](double lx) { return left + (lx - xlo) / (xhi - xlo) * (W - left - right); };
  auto Y = [&](double ly) { return H - bottom - (ly - ylo) / (yhi - ylo) * (H - top - bottom); };
  o << "<g stroke=\"#888\" stroke-width=\"0.5\">\n";
  for (double d = xlo; d <= xhi + 1e-9; d += 1) {
    o << "<line x1=\"" << X(d) << "\" y1=\"" << Y(ylo) << "\" x2=\"" << X(d) << "\" y2=\"" << Y(yhi) << "\"/>\n";
  }
  for (double d = ylo; d <= yhi + 1e-9; d += 1) {
    o << "<line x1=\"" << X(xlo) << "\" y1=\"" << Y(d) << "\" x2=\"" << X(xhi) << "\" y2=\"" << Y(d) << "\"/>\n";
  }
  o << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (double d = xlo; d <= xhi + 1e-9; d += 1) {
    o << "<text x=\"" << X(d) - 12 << "\" y=\"" << H - bottom + 18 << "\">1e" << d << "</text>\n";
  }
  for (double d = ylo; d <= yhi + 1e-9; d += 1) {
    o << "<text x=\"" << 20 << "\" y=\"" << Y(d) + 4 << "\">1e" << d << "</text>\n";
  }
  o << "<text x=\"" << W / 2 - 10 << "\" y=\"" << H - 15 << "\">eps</text>\n"
    << "<text x=\"" << left << "\" y=\"" << 18 << "\">sup_t mean relative energy (window " << num(s.window)
    << ")</text>\n</g>\n";
  o << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (const auto* r : pts) o << X(std::log10(r->eps)) << ',' << Y(std::log10(r->sup_mean)) << ' ';
  o << "\"/>\n";
  for (const auto* r : pts) {
    const double x = X(std::log10(r->eps));
    const double lo = r->sup_mean - r->std_error > 0 ? r->sup_mean - r->std_error : r->sup_mean;
    o << "<line stroke=\"#1f5fa8\" x1=\"" << x << "\" y1=\"" << Y(std::log10(lo)) << "\" x2=\"" << x << "\" y2=\""
      << Y(std::log10(r->sup_mean + r->std_error)) << "\"/>\n"
      << "<circle fill=\"#1f5fa8\" r=\"3\" cx=\"" << x << "\" cy=\"" << Y(std::log10(r->sup_mean)) << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Trajectory directories:
//   config.cfg     canonical configuration of the run
//   manifest.csv   one line per stored snapshot
//   snap_<n>.sce   state components (density first, then flow)

inline std::string snapshot_name(std::int64_t macro_index) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "snap_%08lld.sce", static_cast<long long>(macro_index));
  return buf;
}

class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::filesystem::path& dir, const RunConfig& c, std::uint64_t seed) : dir_(dir) {
    std::filesystem::create_directories(dir_);
    RunConfig saved = c;
    saved.seed = seed;
    open_out(dir_ / "config.cfg") << config::serialize(saved);
    manifest_ = open_out(dir_ / "manifest.csv");
    manifest_ << "# sce-manifest v1 formulation="
              << (c.formulation == Formulation::conservative ? "conservative" : "symmetric") << "\n"
              << "macro_index,t,file,stop_flag,div_u_integral,min_rho,max_rho\n";
  }

  void add(std::int64_t macro_index, const State& s, const StepReport& r, double div_integral) {
    const std::string file = snapshot_name(macro_index);
    std::vector<ScalarField> comps{s.density};
    for (const auto& f : s.flow) comps.push_back(f);
    write_snapshot(dir_ / file, s.time, comps);
    manifest_ << macro_index << ',' << config::format_double(s.time) << ',' << file << ',' << to_string(r.stop) << ','
              << config::format_double(div_integral) << ',' << config::format_double(r.min_rho) << ','
              << config::format_double(r.max_rho) << '\n';
    manifest_.flush();
  }

 private:
  std::filesystem::path dir_;
  std::ofstream manifest_;
};

inline StopReason parse_stop(const std::string& s) {
  for (auto r : {StopReason::none, StopReason::sobolev_level, StopReason::lipschitz_blowup, StopReason::vacuum,
                 StopReason::non_finite}) {
    if (to_string(r) == s) return r;
  }
  throw std::runtime_error("manifest: unknown stop flag '" + s + "'");
}

struct LoadedTrajectory {
  RunConfig config;
  Trajectory trajectory;
};

/// Rebuilds a trajectory (states, Wiener path from the saved seed, detector
/// data) from a directory written by TrajectoryWriter.
inline LoadedTrajectory load_trajectory(const std::filesystem::path& dir) {
  LoadedTrajectory out;
  out.config = config::load(dir / "config.cfg");
  std::ifstream in(dir / "manifest.csv");
  if (!in) throw std::runtime_error("cannot open " + (dir / "manifest.csv").string());
  std::string line;
  std::getline(in, line);
  const Formulation form =
      line.find("formulation=symmetric") != std::string::npos ? Formulation::symmetric : Formulation::conservative;
  std::getline(in, line);  // column names
  Trajectory& traj = out.trajectory;
  traj.params = out.config.phys;
  traj.path = harness::make_path(out.config, out.config.seed);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx, t, file, stop, div, lo, hi;
    std::getline(ss, idx, ',');
    std::getline(ss, t, ',');
    std::getline(ss, file, ',');
    std::getline(ss, stop, ',');
    std::getline(ss, div, ',');
    std::getline(ss, lo, ',');
    std::getline(ss, hi, ',');
    const Snapshot snap = read_snapshot(dir / file);
    if (static_cast<int>(snap.components.size()) != snap.grid.dim() + 1) {
      throw std::runtime_error("snapshot " + file + ": unexpected component count");
    }
    TrajectoryRecord rec;
    rec.time = snap.time;
    rec.macro_index = std::stoll(idx);
    rec.report.stop = parse_stop(stop);
    rec.div_u_integral = std::stod(div);
    rec.report.min_rho = std::stod(lo);
    rec.report.max_rho = std::stod(hi);
    std::vector<ScalarField> flow(snap.components.begin() + 1, snap.components.end());
    rec.state = State{form, snap.components.front(), VectorField(std::move(flow)), snap.time};
    traj.records.push_back(std::move(rec));
  }
  if (!traj.records.empty()) {
    traj.stop = traj.records.back().report.stop;
    traj.stopping_time = traj.records.back().time;
  }
  return out;
}

}  // namespace sce::io
