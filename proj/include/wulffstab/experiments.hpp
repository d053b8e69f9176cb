#pragma once

// Subcommand runners shared by the command-line tool and the tests.  Each
// runner computes everything first, then writes <name>.csv/.dat and
// <name>_checks.csv/.dat; the exit code is 0 iff every check passes.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wulffstab/config.hpp"
#include "wulffstab/curvature.hpp"
#include "wulffstab/einstein.hpp"
#include "wulffstab/report.hpp"
#include "wulffstab/stability.hpp"

namespace wulffstab {

struct Check {
  std::string name;
  double value = 0.0;
  std::string bound;
  bool pass = false;
};

struct RunResult {
  int exit_code = 0;
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;
  std::filesystem::path report;

  bool ok() const { return exit_code == 0; }
};

struct RunOptions {
  std::filesystem::path out = "results";
  bool svg = false;
};

namespace detail {

inline Check check_le(std::string name, double value, double bound) {
  return {std::move(name), value, "<= " + fmt_short(bound), value <= bound};
}

inline Check check_within(std::string name, double value, double target, double tol) {
  return {std::move(name), value, fmt_short(target) + " +- " + fmt_short(tol), std::abs(value - target) <= tol};
}

inline RunResult finish(const std::string& name, const Table& data, const std::vector<Check>& checks,
                        const RunOptions& opt, const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  Table t({"check", "value", "bound", "pass"});
  bool all = true;
  for (const auto& c : checks) {
    t.add({c.name, fmt(c.value), c.bound, c.pass ? "PASS" : "FAIL"});
    all = all && c.pass;
  }
  write_table(opt.out, name, data);
  write_table(opt.out, name + "_checks", t);
  RunResult r;
  r.checks = checks;
  r.files = {opt.out / (name + ".csv"), opt.out / (name + ".dat"), opt.out / (name + "_checks.csv"),
             opt.out / (name + "_checks.dat")};
  for (const auto& [file, content] : extra) {
    write_atomic(opt.out / file, content);
    r.files.push_back(opt.out / file);
  }
  r.report = opt.out / (name + "_checks.csv");
  r.exit_code = all ? 0 : 1;
  return r;
}

inline Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

}  // namespace detail

// ---- wulff: construction, gauge and Robin identities --------------------------------

inline RunResult run_wulff(const ExperimentConfig& cfg, const RunOptions& opt) {
  const WulffMesh w = build_wulff(cfg.integrand, cfg.level);
  Table t({"vertex", "x", "y", "z", "nx", "ny", "nz", "gauge_residual", "mean_curvature"});
  double gauge_res = 0.0, robin = 0.0, normal_res = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const GaugeValue g = gauge(cfg.integrand, w.position[i]);
    const double r = std::abs(g.value - 1.0);
    gauge_res = std::max(gauge_res, r);
    normal_res = std::max(normal_res, (g.maximizer - w.normal(i)).norm());
    if (i % 41 == 0) {
      // dF*(x)[c] = <nu_W, c> / F(nu_W), checked by central differences
      for (int k = 0; k < 3; ++k) {
        const Vec3 c = Vec3::Unit(k);
        const double fd = (gauge(cfg.integrand, w.position[i] + h * c).value -
                           gauge(cfg.integrand, w.position[i] - h * c).value) /
                          (2.0 * h);
        robin = std::max(robin, std::abs(fd - w.normal(i).dot(c) / cfg.integrand.value(w.normal(i))));
      }
    }
    const Vec3& x = w.position[i];
    const Vec3& n = w.normal(i);
    t.add({std::to_string(i), fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(n[0]), fmt(n[1]), fmt(n[2]), fmt(r),
           fmt(w.mean_curvature[i])});
  }
  std::vector<Check> checks{
      detail::check_le("max_gauge_residual", gauge_res, cfg.gauge_tol),
      detail::check_le("gauge_maximizer_vs_normal", normal_res, 1e-8),
      detail::check_le("robin_identity_fd", robin, 1e-7),
      {"ellipticity_margin", cfg.integrand.ellipticity_margin(), "> 0", cfg.integrand.ellipticity_margin() > 0.0},
  };
  std::ostringstream mesh;
  write_mesh(mesh, w);
  return detail::finish("wulff", t, checks, opt, {{"wulff.mesh", mesh.str()}});
}

// ---- curvature: S_F, deficit and oscillation on the largest configured perturbation ----

inline RunResult run_curvature(const ExperimentConfig& cfg, const RunOptions& opt) {
  const StabilitySetup setup(cfg.integrand, cfg.level, cfg.band);
  const GraphSurface surf = cfg.family.surface(cfg.amplitudes.back());
  const SurfaceGeometry geom = setup.geometry(surf);
  const GraphCertificate cert = projection_certificate(geom, setup.base(), cfg.stability.centering.threshold);
  const AnisotropicCurvature curv = anisotropic_shape_operator(geom, cfg.integrand);
  const DeficitReport d = oscillation_deficit(curv.shape, geom.weight, cfg.stability.p);
  const TraceFree tf = trace_free(curv.shape);

  Table t({"vertex", "mean_curvature", "anisotropic_mean_curvature", "trace_free_norm", "eta"});
  double trace_gap = 0.0;
  for (std::size_t i = 0; i < geom.size(); ++i) {
    trace_gap = std::max(trace_gap, std::abs(geom.shape.values[i].trace() - geom.mean_curvature[i]));
    t.add({std::to_string(i), fmt(geom.mean_curvature[i]), fmt(curv.mean_curvature[i]),
           fmt(tf.part.values[i].norm()), fmt(cert.margin[i])});
  }
  std::vector<Check> checks{
      {"graph_certificate_eta", cert.eta, "> " + fmt_short(cfg.stability.centering.threshold), cert.pass},
      detail::check_le("trace_of_dnu_minus_H", trace_gap, 1e-12),
      {"deficit", d.deficit, "info", true},
      {"lambda_star", d.lambda_star, "info", true},
      {"mean_HF_over_n", d.mean_over_n, "info", true},
      detail::check_le("lambda_star_relative_gap", std::abs(d.lambda_star / d.mean_over_n - 1.0), 0.05),
      {"c_osc", d.c_osc, "finite", std::isfinite(d.c_osc) || d.deficit < 1e-14},
  };
  return detail::finish("curvature", t, checks, opt);
}

// ---- kernel: L[phi_c] ~ 0 and the Y2 eigenvalue on the sphere ------------------------

inline double kernel_residual(const WulffMesh& w, const Vec3& c, DerivativeMode mode, const Stencil* st,
                              const SpectralBasis* basis) {
  ScalarField phi;
  phi.values.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) phi.values[i] = c.dot(w.normal(i));
  if (basis) phi.spectrum = basis->analyze(phi.values);
  const auto l = stability_operator(w, phi, mode, st, basis);
  return std::sqrt(inner(w, l, l) / inner(w, phi.values, phi.values));
}

inline RunResult run_kernel(const ExperimentConfig& cfg, const RunOptions& opt) {
  std::mt19937_64 rng = batch_rng(cfg.seed, 0x6b, 0);
  std::vector<Vec3> dirs;
  for (int k = 0; k < 5; ++k) dirs.push_back(detail::random_direction(rng));

  Table t({"surface", "level", "direction", "ratio"});
  std::vector<Check> checks;
  auto run_on = [&](const Integrand& f, const std::string& label) {
    std::vector<double> prev;
    for (int level : {cfg.level - 1, cfg.level}) {
      const WulffMesh w = build_wulff(f, level);
      const Stencil st(w.sphere, StencilKind::one_ring_quadratic);
      const SpectralBasis basis(w.sphere, std::min(cfg.band, static_cast<int>(std::sqrt(double(w.size())) / 2)));
      std::vector<double> cur;
      for (const auto& c : dirs) {
        const double r = kernel_residual(w, c, cfg.mode, &st, &basis);
        cur.push_back(r);
        t.add({label, std::to_string(level), format_vector(c), fmt(r)});
      }
      if (level == cfg.level) {
        double worst = 0.0;
        bool decreasing = true;
        for (std::size_t k = 0; k < cur.size(); ++k) {
          worst = std::max(worst, cur[k]);
          if (cfg.mode == DerivativeMode::one_ring && !(cur[k] < prev[k])) decreasing = false;
        }
        checks.push_back(detail::check_le(label + "_kernel_ratio_max", worst, cfg.kernel_tol));
        checks.push_back({label + "_kernel_ratio_decreasing", worst, "decreasing in level", decreasing});
      }
      prev = cur;
    }
  };
  run_on(Integrand::constant(), "sphere");
  if (cfg.integrand.family() != IntegrandFamily::constant) run_on(cfg.integrand, "wulff");

  // Rayleigh quotient of Y20 on the unit sphere: -6 + 2 = -4
  const WulffMesh s = round_sphere(build_sphere_mesh(cfg.level));
  const Stencil st(s.sphere, StencilKind::one_ring_quadratic);
  const SpectralBasis basis(s.sphere, std::min(cfg.band, static_cast<int>(std::sqrt(double(s.size())) / 2)));
  const ScalarField y = basis.field(single_harmonic(2, 0));
  const auto ly = stability_operator(s, y, cfg.mode, &st, &basis);
  const double ev = inner(s, ly, y.values) / inner(s, y.values, y.values);
  t.add({"sphere_Y20", std::to_string(cfg.level), "eigenvalue", fmt(ev)});
  checks.push_back(detail::check_le("Y2_eigenvalue_relative_error", std::abs(ev / -4.0 - 1.0), 0.02));
  return detail::finish("kernel", t, checks, opt);
}

// ---- center: recover a known translation ---------------------------------------------

inline RunResult run_center(const ExperimentConfig& cfg, const RunOptions& opt) {
  const StabilitySetup setup(cfg.integrand, cfg.level, cfg.band);
  const Vec3 t_true = cfg.translation;
  const CenteringResult r = center(setup.base(), setup.frame(), translated_wulff(setup, t_true), 1.0,
                                   cfg.stability.centering);
  Table t({"iteration", "residual"});
  std::vector<double> it, res;
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    t.add({std::to_string(k + 1), fmt(r.trace[k])});
    it.push_back(double(k + 1));
    res.push_back(r.trace[k]);
  }
  std::vector<Check> checks{
      detail::check_le("recovered_translation_error", (r.c - t_true).norm(), cfg.center_tol),
      detail::check_le("iterations", r.iterations, 10),
      {"converged", r.final_residual, "<= " + fmt_short(cfg.stability.centering.tolerance), r.converged},
      {"eta", r.eta, "> " + fmt_short(cfg.stability.centering.threshold), r.eta > cfg.stability.centering.threshold},
  };
  std::vector<std::pair<std::string, std::string>> extra;
  if (opt.svg) {
    PlotOptions po;
    po.title = "centering residual";
    po.xlabel = "iteration";
    po.ylabel = "|v(u_c)|";
    po.logy = true;
    extra.emplace_back("center.svg", svg_plot({{"residual", it, res}}, po));
  }
  return detail::finish("center", t, checks, opt, extra);
}

// ---- sweep: deficit and distance scaling -------------------------------------------

inline RunResult run_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  const StabilitySetup setup(cfg.integrand, cfg.level, cfg.band);
  const SweepResult s = scaling_sweep(setup, cfg.family, cfg.amplitudes, cfg.stability);
  const bool kernel = cfg.family.kind == PerturbationFamily::Kind::kernel;

  std::vector<Check> checks;
  checks.push_back({"sweep_complete", double(s.rows.size()), "== " + std::to_string(cfg.amplitudes.size()),
                    !s.truncated && s.rows.size() == cfg.amplitudes.size()});
  const double def_slope = s.deficit_fit ? s.deficit_fit->slope : std::nan("");
  const double dist_slope = s.distance_fit ? s.distance_fit->slope : std::nan("");
  std::string flags;
  if (kernel) {
    double worst = 0.0;
    for (const auto& r : s.rows) worst = std::max(worst, r.measurement.distance);
    checks.push_back(detail::check_within("deficit_slope", def_slope, 2.0, 0.15));
    checks.push_back(detail::check_le("max_kernel_free_distance", worst, 1e-6));
  } else {
    checks.push_back(detail::check_within("distance_slope", dist_slope, 1.0, cfg.slope_tol));
    checks.push_back(detail::check_le("ratio_drift", s.ratio_drift, cfg.drift_tol));
    checks.push_back({"deficit_slope", def_slope, "info", true});
  }
  double lambda_gap = 0.0;
  for (const auto& r : s.rows)
    lambda_gap = std::max(lambda_gap, std::abs(r.measurement.oscillation.lambda_star /
                                                   r.measurement.oscillation.mean_over_n -
                                               1.0));
  checks.push_back(detail::check_le("lambda_star_relative_gap", lambda_gap, 0.05));
  checks.push_back({"c_osc_drift", s.c_osc_drift, "finite", std::isfinite(s.c_osc_drift) || kernel});
  for (const auto& c : checks)
    if (c.name.find("slope") != std::string::npos && c.bound != "info")
      flags += (flags.empty() ? "" : "|") + c.name + (c.pass ? "_ok" : "_fail");

  Table t({"family", "epsilon", "p", "deficit", "distance", "ratio", "slope_flags", "eta_margin", "iterations"});
  std::vector<double> eps, def, dist;
  for (const auto& r : s.rows) {
    const auto& m = r.measurement;
    t.add({s.family, fmt(r.epsilon), fmt(s.p), fmt(m.deficit), fmt(m.distance), m.ratio ? fmt(*m.ratio) : "nan", "",
           fmt(m.centering.eta - cfg.stability.centering.threshold), std::to_string(m.centering.iterations)});
    eps.push_back(r.epsilon);
    def.push_back(m.deficit);
    dist.push_back(m.distance);
  }
  // summary row: slopes of the log-log fits and the ratio drift
  t.add({s.family, "slope", fmt(s.p), fmt(def_slope), fmt(dist_slope), fmt(s.ratio_drift), flags, "", ""});

  std::vector<std::pair<std::string, std::string>> extra;
  if (opt.svg) {
    PlotOptions po;
    po.title = "scaling sweep " + s.family;
    po.xlabel = "log10 epsilon";
    po.ylabel = "log10 value";
    po.logx = po.logy = true;
    extra.emplace_back("sweep.svg", svg_plot({{"deficit", eps, def}, {"distance", eps, dist}}, po));
  }
  if (s.truncated) checks.push_back({"warning: " + s.warning, 0.0, "", false});
  return detail::finish("sweep", t, checks, opt, extra);
}

// ---- einstein: spectra, polynomials, zero sets, ratio bounds, pinching, alpha -------

// max |Lambda - eig(H h - h^2)| over random rotated spectra.
inline double ricci_spectrum_residual(int n, int count, std::uint64_t seed) {
  auto rng = batch_rng(seed, 0x5e00u + static_cast<std::uint64_t>(n), 0);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const VecX lam = 2.0 * gaussian_vector(rng, n);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = gaussian_vector(rng, 1)[0];
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    const Eigen::MatrixXd h = q * lam.asDiagonal() * q.transpose();
    const GaussCurvature g = gauss_ricci(0.5 * (h + h.transpose()));
    VecX eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.ricci, Eigen::EigenvaluesOnly).eigenvalues();
    VecX spec = ricci_spectrum(lam);
    std::sort(spec.data(), spec.data() + n);
    worst = std::max(worst, (eig - spec).cwiseAbs().maxCoeff() / std::max(1.0, spec.cwiseAbs().maxCoeff()));
  }
  return worst;
}

inline RunResult run_einstein(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto& e = cfg.einstein;
  Table t({"n", "kappa", "c1_est", "c2_est", "samples", "extremizer"});
  std::vector<Check> checks;
  for (int n : e.dims) {
    checks.push_back(detail::check_le("ricci_spectrum_vs_matrix n=" + std::to_string(n),
                                      ricci_spectrum_residual(n, 100, cfg.seed), 1e-12));
    const PinchingSurvey ps = pinching_survey(n, e.pinching_samples, cfg.seed);
    checks.push_back({"pinching_violations n=" + std::to_string(n), double(ps.violations), "== 0",
                      ps.violations == 0});
    checks.push_back({"info: sharp_(n-2)^2_pinching_violations n=" + std::to_string(n), double(ps.sharp_violations),
                      "info", true});
    for (double kappa : e.kappas) {
      char tag[64];
      std::snprintf(tag, sizeof tag, " n=%d kappa=%g", n, kappa);
      const ZeroSetCheck z = verify_zero_sets(n, kappa, e.starts, e.budget, cfg.seed);
      checks.push_back({std::string("zero_sets_coincide") + tag +
                            (z.counterexample.empty() ? "" : " [" + z.counterexample + "]"),
                        double(z.unexpected), "== 0 unexpected zeros", z.pass});
      const RatioBound rb = ratio_bounds(n, kappa, e.budget, cfg.seed, e.kappa_bound);
      t.add({std::to_string(n), fmt(kappa), fmt(rb.c1), fmt(rb.c2), std::to_string(rb.samples), rb.extremizer()});
    }
  }
  const double a = alpha_exponent(e.dims.front(), e.alpha_p, e.alpha_q);
  checks.push_back({"alpha(p=" + fmt_short(e.alpha_p) + ",q=" + fmt_short(e.alpha_q) + ")", a, "info", true});
  return detail::finish("einstein", t, checks, opt);
}

inline RunResult run(const std::string& subcommand, const ExperimentConfig& cfg, const RunOptions& opt) {
  if (subcommand == "wulff") return run_wulff(cfg, opt);
  if (subcommand == "curvature") return run_curvature(cfg, opt);
  if (subcommand == "kernel") return run_kernel(cfg, opt);
  if (subcommand == "center") return run_center(cfg, opt);
  if (subcommand == "sweep") return run_sweep(cfg, opt);
  if (subcommand == "einstein") return run_einstein(cfg, opt);
  throw DomainError("unknown subcommand '" + subcommand + "'");
}

}  // namespace wulffstab
