// lensrig: numerical toolkit around the lens-rigidity identities.
//
// Commands: lens | jacobi | front | verify | diff | domains | foliate
// Usage:    lensrig <command> [--config <file>] [--out <dir>] [--seed N] [--tol X]
//           plus per-command overrides (e.g. --metric, --fan, --m0/--m1).
// Exit codes: 0 pass, 1 check failure, 2 config error, 3 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <random>

#include "lensrig/config.hpp"
#include "lensrig/diff.hpp"
#include "lensrig/domains.hpp"
#include "lensrig/foliation.hpp"
#include "lensrig/front.hpp"
#include "lensrig/geodesic.hpp"
#include "lensrig/jacobi.hpp"
#include "lensrig/metric.hpp"
#include "lensrig/report.hpp"

namespace fs = std::filesystem;
using namespace lensrig;

namespace {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Polar models fold the far sheet back at the point where alpha vanishes.
std::optional<double> fold_of(const GaussianMetric& m) {
  if (m.name.rfind("flat_disk", 0) == 0 || m.name.rfind("sphere_cap", 0) == 0)
    return 0.5 * m.x_max;
  return std::nullopt;
}

std::string prov_int(long v) { return std::to_string(v); }

// ---------------------------------------------------------------------------
// lens: boundary fan + CSV/SVG export
// ---------------------------------------------------------------------------

VerificationReport run_lens(const Config& cfg, const fs::path& out, long seed, double tol) {
  const GaussianMetric m = metric_from_config(cfg);
  const int fan = cfg.get_int("lens.fan", 64);
  if (fan < 1) throw ConfigError("field 'lens.fan': must be positive");
  const double y0 = cfg.get_double("lens.y0", 0.0);
  const auto fold = fold_of(m);

  std::vector<LensRecord> recs;
  int not_exited = 0;
  for (int i = 1; i <= fan; ++i) {
    const double th = M_PI * i / (2.0 * fan);  // fan over (0, pi/2]
    const LensRecord r = scattering(m, {0.0, y0, th}, kDefaultStep, fold);
    if (!r.exited) ++not_exited;
    recs.push_back(r);
  }
  if (not_exited > fan / 2)
    throw NumericalError("lens: " + std::to_string(not_exited) + " rays did not exit");

  // CSV schema: y_in, theta_in, y_out, theta_out, length, boundary_id
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : recs)
    rows.push_back({fmt17(r.entry.y), fmt17(r.entry.theta), fmt17(r.exit.y),
                    fmt17(r.exit.theta), fmt17(r.length), boundary_name(r.boundary)});
  write_text_file(out / "lens.csv",
                  csv_table({"y_in", "theta_in", "y_out", "theta_out", "length", "boundary_id"},
                            rows));

  // SVG fan: boundary circle plus one chord per record (node count = fan size)
  SvgCanvas svg(400, 400);
  const double R = 180.0, cx = 200.0, cy = 200.0;
  svg.circle(cx, cy, R);
  for (const auto& r : recs)
    svg.line(cx + R * std::cos(r.entry.y), cy - R * std::sin(r.entry.y),
             cx + R * std::cos(r.exit.y), cy - R * std::sin(r.exit.y), "#36c", 0.6);
  write_text_file(out / "fan.svg", svg.str());

  VerificationReport rep;
  rep.command = "lens";
  rep.add("all-rays-exited", static_cast<double>(not_exited), 0.5);
  if (m.name == "flat_disk") {  // Euclidean chord oracle
    const double R0 = 0.5 * m.x_max;
    double worst = 0.0;
    for (const auto& r : recs) {
      const double th = r.entry.theta;
      worst = std::max(worst, std::abs(r.length - 2.0 * R0 * std::sin(th)));
      worst = std::max(worst,
                       std::abs(std::remainder(r.exit.y - r.entry.y - 2.0 * th, 2.0 * M_PI)));
      worst = std::max(worst, std::abs(std::abs(r.exit.theta) - th));
    }
    rep.add("flat-chord-oracle", worst, tol > 0 ? tol : 1e-6);
  }
  rep.provenance = {{"metric", m.name},
                    {"fan", prov_int(fan)},
                    {"step", fmt17(kDefaultStep)},
                    {"seed", prov_int(seed)}};
  return rep;
}

// ---------------------------------------------------------------------------
// jacobi: canonical-frame track export + Wronskian check
// ---------------------------------------------------------------------------

VerificationReport run_jacobi(const Config& cfg, const fs::path& out, long seed, double tol) {
  const GaussianMetric m = metric_from_config(cfg);
  const double x = cfg.get_double("jacobi.x", 0.05);
  const double y = cfg.get_double("jacobi.y", 0.0);
  const double th = cfg.get_double("jacobi.theta", 1.0);
  const double T = cfg.get_double("jacobi.T", -1.0);

  const CanonicalFrame f0 = standard_frame(m, x, y, th);
  const JacobiTrack tj = jacobi_integrate(m, {x, y, th}, f0.J, T);
  const JacobiTrack tb = jacobi_integrate(m, {x, y, th}, f0.B, T);
  if (tj.t.size() < 2) throw NumericalError("jacobi: track left the chart immediately");

  // CSV schema: t, perp, perp_dot, par (one block per field, tagged)
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < tj.t.size(); ++i)
    rows.push_back({"J", fmt17(tj.t[i]), fmt17(tj.p[i].perp), fmt17(tj.p[i].perp_dot),
                    fmt17(tj.p[i].par)});
  for (size_t i = 0; i < tb.t.size(); ++i)
    rows.push_back({"B", fmt17(tb.t[i]), fmt17(tb.p[i].perp), fmt17(tb.p[i].perp_dot),
                    fmt17(tb.p[i].par)});
  write_text_file(out / "jacobi.csv",
                  csv_table({"field", "t", "perp", "perp_dot", "par"}, rows));

  VerificationReport rep;
  rep.command = "jacobi";
  double worst = 0.0;
  const size_t n = std::min(tj.t.size(), tb.t.size());
  for (size_t i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(symplectic(tj.p[i], tb.p[i]) - 1.0));
  rep.add("wronskian-constancy", worst, tol > 0 ? tol : 1e-8);
  rep.provenance = {{"metric", m.name}, {"T", fmt17(T)}, {"step", fmt17(kDefaultStep)},
                    {"seed", prov_int(seed)}};
  return rep;
}

// ---------------------------------------------------------------------------
// front: circle-front family build, verification, columnar + SVG export
// ---------------------------------------------------------------------------

VerificationReport run_front(const Config& cfg, const fs::path& out, long seed, double tol) {
  const GaussianMetric m = metric_from_config(cfg);
  GridSpec g;
  g.nx = cfg.get_int("front.nx", 9);
  g.ny = cfg.get_int("front.ny", 9);
  g.ntheta = cfg.get_int("front.ntheta", 17);
  g.T = cfg.get_double("front.T", 0.5);
  const double tt = tol > 0 ? tol : 1e-6;

  const FrontFamily fam = build_front_family(m, g);

  // Columnar layout: '#'-prefixed header (grid spec), then row-major samples.
  std::string dat;
  dat += "# front family columnar layout v1\n";
  dat += "# nx ny ntheta t_eval\n";
  dat += "# columns: ix iy ith x y theta J Jd Y Yd B Bd flagged\n";
  dat += prov_int(g.nx) + " " + prov_int(g.ny) + " " + prov_int(g.ntheta) + " " +
         fmt17(fam.t_eval) + "\n";
  for (int i = 0; i < g.nx; ++i)
    for (int k = 0; k < g.ny; ++k)
      for (int j = 0; j < g.ntheta; ++j) {
        const int idx = fam.index(i, k, j);
        const FrameState& f = fam.at_eval[idx];
        dat += prov_int(i) + " " + prov_int(k) + " " + prov_int(j) + " " + fmt17(f.s.x) + " " +
               fmt17(f.s.y) + " " + fmt17(f.s.theta) + " " + fmt17(f.J) + " " + fmt17(f.Jd) +
               " " + fmt17(f.Y) + " " + fmt17(f.Yd) + " " + fmt17(f.B) + " " + fmt17(f.Bd) +
               " " + prov_int(fam.flagged[idx]) + "\n";
      }
  write_text_file(out / "front.dat", dat);

  // SVG: the displaced circle of one interior node (theta sweep at t_eval).
  SvgCanvas svg(400, 400);
  std::vector<std::pair<double, double>> pts;
  const int i0 = g.nx / 2, k0 = g.ny / 2;
  for (int j = 0; j < g.ntheta; ++j) {
    const FrameState& f = fam.at_eval[fam.index(i0, k0, j)];
    pts.push_back({200.0 + 140.0 * (f.s.x - fam.node_x(i0)) / g.T,
                   200.0 - 140.0 * (f.s.y - fam.node_y(k0)) / g.T});
  }
  svg.polygon(pts, "#c33");
  svg.circle(200, 200, 140, "#999");
  write_text_file(out / "front.svg", svg.str());

  VerificationReport rep;
  rep.command = "front";
  for (const auto& [name, line] : pseudo_front_verify(fam, tt))
    if (std::isfinite(line.tol)) rep.add(name, line.residual, line.tol);
  const LensAgreement la = lens_agreement(fam, m);
  rep.add("lens-agreement-a1", la.a1, tt);
  rep.add("lens-agreement-a2-alpha", la.a2_alpha, tt);
  rep.add("lens-agreement-a2-kappa", la.a2_kappa, tt);
  rep.provenance = {{"metric", m.name},
                    {"grid", prov_int(g.nx) + "x" + prov_int(g.ny) + "x" + prov_int(g.ntheta)},
                    {"T", fmt17(g.T)},
                    {"step", fmt17(kDefaultStep)},
                    {"seed", prov_int(seed)}};
  return rep;
}

// ---------------------------------------------------------------------------
// verify: identity suite on one metric
// ---------------------------------------------------------------------------

VerificationReport run_verify(const Config& cfg, const fs::path& out, long seed, double tol) {
  const GaussianMetric m = metric_from_config(cfg);
  const int n_rand = cfg.get_int("verify.samples", 40);
  VerificationReport rep;
  rep.command = "verify";

  // 1) symplectic pairing conservation along backward frame flows
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1),
      uth(0.3, M_PI - 0.3);
  double sym_worst = 0.0;
  int kept = 0;
  for (int i = 0; i < n_rand; ++i) {
    const double x = ux(rng), y = uy(rng), th = uth(rng);
    const AlphaJet a0 = m.alpha_eval(x, y);
    const double cJB = 1.0, cYB = a0.a * std::sin(th), cYJ = (a0.ax / a0.a) * a0.a;
    try {
      frame_flow(m, x, y, th, -1.0, kDefaultStep, [&](double, const FrameState& f) {
        sym_worst = std::max({sym_worst, std::abs(f.Jd * f.B - f.J * f.Bd - cJB),
                              std::abs(f.Yd * f.B - f.Y * f.Bd - cYB),
                              std::abs(f.Yd * f.J - f.Y * f.Jd - cYJ)});
      });
      ++kept;
    } catch (const std::domain_error&) {
    }
  }
  if (kept < n_rand / 4) throw NumericalError("verify: too many flows left the chart");
  rep.add("symplectic-conservation", sym_worst, tol > 0 ? tol : 1e-8);

  // 2) closed-form Jacobi solutions where the curvature is constant
  const bool flat = m.name.rfind("flat_", 0) == 0;
  const bool sph = m.name.rfind("sphere_cap", 0) == 0;
  const bool hyp = m.name.rfind("hyperbolic_", 0) == 0;
  if (flat || sph || hyp) {
    const CanonicalFrame f0 = standard_frame(m, 0.05, 0.0, 1.2);
    const JacobiTrack tb = jacobi_integrate(m, {0.05, 0.0, 1.2}, f0.B, -0.8);
    const JacobiTrack tj = jacobi_integrate(m, {0.05, 0.0, 1.2}, f0.J, -0.8);
    double worst = 0.0;
    for (size_t i = 0; i < tb.t.size(); ++i) {
      const double t = tb.t[i];
      const double bexp = flat ? -t : (sph ? -std::sin(t) : -std::sinh(t));
      const double jexp = flat ? 1.0 : (sph ? std::cos(t) : std::cosh(t));
      worst = std::max({worst, std::abs(tb.p[i].perp - bexp), std::abs(tj.p[i].perp - jexp)});
    }
    rep.add("closed-form-jacobi", worst, tol > 0 ? tol : 1e-8);
  }

  // 3) curvature chain G = -dxx(alpha)/alpha vs -(dx kappa + kappa^2)
  double chain = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double x = ux(rng), y = uy(rng);
    const double k = m.kappa(x, y);
    chain = std::max(chain, std::abs(m.gauss(x, y) + (m.kappa_x(x, y) + k * k)));
  }
  rep.add("curvature-chain", chain, 1e-10);

  // 4) evolution-formula FD crosscheck
  double evo = 0.0;
  for (double th : {0.7, 1.9})
    evo = std::max(evo, fd_jacobi_crosscheck_at(m, 0.6 * m.eps1, 0.2 * m.delta1, th, -0.4).max());
  rep.add("evolution-crosscheck", evo, tol > 0 ? tol : 1e-5);

  // 5) transport and commutator identities
  double tr = 0.0;
  for (double th : {0.8, 2.1}) {
    const IdentityResiduals ir =
        frame_identity_residuals_at(m, 0.5 * m.eps1, -0.3 * m.delta1, th, -0.4);
    tr = std::max({tr, ir.transport, ir.y_transport, ir.commutator_y, ir.commutator_x});
  }
  ScalarField f{[](double x, double y, double th) { return std::sin(x + 2 * y) * std::cos(th) + x * th; },
                [](double x, double y, double th) {
                  return std::array<double, 3>{std::cos(x + 2 * y) * std::cos(th) + th,
                                               2 * std::cos(x + 2 * y) * std::cos(th),
                                               -std::sin(x + 2 * y) * std::sin(th) + x};
                }};
  const auto cr = v0_commutator_residuals(m, f, 0.5 * m.eps1, 0.1 * m.delta1, 1.1);
  tr = std::max({tr, cr[0], cr[1], cr[2]});
  rep.add("transport-commutators", tr, tol > 0 ? tol : 1e-5);

  // CSV export of the checks
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : rep.checks)
    rows.push_back({c.name, fmt17(c.residual), fmt17(c.tolerance), c.pass ? "1" : "0"});
  write_text_file(out / "verify.csv", csv_table({"name", "residual", "tolerance", "pass"}, rows));

  rep.provenance = {{"metric", m.name}, {"samples", prov_int(n_rand)},
                    {"step", fmt17(kDefaultStep)}, {"seed", prov_int(seed)}};
  return rep;
}

// ---------------------------------------------------------------------------
// diff: two-metric difference map on a grid + CSV/SVG export
// ---------------------------------------------------------------------------

VerificationReport run_diff(const Config& cfg, const fs::path& out, long seed, double tol) {
  PairedSetup p;
  p.m0 = metric_from_config(cfg, "m0");
  p.m1 = metric_from_config(cfg, "m1");
  p.T = cfg.get_double("diff.T", 0.6);
  const int nx = cfg.get_int("diff.nx", 9), nth = cfg.get_int("diff.ntheta", 5);
  const double x0 = cfg.get_double("diff.x0", 0.5), x1 = cfg.get_double("diff.x1", 0.7);
  const double y = cfg.get_double("diff.y", 0.0);

  const double jet = pair_jet_mismatch(p);

  std::vector<std::vector<std::string>> rows;
  std::vector<double> residuals;
  double fmax = 0.0, res_worst = 0.0;
  int failed = 0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nth; ++j) {
      const double x = x0 + (x1 - x0) * i / (nx - 1.0);
      const double th = M_PI / 2.0 + (j - (nth - 1) / 2.0) * 0.15;
      const DifferenceResult d = difference_map(p, x, y, th);
      if (!d.converged) ++failed;
      fmax = std::max({fmax, std::abs(d.F[0]), std::abs(d.F[1]), std::abs(d.F[2])});
      res_worst = std::max(res_worst, d.residual);
      residuals.push_back(d.residual);
      rows.push_back({fmt17(x), fmt17(y), fmt17(th), fmt17(d.F[0]), fmt17(d.F[1]),
                      fmt17(d.F[2]), fmt17(d.residual)});
    }
  if (failed > 0) throw NumericalError("diff: " + std::to_string(failed) + " nodes did not converge");

  write_text_file(out / "difference.csv",
                  csv_table({"x", "y", "theta", "a", "b", "c", "residual"}, rows));

  // residual heatmap over the (x, theta) grid
  SvgCanvas svg(40.0 * nx, 40.0 * nth);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nth; ++j)
      svg.rect(40.0 * i, 40.0 * j, 40, 40,
               heat_color(residuals[i * nth + j] + 1e-18, 1e-14, 1e-2));
  write_text_file(out / "residuals.svg", svg.str());

  VerificationReport rep;
  rep.command = "diff";
  rep.add("newton-residual", res_worst, tol > 0 ? tol : 1e-10);
  if (jet < 1e-14) {
    // identical boundary jets: with m1 == m0 the difference map must vanish
    const bool same = p.m0.name == p.m1.name;
    if (same) rep.add("f-identically-zero", fmax, tol > 0 ? tol : 1e-8);
  }
  rep.provenance = {{"m0", p.m0.name}, {"m1", p.m1.name}, {"T", fmt17(p.T)},
                    {"grid", prov_int(nx) + "x" + prov_int(nth)},
                    {"step", fmt17(kDefaultStep)}, {"seed", prov_int(seed)}};
  return rep;
}

// ---------------------------------------------------------------------------
// domains: membership grid, flux lower bound, hitting-time bound
// ---------------------------------------------------------------------------

VerificationReport run_domains(const Config& cfg, const fs::path& out, long seed, double tol) {
  const GaussianMetric m = metric_from_config(cfg);
  ZDomain dom;
  dom.lambda = cfg.get_double("domains.lambda", 0.1);
  dom.z_star = cfg.get_double("domains.z_star", 0.0125);
  const int n_flux = cfg.get_int("domains.samples", 2000);
  const int n_paths = cfg.get_int("domains.paths", 100);

  // membership grid CSV over (x, theta) at y = 0
  std::vector<std::vector<std::string>> rows;
  const int gx = 21, gt = 33;
  for (int i = 0; i < gx; ++i)
    for (int j = 0; j < gt; ++j) {
      const double x = m.eps1 * i / (gx - 1.0);
      const double th = M_PI * (j + 0.5) / gt;
      rows.push_back({fmt17(x), fmt17(th), fmt17(z_lambda(dom.lambda, x, th)),
                      dom.contains(m, x, 0.0, th) ? "1" : "0"});
    }
  write_text_file(out / "membership.csv", csv_table({"x", "theta", "z", "in_domain"}, rows));

  const FluxReport fr = flux_lower_bound_check(m, dom, n_flux, static_cast<unsigned>(seed));
  write_text_file(out / "flux.csv",
                  csv_table({"samples_in_domain", "violations", "min_margin", "c0"},
                            {{prov_int(fr.samples_in_domain), prov_int(fr.violations),
                              fmt17(fr.min_margin), fmt17(fr.c0)}}));

  // hitting-time bound on random starts
  std::mt19937 rng(static_cast<unsigned>(seed) + 1);
  std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1),
      uth(0.1, M_PI - 0.1);
  const double bound = hit_bound(m);
  double worst_hit = 0.0;
  for (int i = 0; i < n_paths; ++i) {
    const FlowPath fp = mu_flow(m, ux(rng), uy(rng), uth(rng));
    worst_hit = std::max(worst_hit, fp.hit_s);
  }

  VerificationReport rep;
  rep.command = "domains";
  rep.add("flux-violations", static_cast<double>(fr.violations), 0.5);
  rep.add("flux-min-margin", std::max(0.0, -fr.min_margin), tol > 0 ? tol : 1e-12);
  rep.add("hitting-time-bound", worst_hit, bound);
  rep.provenance = {{"metric", m.name}, {"lambda", fmt17(dom.lambda)},
                    {"z_star", fmt17(dom.z_star)}, {"samples", prov_int(n_flux)},
                    {"paths", prov_int(n_paths)}, {"step", fmt17(kDefaultStep)},
                    {"seed", prov_int(seed)}};
  return rep;
}

// ---------------------------------------------------------------------------
// foliate: curve-shortening run with snapshots and SVG frames
// ---------------------------------------------------------------------------

VerificationReport run_foliate(const Config& cfg, const fs::path& out, long seed, double tol) {
  const GaussianMetric m = metric_from_config(cfg);
  const int nodes = cfg.get_int("foliate.nodes", 64);
  EvolveOptions opt;
  opt.dtau = cfg.get_double("foliate.dtau", 1e-4);
  opt.max_steps = cfg.get_int("foliate.max_steps", 400000);

  // chart and initial curve by model: collapse runs use a chart that stays
  // regular at the limit point; the waist model stays in the Gaussian chart.
  ChartMetric chart = euclidean_chart();
  ClosedCurve c;
  std::string expect = cfg.get("foliate.expect", "point");
  if (m.name.rfind("flat_disk", 0) == 0) {
    chart = euclidean_chart();
    c = circle_curve(0.0, 0.0, cfg.get_double("foliate.r0", 1.0), nodes);
  } else if (m.name.rfind("sphere_cap", 0) == 0) {
    chart = stereographic_sphere_chart();
    c = circle_curve(0.0, 0.0, std::tan(0.25 * m.x_max / 2.0), nodes);
  } else if (m.name.rfind("hyperbolic_waist", 0) == 0) {
    chart = gaussian_chart(m);
    c.offset = {0.0, 2.0 * M_PI};
    const double xs = cfg.get_double("foliate.x_start", 0.75);
    for (int i = 0; i < nodes; ++i)
      c.nodes.push_back({xs, -M_PI + 2.0 * M_PI * i / nodes});
    if (!cfg.has("foliate.expect")) expect = "geodesic";
  } else {
    throw ConfigError("field 'metric.name': no foliation chart for '" + m.name + "'");
  }

  // evolve manually so snapshots can be captured at a fixed cadence
  const int n_frames = cfg.get_int("foliate.frames", 6);
  std::vector<std::pair<double, ClosedCurve>> snaps{{0.0, c}};
  FoliationOutcome fo;
  {
    double tau = 0.0;
    long step_i = 0;
    double max_increase = -1e30;
    double prev_len = curve_length(chart, c);
    fo.kind = FoliationKind::Budget;
    while (step_i < opt.max_steps) {
      const double len = curve_length(chart, c);
      if (len < opt.collapse_length) {
        fo.kind = FoliationKind::CollapsedToPoint;
        break;
      }
      const auto kap = curvature_of_curve(chart, c);
      double kmax = 0.0;
      for (double k : kap) kmax = std::max(kmax, std::abs(k));
      if (kmax < opt.geodesic_kappa && len > opt.geodesic_min_length) {
        fo.kind = FoliationKind::ClosedGeodesic;
        break;
      }
      const double h = len / nodes;
      c = shorten_step(chart, c, std::min(opt.dtau, 0.2 * h * h));
      tau += std::min(opt.dtau, 0.2 * h * h);
      ++step_i;
      max_increase = std::max(max_increase, curve_length(chart, c) - prev_len);
      prev_len = curve_length(chart, c);
      if (step_i % std::max(1L, opt.max_steps / n_frames) == 0) snaps.push_back({tau, c});
    }
    fo.final_curve = c;
    fo.tau_final = tau;
    fo.steps = step_i;
    snaps.push_back({tau, c});

    VerificationReport rep;
    rep.command = "foliate";
    const std::string kind = fo.kind == FoliationKind::CollapsedToPoint ? "point"
                             : fo.kind == FoliationKind::ClosedGeodesic ? "geodesic"
                                                                        : "budget";
    rep.add("classified-as-" + expect, kind == expect ? 0.0 : 1.0, 0.5);
    rep.add("length-monotone-decrease", std::max(0.0, max_increase), tol > 0 ? tol : 1e-12);

    // snapshots CSV and SVG frame sequence
    std::vector<std::vector<std::string>> rows;
    for (size_t s = 0; s < snaps.size(); ++s)
      for (size_t i = 0; i < snaps[s].second.nodes.size(); ++i)
        rows.push_back({prov_int(static_cast<long>(s)), fmt17(snaps[s].first),
                        fmt17(snaps[s].second.nodes[i][0]), fmt17(snaps[s].second.nodes[i][1])});
    write_text_file(out / "curves.csv", csv_table({"snapshot", "tau", "u", "v"}, rows));
    for (size_t s = 0; s < snaps.size(); ++s) {
      SvgCanvas svg(400, 400);
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : snaps[s].second.nodes)
        pts.push_back({200.0 + 90.0 * p[0], 200.0 - 90.0 * p[1] * (snaps[s].second.offset[1] != 0.0 ? 0.5 : 1.0)});
      svg.polygon(pts, "#371");
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%03zu.svg", s);
      write_text_file(out / name, svg.str());
    }

    rep.provenance = {{"metric", m.name}, {"nodes", prov_int(nodes)},
                      {"dtau", fmt17(opt.dtau)}, {"tau_final", fmt17(fo.tau_final)},
                      {"steps", prov_int(fo.steps)}, {"classification", kind},
                      {"seed", prov_int(seed)}};
    return rep;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lens-rigidity identity toolkit"};
  app.require_subcommand(1);

  std::string config_file, out_dir = "out";
  long seed = 1;
  double tol = -1.0;

  struct Override {
    std::string key, value;
  };
  std::vector<Override> overrides;
  std::string chosen;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "run configuration file (key = value, [section]s)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "sampling seed");
    sub->add_option("--tol", tol, "override default check tolerance");
    sub->callback([&, sub] { chosen = sub->get_name(); });
  };
  auto add_override = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                          const std::string& help) {
    auto holder = std::make_shared<std::string>();
    sub->add_option_function<std::string>(
           flag, [&overrides, key](const std::string& v) { overrides.push_back({key, v}); },
           help)
        ->expected(1);
    (void)holder;
  };

  CLI::App* lens = app.add_subcommand("lens", "boundary scattering fan");
  add_common(lens);
  add_override(lens, "--metric", "metric.name", "catalog metric name");
  add_override(lens, "--fan", "lens.fan", "number of fan angles");

  CLI::App* jac = app.add_subcommand("jacobi", "canonical Jacobi tracks");
  add_common(jac);
  add_override(jac, "--metric", "metric.name", "catalog metric name");

  CLI::App* fr = app.add_subcommand("front", "circle-front family verification");
  add_common(fr);
  add_override(fr, "--metric", "metric.name", "catalog metric name");

  CLI::App* ver = app.add_subcommand("verify", "identity verification suite");
  add_common(ver);
  add_override(ver, "--metric", "metric.name", "catalog metric name");

  CLI::App* dif = app.add_subcommand("diff", "two-metric difference system");
  add_common(dif);
  add_override(dif, "--m0", "m0.name", "reference metric");
  add_override(dif, "--m1", "m1.name", "comparison metric");

  CLI::App* dom = app.add_subcommand("domains", "thermostat domain checks");
  add_common(dom);
  add_override(dom, "--metric", "metric.name", "catalog metric name");

  CLI::App* fol = app.add_subcommand("foliate", "curve-shortening foliation");
  add_common(fol);
  add_override(fol, "--metric", "metric.name", "catalog metric name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags are configuration errors
  }

  try {
    Config cfg;
    if (!config_file.empty()) cfg = parse_config_file(config_file);
    for (const auto& ov : overrides) cfg.set(ov.key, ov.value);

    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    VerificationReport rep;
    if (chosen == "lens") rep = run_lens(cfg, out, seed, tol);
    else if (chosen == "jacobi") rep = run_jacobi(cfg, out, seed, tol);
    else if (chosen == "front") rep = run_front(cfg, out, seed, tol);
    else if (chosen == "verify") rep = run_verify(cfg, out, seed, tol);
    else if (chosen == "diff") rep = run_diff(cfg, out, seed, tol);
    else if (chosen == "domains") rep = run_domains(cfg, out, seed, tol);
    else if (chosen == "foliate") rep = run_foliate(cfg, out, seed, tol);

    const std::string json = report_to_json(rep);
    write_text_file(out / "report.json", json);
    std::fputs(json.c_str(), stdout);
    return rep.overall_pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
