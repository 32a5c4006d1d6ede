#pragma once

// Metrics in Gaussian normal form g = dx^2 + alpha(x,y)^2 dy^2 on a coordinate
// rectangle, with analytic jets of alpha, geodesic curvature kappa = dx(alpha)/alpha
// of the x-level curves, and Gauss curvature G = -dxx(alpha)/alpha.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace lensrig {

// Jet of alpha at a point: value and partials up to the mixed third order used
// by the toolkit (third x-derivative feeds dx(kappa) chains).
struct AlphaJet {
  double a{};     // alpha
  double ax{};    // d/dx
  double ay{};    // d/dy
  double axx{};   // d2/dx2
  double axy{};   // d2/dxdy
  double ayy{};   // d2/dy2
  double axxx{};  // d3/dx3
  double axxy{};  // d3/dx2dy
};

struct GaussianMetric {
  std::function<AlphaJet(double, double)> alpha_eval;
  // Chart rectangle. x_min < 0 is the analytic extension collar; x in [0, x_max]
  // is the manifold side. y in [y_min, y_max], optionally periodic.
  double x_min = -0.5, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
  bool y_periodic = false;
  // Parameter box Omega_small = [0, eps1] x [-delta1, delta1] for family builds.
  double eps1 = 0.2, delta1 = 0.2;
  // Collar x <= known_depth counts as "known" (plus everything outside x > 0).
  double known_depth = 0.0;
  std::string name = "custom";

  bool in_domain(double x, double y) const {
    if (x < x_min - 1e-12 || x > x_max + 1e-12) return false;
    if (y_periodic) return true;
    return y >= y_min - 1e-12 && y <= y_max + 1e-12;
  }

  AlphaJet eval(double x, double y) const {
    if (!in_domain(x, y)) throw std::domain_error("eval_metric: point outside chart");
    return alpha_eval(x, y);
  }

  double alpha(double x, double y) const { return eval(x, y).a; }

  double kappa(double x, double y) const {
    const AlphaJet j = eval(x, y);
    return j.ax / j.a;
  }

  // dx(kappa) = axx/a - (ax/a)^2
  double kappa_x(double x, double y) const {
    const AlphaJet j = eval(x, y);
    const double k = j.ax / j.a;
    return j.axx / j.a - k * k;
  }

  // dy(kappa) = axy/a - ax*ay/a^2
  double kappa_y(double x, double y) const {
    const AlphaJet j = eval(x, y);
    return j.axy / j.a - j.ax * j.ay / (j.a * j.a);
  }

  // dxx(kappa), from the third-order jet.
  double kappa_xx(double x, double y) const {
    const AlphaJet j = eval(x, y);
    const double a = j.a;
    return j.axxx / a - 3.0 * j.axx * j.ax / (a * a) + 2.0 * j.ax * j.ax * j.ax / (a * a * a);
  }

  // Gauss curvature G = -(dx(kappa) + kappa^2) = -dxx(alpha)/alpha.
  double gauss(double x, double y) const {
    const AlphaJet j = eval(x, y);
    return -j.axx / j.a;
  }

  double diameter() const {
    const double dx = x_max - x_min, dy = y_max - y_min;
    return std::sqrt(dx * dx + dy * dy);
  }
};

// ---------------------------------------------------------------------------
// Analytic catalog
// ---------------------------------------------------------------------------

// Flat disk of radius R: alpha = R - x, x = distance from the boundary circle,
// y = boundary angle (period 2*pi). The chart is extended past the center as a
// signed-alpha double cover so the exact radial diameter exits at x = 2R.
inline GaussianMetric flat_disk(double R = 2.0) {
  if (R <= 0) throw std::invalid_argument("flat_disk: R must be positive");
  GaussianMetric m;
  m.alpha_eval = [R](double x, double) {
    AlphaJet j;
    j.a = R - x;
    j.ax = -1.0;
    return j;
  };
  m.x_min = -0.75 * R;
  m.x_max = 2.0 * R;
  m.y_min = -M_PI;
  m.y_max = M_PI;
  m.y_periodic = true;
  m.eps1 = 0.1 * R;
  m.delta1 = 0.1 * R;
  m.name = "flat_disk";
  return m;
}

// Spherical cap of the unit sphere: boundary at colatitude r0, alpha = sin(r0 - x),
// G = +1. Extended past the pole (x > r0) as the antipodal meridian sheet.
inline GaussianMetric sphere_cap(double r0 = M_PI / 3.0) {
  if (r0 <= 0 || r0 >= M_PI / 2.0)
    throw std::invalid_argument("sphere_cap: need r0 in (0, pi/2)");
  GaussianMetric m;
  m.alpha_eval = [r0](double x, double) {
    AlphaJet j;
    j.a = std::sin(r0 - x);
    j.ax = -std::cos(r0 - x);
    j.axx = -std::sin(r0 - x);
    j.axxx = std::cos(r0 - x);
    return j;
  };
  m.x_min = -1.15 * r0;
  m.x_max = 2.0 * r0;
  m.y_min = -M_PI;
  m.y_max = M_PI;
  m.y_periodic = true;
  m.eps1 = 0.15 * r0;
  m.delta1 = 0.15 * r0;
  m.name = "sphere_cap";
  return m;
}

// Hyperbolic collar piece: alpha = sinh(r0 - x), G = -1, kappa = -coth(r0-x) < 0.
inline GaussianMetric hyperbolic_collar(double r0 = 1.0) {
  if (r0 <= 0) throw std::invalid_argument("hyperbolic_collar: r0 must be positive");
  GaussianMetric m;
  m.alpha_eval = [r0](double x, double) {
    AlphaJet j;
    j.a = std::sinh(r0 - x);
    j.ax = -std::cosh(r0 - x);
    j.axx = std::sinh(r0 - x);
    j.axxx = -std::cosh(r0 - x);
    return j;
  };
  m.x_min = -1.25 * r0;
  m.x_max = 0.9 * r0;
  m.y_min = -2.0;
  m.y_max = 2.0;
  m.eps1 = 0.15 * r0;
  m.delta1 = 0.15 * r0;
  m.name = "hyperbolic_collar";
  return m;
}

// Hyperbolic waist model: alpha = cosh(x - xc), G = -1. The x = xc latitude is the
// unique closed geodesic (kappa changes sign there); used by the foliation module.
inline GaussianMetric hyperbolic_waist(double xc = 0.6, double half_width = 1.0) {
  GaussianMetric m;
  m.alpha_eval = [xc](double x, double) {
    AlphaJet j;
    j.a = std::cosh(x - xc);
    j.ax = std::sinh(x - xc);
    j.axx = std::cosh(x - xc);
    j.axxx = std::sinh(x - xc);
    return j;
  };
  m.x_min = xc - half_width;
  m.x_max = xc + half_width;
  m.y_min = -M_PI;
  m.y_max = M_PI;
  m.y_periodic = true;
  m.name = "hyperbolic_waist";
  return m;
}

// Flat annulus between radii r_in < r_out in polar form: alpha = r_out - x for
// x in [0, r_out - r_in], y the boundary angle (period 2*pi).
inline GaussianMetric flat_polar_annulus(double r_out = 2.0, double r_in = 1.0) {
  if (!(0 < r_in && r_in < r_out))
    throw std::invalid_argument("flat_polar_annulus: need 0 < r_in < r_out");
  GaussianMetric m;
  m.alpha_eval = [r_out](double x, double) {
    AlphaJet j;
    j.a = r_out - x;
    j.ax = -1.0;
    return j;
  };
  m.x_min = -0.25 * (r_out - r_in);
  m.x_max = r_out - r_in;
  m.y_min = -M_PI;
  m.y_max = M_PI;
  m.y_periodic = true;
  m.eps1 = 0.2 * (r_out - r_in);
  m.delta1 = 0.2 * (r_out - r_in);
  m.name = "flat_polar_annulus";
  return m;
}

inline GaussianMetric catalog(const std::string& name) {
  if (name == "flat_disk") return flat_disk();
  if (name == "sphere_cap") return sphere_cap();
  if (name == "hyperbolic_collar") return hyperbolic_collar();
  if (name == "hyperbolic_waist") return hyperbolic_waist();
  if (name == "flat_polar_annulus") return flat_polar_annulus();
  throw std::invalid_argument("catalog: unknown metric '" + name + "'");
}

// ---------------------------------------------------------------------------
// Compactly supported multiplicative bump: alpha -> alpha * (1 + A*B(u)*B(v))
// with B(w) = (1 - w^2)^4 on |w| < 1 (C^3 across the support edge), u = (x-cx)/r,
// v = (y-cy)/r. Support must stay inside the chart and off the known collar, so
// the boundary jet at x = 0 is untouched to every order.
// ---------------------------------------------------------------------------

namespace detail {
// B and its first three derivatives.
inline void bump1d(double w, double inv_r, double out[4]) {
  out[0] = out[1] = out[2] = out[3] = 0.0;
  const double s = 1.0 - w * w;
  if (s <= 0.0) return;
  const double s2 = s * s;
  // B(w) = s^4 with s = 1-w^2, s' = -2w:
  // B'   = 4 s^3 s'                         = -8 w s^3
  // B''  = -8 s^3 - 8w * 3 s^2 s'           = -8 s^3 + 48 w^2 s^2
  // B''' = -24 s^2 s' + 96 w s^2 + 96 w^2 s s'
  //      = 48 w s^2 + 96 w s^2 - 192 w^3 s  = 144 w s^2 - 192 w^3 s
  out[0] = s2 * s2;
  out[1] = -8.0 * w * s2 * s * inv_r;
  out[2] = (-8.0 * s2 * s + 48.0 * w * w * s2) * inv_r * inv_r;
  out[3] = (144.0 * w * s2 - 192.0 * w * w * w * s) * inv_r * inv_r * inv_r;
}
}  // namespace detail

inline GaussianMetric bump_perturb(const GaussianMetric& m, double cx, double cy,
                                   double radius, double amplitude, int jet_order = 3) {
  if (jet_order < 0 || jet_order > 3)
    throw std::invalid_argument("bump_perturb: jet_order must be in [0,3]");
  if (radius <= 0) throw std::invalid_argument("bump_perturb: radius must be positive");
  const double lo = cx - radius;
  if (lo <= std::max(0.0, m.known_depth))
    throw std::invalid_argument("bump_perturb: support must avoid the known collar");
  if (cx + radius >= m.x_max || cy - radius <= m.y_min || cy + radius >= m.y_max)
    throw std::invalid_argument("bump_perturb: support must be strictly inside the chart");

  GaussianMetric out = m;
  auto base = m.alpha_eval;
  const double inv_r = 1.0 / radius;
  out.alpha_eval = [base, cx, cy, inv_r, amplitude](double x, double y) {
    AlphaJet j = base(x, y);
    double Bu[4], Bv[4];
    detail::bump1d((x - cx) * inv_r, inv_r, Bu);
    detail::bump1d((y - cy) * inv_r, inv_r, Bv);
    // s = 1 + A*Bu(x)*Bv(y) and its partials.
    const double A = amplitude;
    const double s = 1.0 + A * Bu[0] * Bv[0];
    const double sx = A * Bu[1] * Bv[0];
    const double sy = A * Bu[0] * Bv[1];
    const double sxx = A * Bu[2] * Bv[0];
    const double sxy = A * Bu[1] * Bv[1];
    const double syy = A * Bu[0] * Bv[2];
    const double sxxx = A * Bu[3] * Bv[0];
    const double sxxy = A * Bu[2] * Bv[1];
    AlphaJet o;
    o.a = j.a * s;
    o.ax = j.ax * s + j.a * sx;
    o.ay = j.ay * s + j.a * sy;
    o.axx = j.axx * s + 2.0 * j.ax * sx + j.a * sxx;
    o.axy = j.axy * s + j.ax * sy + j.ay * sx + j.a * sxy;
    o.ayy = j.ayy * s + 2.0 * j.ay * sy + j.a * syy;
    o.axxx = j.axxx * s + 3.0 * j.axx * sx + 3.0 * j.ax * sxx + j.a * sxxx;
    o.axxy = j.axxy * s + j.axx * sy + 2.0 * j.axy * sx + 2.0 * j.ax * sxy +
             j.ay * sxx + j.a * sxxy;
    return o;
  };
  out.name = m.name + "+bump";
  return out;
}

// Multiplicative perturbation alpha -> alpha * (1 + eps * exp(-x) * cos(y)):
// deliberately nonzero on x = 0, so the boundary jet is NOT preserved. Used to
// exercise the failure branches of the lens-agreement checks.
inline GaussianMetric jet_violating_perturb(const GaussianMetric& m, double eps) {
  GaussianMetric out = m;
  auto base = m.alpha_eval;
  out.alpha_eval = [base, eps](double x, double y) {
    const AlphaJet j = base(x, y);
    const double p = eps * std::exp(-x) * std::cos(y);
    const double q = eps * std::exp(-x) * std::sin(y);
    // s = 1 + p; sx = -p, sy = -q, sxx = p, sxy = q, syy = -p, sxxx = -p, sxxy = -q
    const double s = 1.0 + p;
    AlphaJet o;
    o.a = j.a * s;
    o.ax = j.ax * s - j.a * p;
    o.ay = j.ay * s - j.a * q;
    o.axx = j.axx * s - 2.0 * j.ax * p + j.a * p;
    o.axy = j.axy * s - j.ax * q - j.ay * p + j.a * q;
    o.ayy = j.ayy * s - 2.0 * j.ay * q - j.a * p;
    o.axxx = j.axxx * s - 3.0 * j.axx * p + 3.0 * j.ax * p - j.a * p;
    o.axxy = j.axxy * s - j.axx * q - 2.0 * j.axy * p + 2.0 * j.ax * q + j.ay * p - j.a * q;
    return o;
  };
  out.name = m.name + "+jetviolation";
  return out;
}

}  // namespace lensrig
