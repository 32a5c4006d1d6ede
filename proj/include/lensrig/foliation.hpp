#pragma once

// Curve-shortening flow on closed curves in an orthogonal 2-D chart, limit
// classification (point vs closed geodesic), and layer-stripped scattering
// through a known collar.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geodesic.hpp"
#include "metric.hpp"
#include "ode.hpp"

namespace lensrig {

// ---------------------------------------------------------------------------
// Orthogonal chart metric ds^2 = E du^2 + G dv^2 with first derivatives.
// Charts are chosen so the curve's limit set is a regular chart point: the
// Gaussian chart degenerates where alpha -> 0, so full-disk and cap models use
// Cartesian / stereographic coordinates instead.
// ---------------------------------------------------------------------------

struct ChartMetric {
  // returns {E, E_u, E_v, G, G_u, G_v}
  std::function<std::array<double, 6>(double, double)> eval;
};

inline ChartMetric euclidean_chart() {
  return {[](double, double) { return std::array<double, 6>{1, 0, 0, 1, 0, 0}; }};
}

// Unit sphere, stereographic projection: E = G = 4 / (1 + u^2 + v^2)^2.
inline ChartMetric stereographic_sphere_chart() {
  return {[](double u, double v) {
    const double q = 1.0 + u * u + v * v;
    const double f = 4.0 / (q * q);
    const double fu = -16.0 * u / (q * q * q);
    const double fv = -16.0 * v / (q * q * q);
    return std::array<double, 6>{f, fu, fv, f, fu, fv};
  }};
}

// Gaussian normal chart of a collar metric: E = 1, G = alpha^2.
inline ChartMetric gaussian_chart(const GaussianMetric& m) {
  auto base = m.alpha_eval;
  return {[base](double u, double v) {
    const AlphaJet a = base(u, v);
    return std::array<double, 6>{1, 0, 0, a.a * a.a, 2 * a.a * a.ax, 2 * a.a * a.ay};
  }};
}

// ---------------------------------------------------------------------------
// Closed polyline with an optional closure offset: node n equals node 0 plus
// `offset` (nonzero for curves wrapping a periodic coordinate).
// ---------------------------------------------------------------------------

struct ClosedCurve {
  std::vector<std::array<double, 2>> nodes;
  std::array<double, 2> offset{0.0, 0.0};

  std::array<double, 2> node_wrapped(int i) const {
    const int n = static_cast<int>(nodes.size());
    int k = i % n;
    double w = std::floor(static_cast<double>(i) / n);
    if (k < 0) k += n;
    return {nodes[k][0] + w * offset[0], nodes[k][1] + w * offset[1]};
  }
};

inline ClosedCurve circle_curve(double cx, double cy, double r, int n) {
  ClosedCurve c;
  c.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    c.nodes[i] = {cx + r * std::cos(a), cy + r * std::sin(a)};
  }
  return c;
}

inline double segment_length(const ChartMetric& g, const std::array<double, 2>& p,
                             const std::array<double, 2>& q) {
  const auto m = g.eval(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]));
  const double du = q[0] - p[0], dv = q[1] - p[1];
  return std::sqrt(m[0] * du * du + m[3] * dv * dv);
}

inline double curve_length(const ChartMetric& g, const ClosedCurve& c) {
  double len = 0.0;
  const int n = static_cast<int>(c.nodes.size());
  for (int i = 0; i < n; ++i) len += segment_length(g, c.node_wrapped(i), c.node_wrapped(i + 1));
  return len;
}

// Re-space to n nodes at uniform arc length (linear interpolation on segments).
inline ClosedCurve resample_uniform(const ChartMetric& g, const ClosedCurve& c, int n) {
  const int m = static_cast<int>(c.nodes.size());
  std::vector<double> cum(m + 1, 0.0);
  for (int i = 0; i < m; ++i)
    cum[i + 1] = cum[i] + segment_length(g, c.node_wrapped(i), c.node_wrapped(i + 1));
  const double total = cum[m];
  ClosedCurve out;
  out.offset = c.offset;
  out.nodes.resize(n);
  int seg = 0;
  for (int k = 0; k < n; ++k) {
    const double target = total * k / n;
    while (seg + 1 < m && cum[seg + 1] < target) ++seg;
    const double w = (cum[seg + 1] > cum[seg])
                         ? (target - cum[seg]) / (cum[seg + 1] - cum[seg])
                         : 0.0;
    const auto a = c.node_wrapped(seg), b = c.node_wrapped(seg + 1);
    out.nodes[k] = {a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrete geodesic curvature: covariant second derivative of the (assumed
// uniform) arc parametrization. accel points toward the concave side; the
// shortening flow moves each node by accel * dtau.
// ---------------------------------------------------------------------------

inline std::array<double, 2> covariant_accel(const ChartMetric& g, const ClosedCurve& c,
                                             int i, double h) {
  const auto pm = c.node_wrapped(i - 1), p0 = c.node_wrapped(i), pp = c.node_wrapped(i + 1);
  const double tu = (pp[0] - pm[0]) / (2 * h), tv = (pp[1] - pm[1]) / (2 * h);
  const double cu = (pp[0] - 2 * p0[0] + pm[0]) / (h * h);
  const double cv = (pp[1] - 2 * p0[1] + pm[1]) / (h * h);
  const auto m = g.eval(p0[0], p0[1]);
  const double E = m[0], Eu = m[1], Ev = m[2], G = m[3], Gu = m[4], Gv = m[5];
  // Christoffels of an orthogonal metric
  const double a_u = cu + (Eu / (2 * E)) * tu * tu + 2 * (Ev / (2 * E)) * tu * tv -
                     (Gu / (2 * E)) * tv * tv;
  const double a_v = cv - (Ev / (2 * G)) * tu * tu + 2 * (Gu / (2 * G)) * tu * tv +
                     (Gv / (2 * G)) * tv * tv;
  return {a_u, a_v};
}

inline std::vector<double> curvature_of_curve(const ChartMetric& g, const ClosedCurve& c) {
  const int n = static_cast<int>(c.nodes.size());
  if (n < 16) throw std::invalid_argument("curvature_of_curve: need >= 16 nodes");
  const double h = curve_length(g, c) / n;
  if (h <= 0.0) throw std::invalid_argument("curvature_of_curve: degenerate spacing");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const auto a = covariant_accel(g, c, i, h);
    const auto m = g.eval(c.nodes[i][0], c.nodes[i][1]);
    out[i] = std::sqrt(m[0] * a[0] * a[0] + m[3] * a[1] * a[1]);
  }
  return out;
}

inline ClosedCurve shorten_step(const ChartMetric& g, const ClosedCurve& c, double dtau) {
  const int n = static_cast<int>(c.nodes.size());
  const double h = curve_length(g, c) / n;
  if (dtau > 0.25 * h * h)
    throw std::invalid_argument("shorten_step: dtau exceeds the stability bound");
  ClosedCurve out;
  out.offset = c.offset;
  out.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto a = covariant_accel(g, c, i, h);
    out.nodes[i] = {c.nodes[i][0] + dtau * a[0], c.nodes[i][1] + dtau * a[1]};
  }
  return resample_uniform(g, out, n);
}

enum class FoliationKind { CollapsedToPoint, ClosedGeodesic, Budget };

struct FoliationOutcome {
  FoliationKind kind = FoliationKind::Budget;
  ClosedCurve final_curve;
  double tau_final = 0.0;
  long steps = 0;
};

struct EvolveOptions {
  double dtau = 1e-4;
  long max_steps = 2000000;
  double collapse_length = 1e-3;
  double geodesic_kappa = 1e-4;
  double geodesic_min_length = 1e-2;
};

inline FoliationOutcome evolve(const ChartMetric& g, ClosedCurve c,
                               const EvolveOptions& opt = {}) {
  FoliationOutcome out;
  double tau = 0.0;
  for (long step = 0; step < opt.max_steps; ++step) {
    const double len = curve_length(g, c);
    if (len < opt.collapse_length) {
      out.kind = FoliationKind::CollapsedToPoint;
      break;
    }
    const auto kap = curvature_of_curve(g, c);
    double kmax = 0.0;
    for (double k : kap) kmax = std::max(kmax, std::abs(k));
    if (kmax < opt.geodesic_kappa && len > opt.geodesic_min_length) {
      out.kind = FoliationKind::ClosedGeodesic;
      break;
    }
    const double h = len / static_cast<double>(c.nodes.size());
    const double dt = std::min(opt.dtau, 0.2 * h * h);
    c = shorten_step(g, c, dt);
    tau += dt;
    out.steps = step + 1;
  }
  out.final_curve = c;
  out.tau_final = tau;
  return out;
}

// ---------------------------------------------------------------------------
// Lens tables and layer-stripped scattering. A table stores, on a (y, theta)
// grid of inward entry states at a fixed boundary, the exit offset dy (y is
// kept unwrapped along the flow), the outgoing exit angle, and the length.
// ---------------------------------------------------------------------------

struct LensTable {
  std::vector<double> y_nodes;      // ascending
  std::vector<double> theta_nodes;  // ascending, inside (0, pi)
  std::vector<std::array<double, 3>> rec;  // [iy * nth + it]: {dy, theta_exit, length}

  const std::array<double, 3>& at(int iy, int it) const {
    return rec[iy * theta_nodes.size() + it];
  }
  // bilinear interpolation; false on extrapolation
  bool lookup(double y, double theta, std::array<double, 3>& out) const {
    auto bracket = [](const std::vector<double>& v, double x, int& i, double& w) {
      if (x < v.front() || x > v.back()) return false;
      i = static_cast<int>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) - 1;
      i = std::min(i, static_cast<int>(v.size()) - 2);
      w = (x - v[i]) / (v[i + 1] - v[i]);
      return true;
    };
    int iy, it;
    double wy, wt;
    if (!bracket(y_nodes, y, iy, wy) || !bracket(theta_nodes, theta, it, wt)) return false;
    for (int k = 0; k < 3; ++k) {
      const double lo = (1 - wy) * at(iy, it)[k] + wy * at(iy + 1, it)[k];
      const double hi = (1 - wy) * at(iy, it + 1)[k] + wy * at(iy + 1, it + 1)[k];
      out[k] = (1 - wt) * lo + wt * hi;
    }
    return true;
  }
};

inline LensTable build_lens_table(const GaussianMetric& m, const std::vector<double>& y_nodes,
                                  const std::vector<double>& theta_nodes,
                                  double step = kDefaultStep,
                                  std::optional<double> fold_x = std::nullopt) {
  LensTable t;
  t.y_nodes = y_nodes;
  t.theta_nodes = theta_nodes;
  t.rec.resize(y_nodes.size() * theta_nodes.size());
  for (size_t iy = 0; iy < y_nodes.size(); ++iy)
    for (size_t it = 0; it < theta_nodes.size(); ++it) {
      const LensRecord r = scattering(m, {0.0, y_nodes[iy], theta_nodes[it]}, step, fold_x);
      t.rec[iy * theta_nodes.size() + it] = {r.exit.y - r.entry.y, r.exit.theta, r.length};
    }
  return t;
}

// Flow from `s` until x crosses `x_target`; returns (state, length) with the
// crossing located by bisection. Throws if not reached before t_max.
inline std::pair<UnitBundleState, double> flow_to_x(const GaussianMetric& m,
                                                    const UnitBundleState& s, double x_target,
                                                    double step = kDefaultStep,
                                                    double t_max = -1.0) {
  if (t_max <= 0.0) t_max = 50.0 * m.diameter();
  auto rhs = [&m](const State<3>& u) { return detail::spray_rhs(m, u); };
  State<3> u{s.x, s.y, s.theta};
  double t = 0.0;
  const double side = (s.x > x_target) ? 1.0 : -1.0;  // sign of (x - target) now
  while (t < t_max) {
    const State<3> next = rk4_step<3>(rhs, u, step);
    if (side * (next[0] - x_target) <= 0.0) {
      auto restart = [&](double dt) { return rk4_step<3>(rhs, u, dt); };
      double lo = 0.0, hi = step;
      for (int it = 0; it < 200 && (hi - lo) > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (side * (restart(mid)[0] - x_target) > 0.0 ? lo : hi) = mid;
      }
      const double dt = 0.5 * (lo + hi);
      const State<3> w = restart(dt);
      return {{w[0], w[1], w[2]}, t + dt};
    }
    u = next;
    t += step;
  }
  throw std::runtime_error("flow_to_x: target depth not reached");
}

// Collar sub-chart: the same geometry re-based at depth d (x' = x - d).
inline GaussianMetric collar_subchart(const GaussianMetric& m, double d) {
  GaussianMetric out = m;
  auto base = m.alpha_eval;
  out.alpha_eval = [base, d](double x, double y) { return base(x + d, y); };
  out.x_min = m.x_min - d;
  out.x_max = m.x_max - d;
  out.eps1 = m.eps1;  // collar parameters keep their meaning near the new boundary
  out.name = m.name + "@depth";
  return out;
}

inline double reverse_angle(double theta) { return theta + M_PI; }

struct StripResult {
  LensTable table;   // records on the inner boundary grid
  int skipped = 0;   // near-tangential or out-of-table entries
};

// Propagate outer-boundary lens records to the boundary at depth d through a
// collar where the metric is known. For each inner inward entry state: trace
// backward through the collar to the outer boundary, look up the outer record,
// trace the exit leg forward through the collar, compose lengths.
inline StripResult layer_strip_scattering(const GaussianMetric& m, const LensTable& outer,
                                          double d, const std::vector<double>& y_nodes,
                                          const std::vector<double>& theta_nodes,
                                          double step = kDefaultStep) {
  StripResult out;
  out.table.y_nodes = y_nodes;
  out.table.theta_nodes = theta_nodes;
  out.table.rec.assign(y_nodes.size() * theta_nodes.size(),
                       {std::nan(""), std::nan(""), std::nan("")});
  for (size_t iy = 0; iy < y_nodes.size(); ++iy)
    for (size_t it = 0; it < theta_nodes.size(); ++it) {
      const double y = y_nodes[iy], th = theta_nodes[it];
      auto& rec = out.table.rec[iy * theta_nodes.size() + it];
      if (d == 0.0) {  // zero-width collar: identity on records
        std::array<double, 3> r;
        if (!outer.lookup(y, th, r)) {
          ++out.skipped;
          continue;
        }
        rec = r;
        continue;
      }
      try {
        // entry leg, reversed: from (d, y, th + pi) down to x = 0
        const auto [s0, L1] = flow_to_x(m, {d, y, reverse_angle(th)}, 0.0, step);
        // principal inward angle at the outer boundary
        double th0 = std::remainder(reverse_angle(s0.theta), 2.0 * M_PI);
        std::array<double, 3> r;
        if (!outer.lookup(std::remainder(s0.y, 2.0 * M_PI), th0, r)) {
          ++out.skipped;
          continue;
        }
        // exit leg: reverse the outer exit state and flow back in to depth d
        const double y1 = s0.y + r[0];
        const auto [s2, L2] =
            flow_to_x(m, {0.0, y1, reverse_angle(r[1])}, d, step);
        rec = {s2.y - y, reverse_angle(s2.theta), r[2] - L1 - L2};
        // keep the exit angle in (-pi, pi]
        rec[1] = std::remainder(rec[1], 2.0 * M_PI);
      } catch (const std::exception&) {
        ++out.skipped;
      }
    }
  return out;
}

}  // namespace lensrig
