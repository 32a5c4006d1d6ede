#pragma once

// Geodesic flow on the unit circle bundle in Gaussian-polar coordinates
// (x, y, theta), theta = pi/2 pointing along d/dx:
//   x' = sin(theta),  y' = cos(theta)/alpha,  theta' = kappa*cos(theta).
// Arc-length parametrization is exact by construction. Includes boundary-exit
// detection, the length/scattering maps, and the extended scattering operator.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "metric.hpp"
#include "ode.hpp"

namespace lensrig {

struct UnitBundleState {
  double x{}, y{}, theta{};
};

// Ambient components of the direction xi(theta) in the chart frame (d/dx, d/dy).
inline std::pair<double, double> polar_dir(const GaussianMetric& m, double x, double y,
                                           double theta) {
  return {std::sin(theta), std::cos(theta) / m.alpha(x, y)};
}

namespace detail {
// Spray right-hand side. Exact-radial guard: when cos(theta) is exactly 0 the
// theta and y rates vanish identically, so the chart fold point (alpha = 0) on
// polar models is never divided by.
inline State<3> spray_rhs(const GaussianMetric& m, const State<3>& s) {
  const double c = std::cos(s[2]);
  State<3> d;
  d[0] = std::sin(s[2]);
  if (std::abs(c) < 1e-13) {
    d[1] = 0.0;
    d[2] = 0.0;
    return d;
  }
  const AlphaJet j = m.alpha_eval(s[0], s[1]);
  d[1] = c / j.a;
  d[2] = (j.ax / j.a) * c;
  return d;
}
}  // namespace detail

constexpr double kDefaultStep = 1e-3;

// Flow for signed arc length t. Throws if the trajectory leaves the chart.
inline UnitBundleState flow(const GaussianMetric& m, const UnitBundleState& s, double t,
                            double step = kDefaultStep) {
  auto rhs = [&m](const State<3>& u) { return detail::spray_rhs(m, u); };
  State<3> u{s.x, s.y, s.theta};
  u = rk4_integrate<3>(rhs, u, t, step, [&m](double, const State<3>& v) {
    if (!m.in_domain(v[0], v[1])) throw std::domain_error("flow: trajectory left the chart");
  });
  return {u[0], u[1], u[2]};
}

enum class Boundary { X0, XMax, YMin, YMax, None };

inline std::string boundary_name(Boundary b) {
  switch (b) {
    case Boundary::X0: return "x=0";
    case Boundary::XMax: return "x=eps0";
    case Boundary::YMin: return "y=-delta0";
    case Boundary::YMax: return "y=+delta0";
    default: return "none";
  }
}

struct ExitResult {
  bool exited = false;  // false => NotExited within the horizon (trapping indicator)
  double length = 0.0;
  Boundary boundary = Boundary::None;
  UnitBundleState state{};
};

// First boundary-crossing time of the forward geodesic from s, located by
// sign-change bracketing at the integration step followed by bisection to
// |dt| < 1e-10. Faces checked: x=0, x=x_max, and y=+/-delta0 when not periodic.
inline ExitResult exit_time(const GaussianMetric& m, const UnitBundleState& s,
                            double t_max = -1.0, double step = kDefaultStep) {
  if (t_max <= 0) t_max = 50.0 * m.diameter();
  auto rhs = [&m](const State<3>& u) { return detail::spray_rhs(m, u); };

  // Signed distances to the exit faces; positive inside.
  std::vector<std::pair<Boundary, std::function<double(const State<3>&)>>> faces;
  faces.emplace_back(Boundary::X0, [](const State<3>& u) { return u[0]; });
  faces.emplace_back(Boundary::XMax, [&m](const State<3>& u) { return m.x_max - u[0]; });
  if (!m.y_periodic) {
    faces.emplace_back(Boundary::YMin, [&m](const State<3>& u) { return u[1] - m.y_min; });
    faces.emplace_back(Boundary::YMax, [&m](const State<3>& u) { return m.y_max - u[1]; });
  }

  State<3> u{s.x, s.y, s.theta};
  double t = 0.0;
  // If starting on a face moving inward, allow the first steps to move off it.
  while (t < t_max) {
    const double h = std::min(step, t_max - t);
    const State<3> u_next = rk4_step(rhs, u, h);
    for (auto& [b, g] : faces) {
      if (g(u) > 0.0 && g(u_next) <= 0.0) {
        const State<3> u_base = u;
        auto restart = [&](double dt) { return dt == 0.0 ? u_base : rk4_step(rhs, u_base, dt); };
        const auto& gf = g;
        const double dt = bisect_event<3>(restart, gf, 0.0, h, 1e-12);
        const State<3> ue = rk4_step(rhs, u_base, dt);
        return {true, t + dt, b, {ue[0], ue[1], ue[2]}};
      }
    }
    u = u_next;
    t += h;
  }
  return {};  // NotExited
}

struct LensRecord {
  UnitBundleState entry{};  // on x=0, sin(theta) > 0 (inward)
  UnitBundleState exit{};   // folded to the physical chart on polar models
  double length = 0.0;
  Boundary boundary = Boundary::None;
  bool exited = false;
};

// Fold a far-sheet state of a polar chart (x > fold) back to the physical sheet.
inline UnitBundleState fold_polar(const UnitBundleState& s, double fold_x) {
  return {2.0 * fold_x - s.x, s.y + M_PI, s.theta - M_PI};
}

inline LensRecord scattering(const GaussianMetric& m, const UnitBundleState& entry,
                             double step = kDefaultStep,
                             std::optional<double> fold_x = std::nullopt) {
  if (std::abs(entry.x) > 1e-12 || std::sin(entry.theta) <= 0.0)
    throw std::invalid_argument("scattering: entry must lie on x=0 with sin(theta)>0");
  LensRecord rec;
  rec.entry = entry;
  const ExitResult e = exit_time(m, entry, -1.0, step);
  rec.exited = e.exited;
  if (!e.exited) return rec;
  rec.length = e.length;
  rec.boundary = e.boundary;
  rec.exit = e.state;
  if (fold_x && e.boundary == Boundary::XMax) {
    rec.exit = fold_polar(e.state, *fold_x);
    rec.boundary = Boundary::X0;
  }
  return rec;
}

// Inward fan from boundary point y0: theta_k = k*(pi/2)/n, k = 1..n.
inline std::vector<LensRecord> lens_fan(const GaussianMetric& m, int n, double y0 = 0.0,
                                        double step = kDefaultStep,
                                        std::optional<double> fold_x = std::nullopt) {
  std::vector<LensRecord> out;
  out.reserve(n);
  for (int k = 1; k <= n; ++k) {
    const double theta = (M_PI / 2.0) * static_cast<double>(k) / n;
    out.push_back(scattering(m, {0.0, y0, theta}, step, fold_x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extended scattering: flow restricted to the known region.
// ---------------------------------------------------------------------------

enum class Region { Known, Unknown, Outside };

struct RegionMask {
  std::function<Region(double, double)> classify;
  Region operator()(double x, double y) const { return classify(x, y); }
};

// Collar mask: known for x <= depth (including the extension side x < 0),
// unknown for interior x > depth, outside past the chart edges.
inline RegionMask collar_mask(const GaussianMetric& m, double depth) {
  return {[&m, depth](double x, double y) {
    if (!m.in_domain(x, y)) return Region::Outside;
    return x <= depth + 1e-12 ? Region::Known : Region::Unknown;
  }};
}

struct ExtendedScatter {
  bool absorbed = true;
  UnitBundleState state{};
};

// E_t(s) when the endpoint lies in the known region and the path never leaves
// the chart; Absorbed otherwise (the operator's empty-set branch).
inline ExtendedScatter extended_scattering(const GaussianMetric& m, const RegionMask& mask,
                                           const UnitBundleState& s, double t,
                                           double step = kDefaultStep) {
  auto rhs = [&m](const State<3>& u) { return detail::spray_rhs(m, u); };
  State<3> u{s.x, s.y, s.theta};
  bool left = false;
  try {
    u = rk4_integrate<3>(rhs, u, t, step, [&](double, const State<3>& v) {
      if (mask(v[0], v[1]) == Region::Outside) left = true;
    });
  } catch (const std::domain_error&) {
    return {};
  }
  if (left) return {};
  if (mask(u[0], u[1]) != Region::Known) return {};
  return {false, {u[0], u[1], u[2]}};
}

// ---------------------------------------------------------------------------
// Ambient second-order integrator (spray-equivalence oracle for tests):
// x'' = alpha*alpha_x*(y')^2,  y'' = -2(alpha_x/alpha)x'y' - (alpha_y/alpha)(y')^2.
// ---------------------------------------------------------------------------

inline State<4> ambient_flow(const GaussianMetric& m, const State<4>& s0, double t,
                             double step = kDefaultStep) {
  auto rhs = [&m](const State<4>& u) {
    const AlphaJet j = m.alpha_eval(u[0], u[1]);
    State<4> d;
    d[0] = u[2];
    d[1] = u[3];
    d[2] = j.a * j.ax * u[3] * u[3];
    d[3] = -2.0 * (j.ax / j.a) * u[2] * u[3] - (j.ay / j.a) * u[3] * u[3];
    return d;
  };
  return rk4_integrate<4>(rhs, s0, t, step);
}

}  // namespace lensrig
