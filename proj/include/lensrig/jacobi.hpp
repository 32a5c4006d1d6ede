#pragma once

// Jacobi fields along geodesics: perp'' + G(gamma(t))*perp = 0, integrated in
// lockstep with the carrying geodesic. Canonical frame (J, Y, X, B) initial
// data, symplectic (Wronskian) products, and the Jac curvature-field solver.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "geodesic.hpp"
#include "metric.hpp"
#include "ode.hpp"

namespace lensrig {

struct JacobiPair {
  double perp = 0.0;
  double perp_dot = 0.0;
  double par = 0.0;
  double par_dot = 0.0;  // always 0 for the canonical frame; par then constant
};

// Wronskian {a,b} = a_dot*b - a*b_dot, constant along a geodesic.
inline double symplectic(const JacobiPair& a, const JacobiPair& b) {
  return a.perp_dot * b.perp - a.perp * b.perp_dot;
}

struct CanonicalFrame {
  JacobiPair J, Y, X, B;
};

// Initial values at t=0 for base point (x,y,theta), kappa = alpha_x/alpha:
//   J(0)=1, J'(0)=0;  Y(0)=alpha*sin(theta), Y'(0)=kappa*alpha, Y_par=alpha*cos(theta);
//   X(0)=-cos(theta), X'(0)=0, X_par=sin(theta);  B(0)=0, B'(0)=-1.
inline CanonicalFrame standard_frame(const GaussianMetric& m, double x, double y,
                                     double theta) {
  const AlphaJet j = m.eval(x, y);
  const double kap = j.ax / j.a;
  CanonicalFrame f;
  f.J = {1.0, 0.0, 0.0, 0.0};
  f.Y = {j.a * std::sin(theta), kap * j.a, j.a * std::cos(theta), 0.0};
  f.X = {-std::cos(theta), 0.0, std::sin(theta), 0.0};
  f.B = {0.0, -1.0, 0.0, 0.0};
  return f;
}

struct JacobiTrack {
  std::vector<double> t;
  std::vector<JacobiPair> p;
  bool truncated = false;  // geodesic left the chart before |T|
};

// Integrate one Jacobi pair along the geodesic from start for signed time T.
inline JacobiTrack jacobi_integrate(const GaussianMetric& m, const UnitBundleState& start,
                                    const JacobiPair& init, double T,
                                    double step = kDefaultStep) {
  auto rhs = [&m](const State<5>& u) {
    State<3> g{u[0], u[1], u[2]};
    const State<3> dg = detail::spray_rhs(m, g);
    const AlphaJet j = m.alpha_eval(u[0], u[1]);
    const double G = -j.axx / j.a;
    return State<5>{dg[0], dg[1], dg[2], u[4], -G * u[3]};
  };
  JacobiTrack track;
  State<5> u{start.x, start.y, start.theta, init.perp, init.perp_dot};
  try {
    rk4_integrate<5>(rhs, u, T, step, [&](double t, const State<5>& v) {
      if (!m.in_domain(v[0], v[1])) throw std::domain_error("left chart");
      track.t.push_back(t);
      track.p.push_back({v[3], v[4], init.par, 0.0});
    });
  } catch (const std::domain_error&) {
    track.truncated = true;
  }
  return track;
}

// ---------------------------------------------------------------------------
// Full frame transport: geodesic + (J, Y, B, X) perp pairs in one state.
// ---------------------------------------------------------------------------

struct FrameState {
  UnitBundleState s{};
  double J = 1.0, Jd = 0.0;
  double Y = 0.0, Yd = 0.0;
  double B = 0.0, Bd = 0.0;
  double X = 0.0, Xd = 0.0;
};

namespace detail {
inline State<11> frame_pack(const FrameState& f) {
  return {f.s.x, f.s.y, f.s.theta, f.J, f.Jd, f.Y, f.Yd, f.B, f.Bd, f.X, f.Xd};
}
inline FrameState frame_unpack(const State<11>& u) {
  return {{u[0], u[1], u[2]}, u[3], u[4], u[5], u[6], u[7], u[8], u[9], u[10]};
}
}  // namespace detail

// Canonical frame at (x,y,theta) transported to time t along the geodesic.
// observe (optional) sees every accepted step.
inline FrameState frame_flow(const GaussianMetric& m, double x, double y, double theta,
                             double t, double step = kDefaultStep,
                             const std::function<void(double, const FrameState&)>& observe = {}) {
  auto rhs = [&m](const State<11>& u) {
    State<3> g{u[0], u[1], u[2]};
    const State<3> dg = detail::spray_rhs(m, g);
    const AlphaJet aj = m.alpha_eval(u[0], u[1]);
    const double G = -aj.axx / aj.a;
    return State<11>{dg[0], dg[1], dg[2], u[4],  -G * u[3], u[6], -G * u[5],
                     u[8],  -G * u[7], u[10], -G * u[9]};
  };
  const CanonicalFrame cf = standard_frame(m, x, y, theta);
  FrameState f0;
  f0.s = {x, y, theta};
  f0.J = cf.J.perp;
  f0.Jd = cf.J.perp_dot;
  f0.Y = cf.Y.perp;
  f0.Yd = cf.Y.perp_dot;
  f0.B = cf.B.perp;
  f0.Bd = cf.B.perp_dot;
  f0.X = cf.X.perp;
  f0.Xd = cf.X.perp_dot;
  std::function<void(double, const State<11>&)> obs;
  if (observe)
    obs = [&observe](double tt, const State<11>& u) { observe(tt, detail::frame_unpack(u)); };
  const State<11> uf = rk4_integrate<11>(rhs, detail::frame_pack(f0), t, step, obs);
  return detail::frame_unpack(uf);
}

// ---------------------------------------------------------------------------
// Jac operator: solve b'' + Gk(x+t, y) b = 0 with b(0)=0, b'(0)=-1 backward to
// t=-x, where Gk = -(dx(kappa) + kappa^2) is built from a kappa field alone.
// ---------------------------------------------------------------------------

// kappa_field(x,y) -> {kappa, dx(kappa)}
using KappaField = std::function<std::array<double, 2>(double, double)>;

inline std::pair<double, double> jac_solve(const KappaField& kf, double x, double y,
                                           double step = kDefaultStep,
                                           const std::function<void(double, double, double)>& observe = {}) {
  // State (b, b_dot) as a function of t, with the potential evaluated at x+t.
  // Carry t inside the state so rk4 stage evaluations use the right argument.
  auto f = [&kf, x, y](const State<3>& u) {
    const auto kk = kf(x + u[2], y);
    const double Gk = -(kk[1] + kk[0] * kk[0]);
    return State<3>{u[1], -Gk * u[0], 1.0};
  };
  State<3> u{0.0, -1.0, 0.0};
  std::function<void(double, const State<3>&)> obs;
  if (observe) obs = [&observe](double t, const State<3>& v) { observe(t, v[0], v[1]); };
  u = rk4_integrate<3>(f, u, -x, step, obs);
  return {u[0], u[1]};
}

// Curvature field of a metric packaged for jac_solve.
inline KappaField kappa_field_of(const GaussianMetric& m) {
  return [&m](double x, double y) {
    const AlphaJet j = m.alpha_eval(x, y);
    const double k = j.ax / j.a;
    return std::array<double, 2>{k, j.axx / j.a - k * k};
  };
}

// Residual of J = Y/(alpha*sin(theta)) + kappa*B/sin(theta) at (x,y,theta,t).
inline double j_relation_residual(const GaussianMetric& m, double x, double y, double theta,
                                  double t, double step = kDefaultStep) {
  if (std::abs(std::sin(theta)) <= 1e-3)
    throw std::invalid_argument("j_relation_residual: sin(theta) too small");
  const FrameState f = frame_flow(m, x, y, theta, t, step);
  const AlphaJet j = m.eval(x, y);
  const double kap = j.ax / j.a;
  return f.J - f.Y / (j.a * std::sin(theta)) - kap * f.B / std::sin(theta);
}

}  // namespace lensrig
