#pragma once

// Thermostat-domain machinery: the transport field V0 on (x, y, theta) and its
// space-time lift -d/dt + V0, flow curves mu with boundary hitting times, the
// z-lambda coordinate and its sublevel domains, the flux lower bound, the
// inverse of V0 along flow curves, and a Hardy-type inequality spot check.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "front.hpp"  // ScalarField
#include "geodesic.hpp"
#include "metric.hpp"
#include "ode.hpp"

namespace lensrig {

// z_lambda(x, y, theta) = (min(1/2, sin theta) + 1/2)(x - lambda) + lambda/2.
inline double z_lambda(double lambda, double x, double theta) {
  return (std::min(0.5, std::sin(theta)) + 0.5) * (x - lambda) + 0.5 * lambda;
}

// Gradient in (x, y, theta); one-sided branch value at the seam sin theta = 1/2.
inline std::array<double, 3> z_lambda_grad(double lambda, double x, double theta) {
  const double st = std::sin(theta);
  if (st < 0.5) return {st + 0.5, 0.0, std::cos(theta) * (x - lambda)};
  return {1.0, 0.0, 0.0};
}

struct ZDomain {
  double lambda = 0.1;
  double z_star = 0.01;
  bool contains(const GaussianMetric& m, double x, double y, double theta) const {
    if (x < 0.0 || x > m.eps1 || y < -m.delta1 || y > m.delta1) return false;
    if (theta < 0.0 || theta > M_PI) return false;
    return z_lambda(lambda, x, theta) < z_star;
  }
};

// V0 in (x, y, theta) components.
inline std::array<double, 3> v0_field(const GaussianMetric& m, double x, double y,
                                      double theta) {
  const AlphaJet a = m.alpha_eval(x, y);
  return {std::sin(theta), std::cos(theta) / a.a, (a.ax / a.a) * std::cos(theta)};
}

// ---------------------------------------------------------------------------
// Flow curves mu(s) of -(-d/dt + V0): spatial drift -V0, unit drift in t.
// Integrated until the spatial projection hits Gamma = {x = 0}.
// ---------------------------------------------------------------------------

struct FlowPath {
  std::vector<double> s;                      // flow parameter
  std::vector<std::array<double, 4>> state;   // (x, y, theta, t)
  double hit_s = 0.0;
  std::array<double, 4> hit_state{};
};

// Sup of alpha0 over the small collar domain, for the hitting-time bound.
inline double alpha_sup(const GaussianMetric& m, int n = 41) {
  double sup = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double x = m.eps1 * i / (n - 1.0);
      const double y = -m.delta1 + 2.0 * m.delta1 * k / (n - 1.0);
      sup = std::max(sup, m.alpha_eval(x, y).a);
    }
  return sup;
}

inline double hit_bound(const GaussianMetric& m) {
  return 2.0 * std::max(1.0, alpha_sup(m)) * (m.eps1 + 2.0 * m.delta1);
}

inline FlowPath mu_flow(const GaussianMetric& m, double x, double y, double theta,
                        double t0 = 0.0, double step = kDefaultStep) {
  auto rhs = [&m](const State<4>& u) {
    const auto v = v0_field(m, u[0], u[1], u[2]);
    return State<4>{-v[0], -v[1], -v[2], 1.0};
  };
  FlowPath path;
  const double s_max = 4.0 * hit_bound(m);
  State<4> u{x, y, theta, t0};
  double s = 0.0;
  path.s.push_back(0.0);
  path.state.push_back({u[0], u[1], u[2], u[3]});
  while (s < s_max) {
    const State<4> next = rk4_step<4>(rhs, u, step);
    if (next[0] <= 0.0) {  // bracketed the Gamma hit; bisect on the sub-step
      auto restart = [&](double ds) { return rk4_step<4>(rhs, u, ds); };
      double lo = 0.0, hi = step;
      for (int it = 0; it < 200 && (hi - lo) > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (restart(mid)[0] > 0.0 ? lo : hi) = mid;
      }
      const double ds = 0.5 * (lo + hi);
      path.hit_s = s + ds;
      const State<4> w = restart(ds);
      path.hit_state = {w[0], w[1], w[2], w[3]};
      path.s.push_back(path.hit_s);
      path.state.push_back(path.hit_state);
      return path;
    }
    u = next;
    s += step;
    path.s.push_back(s);
    path.state.push_back({u[0], u[1], u[2], u[3]});
  }
  throw std::runtime_error("mu_flow: no boundary hit within 4x the bound");
}

// ---------------------------------------------------------------------------
// Flux lower bound: <grad z_lambda, V0> >= rho_tilde on D_lambda(z_star), where
// rho_tilde = 1/4 on theta in [pi/6, 5pi/6] and (3/16) c0 lambda + sin(theta)/2
// otherwise, with c0 = inf(-kappa) over the collar domain.
// ---------------------------------------------------------------------------

struct FluxReport {
  double min_margin = 0.0;          // min of flux - rho_tilde over samples
  std::array<double, 3> witness{};  // argmin sample
  int samples_in_domain = 0;
  int violations = 0;
  double c0 = 0.0;
  bool pass() const { return violations == 0 && min_margin >= -1e-12; }
};

inline double kappa_inf_bound(const GaussianMetric& m, int n = 41) {
  double c0 = 1e300;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double x = m.eps1 * i / (n - 1.0);
      const double y = -m.delta1 + 2.0 * m.delta1 * k / (n - 1.0);
      const AlphaJet a = m.alpha_eval(x, y);
      c0 = std::min(c0, -(a.ax / a.a));
    }
  return c0;
}

inline FluxReport flux_lower_bound_check(const GaussianMetric& m, const ZDomain& dom,
                                         int n_samples = 10000, unsigned seed = 1) {
  if (dom.z_star > dom.lambda / 8.0 + 1e-15)
    throw std::invalid_argument("flux_lower_bound_check: need z_star <= lambda/8");
  FluxReport rep;
  rep.c0 = kappa_inf_bound(m);
  if (rep.c0 <= 0.0)
    throw std::invalid_argument("flux_lower_bound_check: collar not strictly convex");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1),
      uth(0.0, M_PI);
  rep.min_margin = 1e300;
  while (rep.samples_in_domain < n_samples) {
    const double x = ux(rng), y = uy(rng), th = uth(rng);
    if (std::abs(std::sin(th) - 0.5) < 1e-12) continue;  // seam: measure zero
    if (!dom.contains(m, x, y, th)) continue;
    ++rep.samples_in_domain;
    const auto gz = z_lambda_grad(dom.lambda, x, th);
    const auto v = v0_field(m, x, y, th);
    const double flux = gz[0] * v[0] + gz[1] * v[1] + gz[2] * v[2];
    const double st = std::sin(th);
    const double rho = (th >= M_PI / 6.0 && th <= 5.0 * M_PI / 6.0)
                           ? 0.25
                           : (3.0 / 16.0) * rep.c0 * dom.lambda + 0.5 * st;
    const double margin = flux - rho;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.witness = {x, y, th};
    }
    if (margin < -1e-12) ++rep.violations;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Inverse of V0 along flow curves: (v0_inverse f)(p) = int_0^s_hat f(mu_p(s)) ds
// by trapezoid at the flow step. Satisfies V0 [v0_inverse f] = f at interior
// points and vanishes on Gamma.
// ---------------------------------------------------------------------------

inline double v0_inverse(const GaussianMetric& m,
                         const std::function<double(double, double, double)>& f, double x,
                         double y, double theta, double step = kDefaultStep) {
  const FlowPath path = mu_flow(m, x, y, theta, 0.0, step);
  double acc = 0.0;
  for (size_t i = 0; i + 1 < path.s.size(); ++i) {
    const auto& a = path.state[i];
    const auto& b = path.state[i + 1];
    acc += 0.5 * (path.s[i + 1] - path.s[i]) * (f(a[0], a[1], a[2]) + f(b[0], b[1], b[2]));
  }
  return acc;
}

// V0 applied to a numerically-defined function by central differences.
inline double v0_apply_fd(const GaussianMetric& m,
                          const std::function<double(double, double, double)>& u, double x,
                          double y, double theta, double h = 1e-4) {
  const auto v = v0_field(m, x, y, theta);
  const double dx = (u(x + h, y, theta) - u(x - h, y, theta)) / (2 * h);
  const double dy = (u(x, y + h, theta) - u(x, y - h, theta)) / (2 * h);
  const double dth = (u(x, y, theta + h) - u(x, y, theta - h)) / (2 * h);
  return v[0] * dx + v[1] * dy + v[2] * dth;
}

// ---------------------------------------------------------------------------
// Hardy-type inequality spot check over D_lambda(z_star) with the operator
//   D f = [V0 + P(x,y,theta)/sin(theta)] f
// and weight sin^{2a}(theta):
//   (i)  int |f|^2 sin^{2a}        <= C(a)  int |Df|^2 sin^{2(a+1)}
//   (ii) int |f|^2 sin^{2(a+s)}    <= C'(a) (z_star + lambda/2)^s int |Df|^2 sin^{2(a+1)}
// Quadrature: midpoint sum over a box grid, volume element alpha dx dy dtheta.
// This is a sanity probe with manufactured f; constants are fitted, not
// asserted against any closed form.
// ---------------------------------------------------------------------------

inline double hardy_a_star(double c0, double c1, double C0, double p_norm) {
  return (8.0 / (3.0 * c0)) * (1.0 + c1 + C0 + 2.0 * p_norm);
}

struct HardyResult {
  double lhs = 0.0;
  double rhs = 0.0;   // without any constant: the raw weighted integrals
  double ratio = 0.0; // lhs / rhs
  bool degenerate = false;
};

// f supplies value and (x, y, theta) gradient; P bounded (may be zero).
inline HardyResult hardy_spot_check(const GaussianMetric& m, const ZDomain& dom, double a,
                                    const ScalarField& f,
                                    const std::function<double(double, double, double)>& P,
                                    double s = 0.0, int nx = 48, int ny = 16,
                                    int ntheta = 96) {
  HardyResult out;
  const double hx = m.eps1 / nx, hy = 2.0 * m.delta1 / ny, ht = M_PI / ntheta;
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < ny; ++k)
      for (int j = 0; j < ntheta; ++j) {
        const double x = (i + 0.5) * hx;
        const double y = -m.delta1 + (k + 0.5) * hy;
        const double th = (j + 0.5) * ht;
        if (!dom.contains(m, x, y, th)) continue;
        const double st = std::sin(th);
        const AlphaJet aj = m.alpha_eval(x, y);
        const double w = aj.a * hx * hy * ht;  // volume element
        const double fv = f.value(x, y, th);
        const auto gr = f.grad(x, y, th);
        const auto v = v0_field(m, x, y, th);
        const double Df =
            v[0] * gr[0] + v[1] * gr[1] + v[2] * gr[2] + P(x, y, th) / st * fv;
        out.lhs += w * fv * fv * std::pow(st, 2.0 * (a + s));
        out.rhs += w * Df * Df * std::pow(st, 2.0 * (a + 1.0));
      }
  if (out.rhs == 0.0) {
    out.degenerate = true;
    return out;
  }
  out.ratio = out.lhs / out.rhs;
  return out;
}

}  // namespace lensrig
