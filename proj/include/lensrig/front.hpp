#pragma once

// Circle-front families Psi(x,y,theta,t): the Gaussian-polar directions flowed
// by geodesic flow, with the transported Jacobi frame at each node. Verifies
// the parameter-derivative (evolution) formulas, the pseudo-circle-front
// conditions, lens agreement, and the transport/commutator identities.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "geodesic.hpp"
#include "jacobi.hpp"
#include "metric.hpp"

namespace lensrig {

struct GridSpec {
  int nx = 21, ny = 21, ntheta = 65;  // ntheta odd => exact pi/2 node
  double T = 0.5;
};

struct FrontFamily {
  const GaussianMetric* m = nullptr;  // geometry whose flow built the family
  GridSpec grid;
  double t_eval = -0.5;                 // slice time of the cached frames
  std::vector<FrameState> at_eval;      // node-major: ((ix*ny)+iy)*ntheta + ith
  std::vector<std::uint8_t> flagged;    // flow left the chart
  // Associated parameter fields (alpha with x-derivative, kappa with dx kappa).
  std::function<AlphaJet(double, double)> assoc_alpha;
  KappaField assoc_kappa;

  double node_x(int i) const { return m->eps1 * i / (grid.nx - 1); }
  double node_y(int k) const { return -m->delta1 + 2.0 * m->delta1 * k / (grid.ny - 1); }
  double node_theta(int j) const { return M_PI * j / (grid.ntheta - 1); }
  int index(int i, int k, int j) const { return (i * grid.ny + k) * grid.ntheta + j; }
};

inline FrontFamily build_front_family(const GaussianMetric& m, const GridSpec& g,
                                      double step = kDefaultStep) {
  FrontFamily fam;
  fam.m = &m;
  fam.grid = g;
  fam.t_eval = -g.T;
  fam.at_eval.resize(static_cast<size_t>(g.nx) * g.ny * g.ntheta);
  fam.flagged.assign(fam.at_eval.size(), 0);
  fam.assoc_alpha = m.alpha_eval;
  fam.assoc_kappa = kappa_field_of(m);
  for (int i = 0; i < g.nx; ++i)
    for (int k = 0; k < g.ny; ++k)
      for (int j = 0; j < g.ntheta; ++j) {
        const int idx = fam.index(i, k, j);
        try {
          fam.at_eval[idx] =
              frame_flow(m, fam.node_x(i), fam.node_y(k), fam.node_theta(j), -g.T, step);
        } catch (const std::domain_error&) {
          fam.flagged[idx] = 1;
        }
      }
  return fam;
}

// ---------------------------------------------------------------------------
// Finite-difference crosscheck of the evolution formulas at one point:
//   dPsi1/dx  = sin(th) Psi2 - cos(th) J R,   <grad_x Psi2, R> = -cos(th) J'
//   dPsi1/dy  = cos(th) a Psi2 + Y R,         <grad_y Psi2, R> = Y'
//   dPsi1/dth = B R,                          <grad_th Psi2, R> = B'
// Direction projections use <grad_v Psi2, R Psi2> = -dphi(v) + kappa*alpha*dy(v)
// (connection form of the orthonormal frame (d/dx, alpha^-1 d/dy)).
// ---------------------------------------------------------------------------

struct EvolutionResidual {
  double pos_psi2 = 0.0;   // worst tangential (parallel) component residual
  double pos_rpsi2 = 0.0;  // worst normal component residual
  double dir = 0.0;        // worst direction-derivative residual
  double conormal = 0.0;   // |<dPsi1/dth, Psi2>|
  double max() const { return std::max(std::max(pos_psi2, pos_rpsi2), dir); }
};

inline EvolutionResidual fd_jacobi_crosscheck_at(const GaussianMetric& m, double x, double y,
                                                 double theta, double t, double h = 1e-4,
                                                 double step = kDefaultStep) {
  const FrameState f = frame_flow(m, x, y, theta, t, step);
  const double phi = f.s.theta;
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const AlphaJet ja = m.alpha_eval(f.s.x, f.s.y);  // at Psi1
  const AlphaJet j0 = m.alpha_eval(x, y);          // at the base point
  const double st = std::sin(theta), ct = std::cos(theta);

  struct Var {
    double dx, dy, dth;  // parameter offsets
    double e_psi2, e_rpsi2, e_dir;
  };
  const Var vars[3] = {
      {1, 0, 0, st, -ct * f.J, -ct * f.Jd},
      {0, 1, 0, ct * j0.a, f.Y, f.Yd},
      {0, 0, 1, 0.0, f.B, f.Bd},
  };
  EvolutionResidual r;
  for (const Var& v : vars) {
    const auto sp = flow(m, {x + v.dx * h, y + v.dy * h, theta + v.dth * h}, t, step);
    const auto sm = flow(m, {x - v.dx * h, y - v.dy * h, theta - v.dth * h}, t, step);
    const double dX = (sp.x - sm.x) / (2 * h);
    const double dY = (sp.y - sm.y) / (2 * h);
    const double dPhi = (sp.theta - sm.theta) / (2 * h);
    // position derivative in the orthonormal frame at Psi1
    const double w1 = dX, w2 = ja.a * dY;
    const double p_psi2 = w1 * sphi + w2 * cphi;
    const double p_rpsi2 = -w1 * cphi + w2 * sphi;
    const double p_dir = -dPhi + (ja.ax / ja.a) * ja.a * dY;
    r.pos_psi2 = std::max(r.pos_psi2, std::abs(p_psi2 - v.e_psi2));
    r.pos_rpsi2 = std::max(r.pos_rpsi2, std::abs(p_rpsi2 - v.e_rpsi2));
    r.dir = std::max(r.dir, std::abs(p_dir - v.e_dir));
    if (v.dth == 1) r.conormal = std::abs(p_psi2);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pseudo-circle-front conditions 1-5 against associated (alpha, kappa) fields.
// ---------------------------------------------------------------------------

struct CheckLine {
  double residual = 0.0;
  double tol = 0.0;
  bool pass = true;
};

using ConditionReport = std::map<std::string, CheckLine>;

inline bool report_pass(const ConditionReport& r) {
  for (const auto& [k, v] : r)
    if (!v.pass) return false;
  return true;
}

// Verify on a subsample of the family grid (every `stride`-th node).
inline ConditionReport pseudo_front_verify(const FrontFamily& fam, double tol = 1e-6,
                                           int stride = 4, double step = kDefaultStep) {
  const GaussianMetric& m = *fam.m;
  ConditionReport rep;
  auto upd = [&](const std::string& key, double res) {
    auto& line = rep[key];
    line.residual = std::max(line.residual, res);
    line.tol = tol;
    line.pass = line.residual < tol;
  };
  const GridSpec& g = fam.grid;

  for (int i = 0; i < g.nx; i += stride)
    for (int k = 0; k < g.ny; k += stride)
      for (int j = 0; j < g.ntheta; j += stride) {
        const int idx = fam.index(i, k, j);
        if (fam.flagged[idx]) continue;
        const double x = fam.node_x(i), y = fam.node_y(k), th = fam.node_theta(j);
        const AlphaJet a = fam.assoc_alpha(x, y);
        const auto kk = fam.assoc_kappa(x, y);
        const FrameState& f = fam.at_eval[idx];
        const JacobiPair J{f.J, f.Jd}, Y{f.Y, f.Yd}, B{f.B, f.Bd};
        upd("symplectic-1", std::abs(symplectic(J, B) - 1.0));
        upd("symplectic-2", std::abs(symplectic(Y, B) - a.a * std::sin(th)));
        upd("symplectic-3", std::abs(symplectic(Y, J) - kk[0] * a.a));
        upd("riccati", std::abs(a.ax - kk[0] * a.a));
      }

  // parallel components via local finite differences on a sparse subsample
  const double h = 1e-4;
  for (int i = 1; i < g.nx - 1; i += 2 * stride)
    for (int k = 1; k < g.ny - 1; k += 2 * stride)
      for (int j = 1; j < g.ntheta - 1; j += 2 * stride) {
        const double x = fam.node_x(i), y = fam.node_y(k), th = fam.node_theta(j);
        const FrameState f = frame_flow(m, x, y, th, fam.t_eval, step);
        const double phi = f.s.theta;
        const AlphaJet ja = m.alpha_eval(f.s.x, f.s.y);
        const AlphaJet a = fam.assoc_alpha(x, y);
        auto par = [&](double dx, double dy, double dth) {
          const auto sp = flow(m, {x + dx * h, y + dy * h, th + dth * h}, fam.t_eval, step);
          const auto sm = flow(m, {x - dx * h, y - dy * h, th - dth * h}, fam.t_eval, step);
          return (sp.x - sm.x) / (2 * h) * std::sin(phi) +
                 ja.a * (sp.y - sm.y) / (2 * h) * std::cos(phi);
        };
        upd("parallel-components",
            std::max({std::abs(par(1, 0, 0) - std::sin(th)),
                      std::abs(par(0, 1, 0) - a.a * std::cos(th)), std::abs(par(0, 0, 1))}));
      }

  // informational: residuals of the alternative half-weighted normalization of
  // the third symplectic relation and the Riccati equation (never gating)
  for (int i = 0; i < g.nx; i += stride)
    for (int k = 0; k < g.ny; k += stride)
      for (int j = 0; j < g.ntheta; j += stride) {
        const int idx = fam.index(i, k, j);
        if (fam.flagged[idx]) continue;
        const double x = fam.node_x(i), y = fam.node_y(k);
        const AlphaJet a = fam.assoc_alpha(x, y);
        const auto kk = fam.assoc_kappa(x, y);
        const FrameState& f = fam.at_eval[idx];
        const double syj = symplectic({f.Y, f.Yd}, {f.J, f.Jd});
        auto& l3 = rep["alt-half-symplectic-3"];
        l3.residual = std::max(l3.residual, std::abs(syj - 0.5 * kk[0] * a.a));
        l3.tol = std::numeric_limits<double>::infinity();
        auto& lr = rep["alt-half-riccati"];
        lr.residual = std::max(lr.residual, std::abs(a.ax - 0.5 * kk[0] * a.a));
        lr.tol = std::numeric_limits<double>::infinity();
      }

  // pi/2 anchor and Jac equation along the theta = pi/2 meridians
  for (int i = 0; i < g.nx; i += stride)
    for (int k = 0; k < g.ny; k += stride) {
      const double x = fam.node_x(i), y = fam.node_y(k);
      const FrameState f = frame_flow(m, x, y, M_PI / 2.0, -x, step);
      upd("pi/2-anchor", std::max({std::abs(f.s.x), std::abs(f.s.y - y),
                                   std::abs(f.s.theta - M_PI / 2.0)}));
      const auto [b, bd] = jac_solve(fam.assoc_kappa, x, y, step);
      upd("jac-equation", std::max(std::abs(b - f.B), std::abs(bd - f.Bd)));
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Lens agreement on the known region.
//   A1: family states at t=-T match the known-metric extended scattering from
//       the t=0 data, on known-region nodes (x <= known_depth).
//   A2: associated (alpha, kappa) match the known metric on x=0 and y=+/-delta1.
// ---------------------------------------------------------------------------

struct LensAgreement {
  double a1 = 0.0;
  double a2_alpha = 0.0;
  double a2_kappa = 0.0;
  int absorbed_skipped = 0;
  bool pass(double tol) const { return a1 < tol && a2_alpha < tol && a2_kappa < tol; }
};

inline LensAgreement lens_agreement(const FrontFamily& fam, const GaussianMetric& m_known,
                                    double step = kDefaultStep) {
  LensAgreement out;
  const GridSpec& g = fam.grid;
  const RegionMask mask = collar_mask(m_known, m_known.known_depth);
  for (int k = 0; k < g.ny; ++k)
    for (int j = 0; j < g.ntheta; ++j) {
      const double y = fam.node_y(k), th = fam.node_theta(j);
      // known-region nodes: the x=0 plane (known_depth default 0)
      const FrameState f = fam.at_eval[fam.index(0, k, j)];
      const auto s = extended_scattering(m_known, mask, {0.0, y, th}, fam.t_eval, step);
      if (s.absorbed) {
        ++out.absorbed_skipped;
        continue;
      }
      const double abar = m_known.alpha_eval(s.state.x, s.state.y).a;
      const double d = std::sqrt(
          (f.s.x - s.state.x) * (f.s.x - s.state.x) +
          abar * abar * (f.s.y - s.state.y) * (f.s.y - s.state.y) +
          (f.s.theta - s.state.theta) * (f.s.theta - s.state.theta));
      out.a1 = std::max(out.a1, d);
    }
  // A2 on the boundary segments of Omega_small
  auto a2_at = [&](double x, double y) {
    const AlphaJet a = fam.assoc_alpha(x, y);
    const auto kk = fam.assoc_kappa(x, y);
    const AlphaJet a0 = m_known.alpha_eval(x, y);
    out.a2_alpha = std::max(out.a2_alpha, std::abs(a.a - a0.a));
    out.a2_kappa = std::max(out.a2_kappa, std::abs(kk[0] - a0.ax / a0.a));
  };
  for (int k = 0; k < g.ny; ++k) a2_at(0.0, fam.node_y(k));
  for (int i = 0; i < g.nx; ++i) {
    a2_at(fam.node_x(i), -fam.m->delta1);
    a2_at(fam.node_x(i), fam.m->delta1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transport identity, Y-transport equation, and the B/Y/J commutator relations,
// all by central differences of the frame fields in (x, y, theta) at fixed t.
//   T1: -cos^2(th)*a*J' + dx(Y) + cos(th)*dy(J) - sin(th)*Y' = 0
//   T2: VY + P_a Y + cos(th)*B*dy(kappa) = 0,
//       V = -dt + sin(th) dx + (cos(th)/a) dy + kappa cos(th) dth,  P_a = cos(th) dy(1/a)
//   C1: dy(B) - dth(Y) - a*cos(th)*B' = 0
//   C2: dx(B) - sin(th)*J + cos(th)*dth(J) - sin(th)*B' = 0
// ---------------------------------------------------------------------------

struct IdentityResiduals {
  double transport = 0.0;    // T1
  double y_transport = 0.0;  // T2
  double commutator_y = 0.0; // C1
  double commutator_x = 0.0; // C2
};

inline IdentityResiduals frame_identity_residuals_at(const GaussianMetric& m, double x,
                                                     double y, double theta, double t,
                                                     double h = 1e-4,
                                                     double step = kDefaultStep) {
  const FrameState f = frame_flow(m, x, y, theta, t, step);
  const FrameState fxp = frame_flow(m, x + h, y, theta, t, step);
  const FrameState fxm = frame_flow(m, x - h, y, theta, t, step);
  const FrameState fyp = frame_flow(m, x, y + h, theta, t, step);
  const FrameState fym = frame_flow(m, x, y - h, theta, t, step);
  const FrameState ftp = frame_flow(m, x, y, theta + h, t, step);
  const FrameState ftm = frame_flow(m, x, y, theta - h, t, step);
  auto d = [h](double p, double mm) { return (p - mm) / (2 * h); };

  const AlphaJet a = m.alpha_eval(x, y);
  const double st = std::sin(theta), ct = std::cos(theta);
  const double kap = a.ax / a.a;
  const double kap_y = a.axy / a.a - a.ax * a.ay / (a.a * a.a);

  IdentityResiduals r;
  r.transport = std::abs(-ct * ct * a.a * f.Jd + d(fxp.Y, fxm.Y) + ct * d(fyp.J, fym.J) -
                         st * f.Yd);
  // V Y: dt(Y) along the family is the transported Y' itself.
  const double VY = -f.Yd + st * d(fxp.Y, fxm.Y) + (ct / a.a) * d(fyp.Y, fym.Y) +
                    kap * ct * d(ftp.Y, ftm.Y);
  const double Pa = ct * (-a.ay / (a.a * a.a));
  r.y_transport = std::abs(VY + Pa * f.Y + ct * f.B * kap_y);
  r.commutator_y = std::abs(d(fyp.B, fym.B) - d(ftp.Y, ftm.Y) - a.a * ct * f.Bd);
  r.commutator_x =
      std::abs(d(fxp.B, fxm.B) - st * f.J + ct * d(ftp.J, ftm.J) - st * f.Bd);
  return r;
}

// ---------------------------------------------------------------------------
// V0 commutator identities on scalar test fields, by nested finite differences:
//   [dx, V0] f = cos(th) ( -(a_x/a^2) dy f + kappa_x dth f )
//   [dy, V0] f = cos(th) ( -(a_y/a^2) dy f + kappa_y dth f )
//   [dth, V0] f = cos(th) dx f - (sin(th)/a) dy f - sin(th) kappa dth f
// f supplies value and analytic gradient; V0 f is formed from the gradient and
// the outer derivative is central FD in the commuted variable.
// ---------------------------------------------------------------------------

struct ScalarField {
  std::function<double(double, double, double)> value;
  std::function<std::array<double, 3>(double, double, double)> grad;
};

inline std::array<double, 3> v0_commutator_residuals(const GaussianMetric& m,
                                                     const ScalarField& f, double x, double y,
                                                     double theta, double h = 1e-4) {
  auto v0f = [&](double xx, double yy, double tt) {
    const AlphaJet a = m.alpha_eval(xx, yy);
    const auto gr = f.grad(xx, yy, tt);
    return std::sin(tt) * gr[0] + (std::cos(tt) / a.a) * gr[1] +
           (a.ax / a.a) * std::cos(tt) * gr[2];
  };
  const AlphaJet a = m.alpha_eval(x, y);
  const double st = std::sin(theta), ct = std::cos(theta);
  const double kap = a.ax / a.a;
  const double kap_x = a.axx / a.a - kap * kap;
  const double kap_y = a.axy / a.a - a.ax * a.ay / (a.a * a.a);
  const auto gr = f.grad(x, y, theta);

  // [V0, d_v] f = d_v(V0 f) - V0(d_v f); the second term needs grad(d_v f),
  // obtained by FD of the analytic gradient.
  auto commutator = [&](int v) {
    double dp[3] = {0, 0, 0};
    dp[v] = h;
    const double dv_v0f =
        (v0f(x + dp[0], y + dp[1], theta + dp[2]) - v0f(x - dp[0], y - dp[1], theta - dp[2])) /
        (2 * h);
    // V0 applied to d_v f: build grad(d_v f) by FD of f.grad
    std::array<double, 3> g_p = f.grad(x + dp[0], y + dp[1], theta + dp[2]);
    std::array<double, 3> g_m = f.grad(x - dp[0], y - dp[1], theta - dp[2]);
    // d_w(d_v f) = (grad_w f)(.+h e_v) - ... : row of the Hessian
    std::array<double, 3> hess_row{(g_p[0] - g_m[0]) / (2 * h), (g_p[1] - g_m[1]) / (2 * h),
                                   (g_p[2] - g_m[2]) / (2 * h)};
    const double v0_dvf = st * hess_row[0] + (ct / a.a) * hess_row[1] + kap * ct * hess_row[2];
    return dv_v0f - v0_dvf;
  };
  const double c_x = commutator(0) - ct * (-(a.ax / (a.a * a.a)) * gr[1] + kap_x * gr[2]);
  const double c_y = commutator(1) - ct * (-(a.ay / (a.a * a.a)) * gr[1] + kap_y * gr[2]);
  const double c_th =
      commutator(2) - (ct * gr[0] - (st / a.a) * gr[1] - st * kap * gr[2]);
  return {std::abs(c_x), std::abs(c_y), std::abs(c_th)};
}

// ---------------------------------------------------------------------------
// Chart <-> ambient oracles for circle-slice checks on the catalog models.
// ---------------------------------------------------------------------------

// Flat disk chart point to Cartesian.
inline std::pair<double, double> disk_to_cartesian(double R, double x, double y) {
  return {(R - x) * std::cos(y), (R - x) * std::sin(y)};
}

inline double flat_disk_distance(double R, const UnitBundleState& p,
                                 const UnitBundleState& q) {
  auto [px, py] = disk_to_cartesian(R, p.x, p.y);
  auto [qx, qy] = disk_to_cartesian(R, q.x, q.y);
  return std::hypot(px - qx, py - qy);
}

// Sphere-cap chart point to R^3 (unit sphere, pole at colatitude 0 <-> x=r0).
inline std::array<double, 3> cap_to_r3(double r0, double x, double y) {
  const double rho = r0 - x;
  return {std::sin(rho) * std::cos(y), std::sin(rho) * std::sin(y), std::cos(rho)};
}

inline double sphere_cap_distance(double r0, const UnitBundleState& p,
                                  const UnitBundleState& q) {
  const auto a = cap_to_r3(r0, p.x, p.y), b = cap_to_r3(r0, q.x, q.y);
  double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  dot = std::min(1.0, std::max(-1.0, dot));
  return std::acos(dot);
}

}  // namespace lensrig
