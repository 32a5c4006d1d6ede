#pragma once

// Two-metric difference system: a pair of metrics that agree (with first-order
// jet) on the known collar, the displacement map F = (a, b, c) identifying the
// two backward flows, its exact first-order system with the frame matrix
// A-bar, and the scalar reduction (C-difference ODE and Volterra identity)
// along the theta = pi/2 coordinate rays.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "geodesic.hpp"
#include "jacobi.hpp"
#include "metric.hpp"

namespace lensrig {

struct PairedSetup {
  GaussianMetric m0;  // reference metric
  GaussianMetric m1;  // perturbed metric, same boundary jet on x = 0
  double T = 0.6;     // reverse-flow horizon of the displacement map
};

// Reference catalog metric plus an interior bump; the bump vanishes to third
// order at the edge of its support, so the pair shares the boundary jet.
inline PairedSetup build_extension_pair(const std::string& name, double cx, double cy,
                                        double radius, double amplitude, double T = 0.6) {
  PairedSetup p;
  p.m0 = catalog(name);
  p.m1 = bump_perturb(p.m0, cx, cy, radius, amplitude);
  p.T = T;
  return p;
}

// Max jet mismatch (alpha and first derivatives) along the x = 0 line.
inline double pair_jet_mismatch(const PairedSetup& p, int n_samples = 101) {
  double worst = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double y = p.m0.y_min + (p.m0.y_max - p.m0.y_min) * i / (n_samples - 1.0);
    const AlphaJet a0 = p.m0.alpha_eval(0.0, y);
    const AlphaJet a1 = p.m1.alpha_eval(0.0, y);
    worst = std::max({worst, std::abs(a1.a - a0.a), std::abs(a1.ax - a0.ax),
                      std::abs(a1.ay - a0.ay)});
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Frame matrix A-bar at the displaced parameters (x+a, y+b, theta+c), built
// from the reference-metric frame after time t:
//   [ sin(th')           alpha0 cos(th')   0  ]
//   [ -cos(th') J0       Y0                B0 ]
//   [ -cos(th') J0'      Y0'               B0' ]
// det(A-bar) = -alpha0 at the displaced point; closed-form inverse follows
// from the symplectic pairings {J,B}=1, {Y,B}=alpha sin, {Y,J}=kappa alpha.
// ---------------------------------------------------------------------------

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

inline Vec3 mat_apply(const Mat3& M, const Vec3& v) {
  return {M[0][0] * v[0] + M[0][1] * v[1] + M[0][2] * v[2],
          M[1][0] * v[0] + M[1][1] * v[1] + M[1][2] * v[2],
          M[2][0] * v[0] + M[2][1] * v[1] + M[2][2] * v[2]};
}

inline Mat3 mat_mul(const Mat3& A, const Mat3& B) {
  Mat3 C{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) C[i][j] += A[i][k] * B[k][j];
  return C;
}

inline double det3(const Mat3& M) {
  return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
         M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
         M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
}

struct FrameMatrix {
  Mat3 A;            // the matrix above
  Mat3 A_inv;        // closed-form inverse
  double det;        // should equal -alpha0(x+a, y+b)
  double alpha;      // alpha0 at the displaced base point
  double kappa;      // kappa0 at the displaced base point
  double theta_disp; // theta + c
  bool singular = false;  // |det| < 1e-6 * alpha0
  FrameState frame;  // reference frame at the displaced parameters
};

inline FrameMatrix frame_matrix(const GaussianMetric& m0, double x, double y, double theta,
                                double t, double step = kDefaultStep) {
  FrameMatrix out;
  out.frame = frame_flow(m0, x, y, theta, t, step);
  const FrameState& f = out.frame;
  const AlphaJet aj = m0.alpha_eval(x, y);
  const double al = aj.a, kap = aj.ax / aj.a;
  const double s = std::sin(theta), c = std::cos(theta);
  out.alpha = al;
  out.kappa = kap;
  out.theta_disp = theta;
  out.A = {{{s, al * c, 0.0},
            {-c * f.J, f.Y, f.B},
            {-c * f.Jd, f.Yd, f.Bd}}};
  out.det = det3(out.A);
  out.singular = std::abs(out.det) < 1e-6 * al;
  out.A_inv = {{{s, c * f.Bd, -c * f.B},
                {c / al, -s * f.Bd / al, s * f.B / al},
                {c * kap, (s * f.Yd + al * c * c * f.Jd) / al,
                 -(s * f.Y + al * c * c * f.J) / al}}};
  return out;
}

// Rank-one reduced matrix M0 = kappa0 * w1 * (row1 of A-bar); eigenvalues
// {kappa0, 0, 0} with eigenvectors w1, w2, w3 below.
inline Mat3 reduced_m0(const FrameMatrix& fm) {
  const double s = std::sin(fm.theta_disp), c = std::cos(fm.theta_disp);
  const Vec3 col{s, c / fm.alpha, c * fm.kappa};
  const Vec3 row{s, fm.alpha * c, 0.0};
  Mat3 M{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) M[i][j] = fm.kappa * col[i] * row[j];
  return M;
}

inline std::array<Vec3, 3> reduced_m0_eigvecs(const FrameMatrix& fm) {
  const double s = std::sin(fm.theta_disp), c = std::cos(fm.theta_disp);
  return {Vec3{s, c / fm.alpha, c * fm.kappa},  // eigenvalue kappa0
          Vec3{-c, s / fm.alpha, 0.0},          // eigenvalue 0
          Vec3{0.0, 0.0, 1.0}};                 // eigenvalue 0
}

// ---------------------------------------------------------------------------
// Displacement map F = (a, b, c): the reference backward flow from the
// displaced parameters meets the perturbed backward flow,
//   Psi0(x+a, y+b, theta+c, -T) = Psi1(x, y, theta, -T).
// Damped Newton with the analytic Jacobian -A-bar; the residual is expressed
// in the orthonormal frame at the reference endpoint, with the angle component
// corrected by the connection form so the Jacobian is exact to first order.
// ---------------------------------------------------------------------------

struct DifferenceResult {
  Vec3 F{0.0, 0.0, 0.0};
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline DifferenceResult difference_map(const PairedSetup& p, double x, double y, double theta,
                                       Vec3 guess = {0, 0, 0}, double step = kDefaultStep,
                                       double tol = 1e-12, int max_iter = 50) {
  const UnitBundleState e1 = flow(p.m1, {x, y, theta}, -p.T, step);
  DifferenceResult out;
  out.F = guess;

  auto residual_of = [&](const Vec3& F, FrameMatrix* fm_out) -> Vec3 {
    FrameMatrix fm = frame_matrix(p.m0, x + F[0], y + F[1], theta + F[2], -p.T, step);
    const UnitBundleState& e0 = fm.frame.s;
    const AlphaJet ae = p.m0.alpha_eval(e0.x, e0.y);
    const double phi = e0.theta, sp = std::sin(phi), cp = std::cos(phi);
    const double dx = e1.x - e0.x, dy = e1.y - e0.y;
    // Angle row enters negated so that dr/dF = -A-bar uniformly: the position
    // rows differentiate to minus the frame projections, while the
    // connection-corrected angle differentiates to plus them.
    const Vec3 r{dx * sp + ae.a * dy * cp, -dx * cp + ae.a * dy * sp,
                 -(e1.theta - e0.theta) + (ae.ax / ae.a) * ae.a * dy};
    if (fm_out) *fm_out = fm;
    return r;
  };

  FrameMatrix fm;
  Vec3 r = residual_of(out.F, &fm);
  auto norm = [](const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); };
  out.residual = norm(r);
  while (out.residual >= tol && out.iterations < max_iter) {
    const Vec3 dF = mat_apply(fm.A_inv, r);  // dr/dF = -A-bar  =>  step = A^{-1} r
    double lambda = 1.0;
    for (int back = 0; back < 20; ++back) {
      const Vec3 cand{out.F[0] + lambda * dF[0], out.F[1] + lambda * dF[1],
                      out.F[2] + lambda * dF[2]};
      FrameMatrix fm_c;
      const Vec3 rc = residual_of(cand, &fm_c);
      if (norm(rc) < out.residual || lambda < 1e-6) {
        out.F = cand;
        r = rc;
        fm = fm_c;
        break;
      }
      lambda *= 0.5;
    }
    out.residual = norm(r);
    ++out.iterations;
  }
  out.converged = out.residual < tol;
  return out;
}

// Solve the displacement map along increasing x with warm-start continuation.
inline std::vector<DifferenceResult> difference_map_continuation(
    const PairedSetup& p, const std::vector<double>& xs, double y, double theta,
    double step = kDefaultStep) {
  std::vector<DifferenceResult> out;
  Vec3 guess{0, 0, 0};
  for (double x : xs) {
    out.push_back(difference_map(p, x, y, theta, guess, step));
    guess = out.back().F;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Difference fields at a point: pointwise delta-alpha / delta-kappa in the
// shared chart and the frame differences at the displaced parameters.
// ---------------------------------------------------------------------------

struct DeltaFields {
  Vec3 F;
  double delta_alpha, delta_alpha_x;  // alpha1 - alpha0 and its x-derivative
  double delta_kappa;                 // kappa1 - kappa0
  double dB, dBd, dJ, dY;             // frame differences (perturbed minus displaced ref)
  FrameState f1;                      // perturbed frame at (x, y, theta)
  FrameMatrix fm0;                    // reference data at the displaced parameters
};

inline DeltaFields delta_fields(const PairedSetup& p, double x, double y, double theta,
                                const DifferenceResult& dm, double step = kDefaultStep) {
  DeltaFields d;
  d.F = dm.F;
  const AlphaJet a0 = p.m0.alpha_eval(x, y), a1 = p.m1.alpha_eval(x, y);
  d.delta_alpha = a1.a - a0.a;
  d.delta_alpha_x = a1.ax - a0.ax;
  d.delta_kappa = a1.ax / a1.a - a0.ax / a0.a;
  d.f1 = frame_flow(p.m1, x, y, theta, -p.T, step);
  d.fm0 = frame_matrix(p.m0, x + dm.F[0], y + dm.F[1], theta + dm.F[2], -p.T, step);
  d.dB = d.f1.B - d.fm0.frame.B;
  d.dBd = d.f1.Bd - d.fm0.frame.Bd;
  d.dJ = d.f1.J - d.fm0.frame.J;
  d.dY = d.f1.Y - d.fm0.frame.Y;
  return d;
}

// Residual of the delta-J relation obtained by differencing the two copies of
// J = Y / (alpha sin th) + kappa B / sin th; exact up to O(|F| + |delta alpha|)
// remainders, meaningful for |sin theta| bounded away from zero.
inline double delta_j_relation_residual(const DeltaFields& d, double theta) {
  const double s = std::sin(theta);
  if (std::abs(s) <= 0.1)
    throw std::domain_error("delta_j_relation_residual: |sin theta| too small");
  return std::abs(d.dJ - d.dY / (d.fm0.alpha * s) - d.fm0.kappa * d.dB / s);
}

// Exact pointwise identity: delta_kappa * alpha1 = dx(delta_alpha) - kappa0 * delta_alpha.
inline double delta_kappa_identity_residual(const PairedSetup& p, double x, double y) {
  const AlphaJet a0 = p.m0.alpha_eval(x, y), a1 = p.m1.alpha_eval(x, y);
  const double dk = a1.ax / a1.a - a0.ax / a0.a;
  return std::abs(dk * a1.a - ((a1.ax - a0.ax) - (a0.ax / a0.a) * (a1.a - a0.a)));
}

// ---------------------------------------------------------------------------
// Exact first-order system for F. With theta' = theta + c and the reference
// frame (J0, Y0, B0) at the displaced parameters, the perturbed frame
// (J1, Y1, B1) at (x, y, theta):
//   A-bar dF/dx  = ( sin(th) - sin(th'),
//                    -cos(th) J1 + cos(th') J0,
//                    -cos(th) J1' + cos(th') J0' )
//   A-bar dF/dy  = ( cos(th) alpha1(x,y) - alpha0(x+a,y+b) cos(th'),
//                    Y1 - Y0,  Y1' - Y0' )
// and in theta the exact relations
//   0  = sin(th') da/dth + alpha0 cos(th') db/dth
//   B1 - B0 = -cos(th') J0 da/dth + Y0 db/dth + B0 dc/dth.
// dF/dv is measured by central differences of the solved map.
// ---------------------------------------------------------------------------

struct FirstOrderResiduals {
  Vec3 x_eq{0, 0, 0};
  Vec3 y_eq{0, 0, 0};
  double theta_tangential = 0.0;
  double theta_delta_b = 0.0;
  double max() const {
    double m = std::max(theta_tangential, theta_delta_b);
    for (int i = 0; i < 3; ++i) m = std::max({m, std::abs(x_eq[i]), std::abs(y_eq[i])});
    return m;
  }
};

inline FirstOrderResiduals first_order_residual(const PairedSetup& p, double x, double y,
                                                double theta, double h = 1e-4,
                                                double step = kDefaultStep) {
  const DifferenceResult center = difference_map(p, x, y, theta);
  auto solve_from = [&](double xx, double yy, double tt) {
    return difference_map(p, xx, yy, tt, center.F, step).F;
  };
  const Vec3 Fxp = solve_from(x + h, y, theta), Fxm = solve_from(x - h, y, theta);
  const Vec3 Fyp = solve_from(x, y + h, theta), Fym = solve_from(x, y - h, theta);
  const Vec3 Ftp = solve_from(x, y, theta + h), Ftm = solve_from(x, y, theta - h);
  Vec3 dFx, dFy, dFt;
  for (int i = 0; i < 3; ++i) {
    dFx[i] = (Fxp[i] - Fxm[i]) / (2 * h);
    dFy[i] = (Fyp[i] - Fym[i]) / (2 * h);
    dFt[i] = (Ftp[i] - Ftm[i]) / (2 * h);
  }
  const DeltaFields d = delta_fields(p, x, y, theta, center, step);
  const FrameState& f0 = d.fm0.frame;
  const FrameState& f1 = d.f1;
  const double thp = theta + center.F[2];
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sp = std::sin(thp), cp = std::cos(thp);
  const double al0 = d.fm0.alpha;  // alpha0 at displaced base point
  const AlphaJet a1 = p.m1.alpha_eval(x, y);

  const Vec3 lhs_x = mat_apply(d.fm0.A, dFx);
  const Vec3 lhs_y = mat_apply(d.fm0.A, dFy);
  const Vec3 rhs_x{st - sp, -ct * f1.J + cp * f0.J, -ct * f1.Jd + cp * f0.Jd};
  const Vec3 rhs_y{ct * a1.a - al0 * cp, f1.Y - f0.Y, f1.Yd - f0.Yd};

  FirstOrderResiduals r;
  for (int i = 0; i < 3; ++i) {
    r.x_eq[i] = lhs_x[i] - rhs_x[i];
    r.y_eq[i] = lhs_y[i] - rhs_y[i];
  }
  r.theta_tangential = std::abs(sp * dFt[0] + al0 * cp * dFt[1]);
  r.theta_delta_b =
      std::abs(d.dB - (-cp * f0.J * dFt[0] + f0.Y * dFt[1] + f0.B * dFt[2]));
  return r;
}

// ---------------------------------------------------------------------------
// Scalar reduction along the theta = pi/2 coordinate ray from (x, y) down to
// the boundary x = 0 (time t runs from 0 to -x).
//
// The Jac solutions b0, b1 of the two curvature fields satisfy, with
// C = b1 - b0 and the potentials G_i = -(dx kappa_i + kappa_i^2) at (x+t, y):
//   C'' + G1 C = -b0 (G1 - G0),      C(0) = C'(0) = 0.
//
// Volterra identity at the boundary:
//   delta_alpha(x,y)/alpha1(x,y)
//     + int_{-x}^0 K(t) delta_alpha(x+t, y) dt
//     + C'(-x) - int_{-x}^0 G1(x+t, y) C(t) dt  =  0
// with A(t) = -b0' + (delta_kappa + 2 kappa0) b0   (A(0) = 1) and
//   K = ( -A' + A delta_kappa ) / alpha1,
//   A' = G0 b0 + dx(delta_kappa + 2 kappa0) b0 + (delta_kappa + 2 kappa0) b0'.
// ---------------------------------------------------------------------------

struct ScalarTrace {
  std::vector<double> t, b0, b0d, b1, b1d, C, Cd;
};

inline ScalarTrace c_difference(const PairedSetup& p, double x, double y,
                                double step = kDefaultStep) {
  // state: (b0, b0', b1, b1', C, C', t)
  auto rhs = [&](const State<7>& u) {
    const double xx = x + u[6];
    const AlphaJet a0 = p.m0.alpha_eval(xx, y), a1 = p.m1.alpha_eval(xx, y);
    const double G0 = -(a0.axx / a0.a);  // -(dx kappa + kappa^2)
    const double G1 = -(a1.axx / a1.a);
    State<7> d;
    d[0] = u[1];
    d[1] = -G0 * u[0];
    d[2] = u[3];
    d[3] = -G1 * u[2];
    d[4] = u[5];
    d[5] = -G1 * u[4] - u[0] * (G1 - G0);
    d[6] = 1.0;
    return d;
  };
  ScalarTrace tr;
  State<7> u{0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0};
  rk4_integrate<7>(rhs, u, -x, step, [&tr](double, const State<7>& v) {
    tr.t.push_back(v[6]);
    tr.b0.push_back(v[0]);
    tr.b0d.push_back(v[1]);
    tr.b1.push_back(v[2]);
    tr.b1d.push_back(v[3]);
    tr.C.push_back(v[4]);
    tr.Cd.push_back(v[5]);
  });
  return tr;
}

// Max |C - (b1 - b0)| along the trace: the source ODE against the direct
// difference of the two Jac solutions.
inline double c_difference_crosscheck(const ScalarTrace& tr) {
  double worst = 0.0;
  for (size_t i = 0; i < tr.t.size(); ++i)
    worst = std::max(worst, std::abs(tr.C[i] - (tr.b1[i] - tr.b0[i])));
  return worst;
}

inline double volterra_residual(const PairedSetup& p, double x, double y,
                                double step = kDefaultStep) {
  const ScalarTrace tr = c_difference(p, x, y, step);
  const size_t n = tr.t.size();
  std::vector<double> f1(n), f2(n);  // integrands K*delta_alpha and G1*C
  for (size_t i = 0; i < n; ++i) {
    const double xx = x + tr.t[i];
    const AlphaJet a0 = p.m0.alpha_eval(xx, y), a1 = p.m1.alpha_eval(xx, y);
    const double k0 = a0.ax / a0.a, k1 = a1.ax / a1.a;
    const double k0x = a0.axx / a0.a - k0 * k0, k1x = a1.axx / a1.a - k1 * k1;
    const double G0 = -(a0.axx / a0.a), G1 = -(a1.axx / a1.a);
    const double dk = k1 - k0, dkx = k1x - k0x;
    const double A = -tr.b0d[i] + (dk + 2 * k0) * tr.b0[i];
    const double Ad = G0 * tr.b0[i] + (dkx + 2 * k0x) * tr.b0[i] + (dk + 2 * k0) * tr.b0d[i];
    const double K = (-Ad + A * dk) / a1.a;
    f1[i] = K * (a1.a - a0.a);
    f2[i] = G1 * tr.C[i];
  }
  // trapezoid over the stored (monotone decreasing) time grid
  double i1 = 0.0, i2 = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    const double w = std::abs(tr.t[i + 1] - tr.t[i]) * 0.5;
    i1 += w * (f1[i] + f1[i + 1]);
    i2 += w * (f2[i] + f2[i + 1]);
  }
  const AlphaJet a0 = p.m0.alpha_eval(x, y), a1 = p.m1.alpha_eval(x, y);
  return std::abs((a1.a - a0.a) / a1.a + i1 + tr.Cd.back() - i2);
}

}  // namespace lensrig
