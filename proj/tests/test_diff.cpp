#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lensrig/diff.hpp"

using namespace lensrig;

namespace {
PairedSetup standard_pair() {
  // bump support [0.23, 0.47]: strictly inside the unknown region, below the
  // evaluation band x in [0.5, 0.7], so backward rays of horizon 0.6 cross it
  return build_extension_pair("flat_disk", 0.35, 0.0, 0.12, 0.01, 0.6);
}
}  // namespace

TEST_CASE("extension pair shares the boundary jet but differs inside") {
  const auto p = standard_pair();
  REQUIRE(pair_jet_mismatch(p) < 1e-14);
  REQUIRE(std::abs(p.m1.alpha_eval(0.35, 0.0).a - p.m0.alpha_eval(0.35, 0.0).a) > 1e-3);
}

TEST_CASE("frame matrix: determinant, closed-form inverse, reduced spectrum") {
  const auto p = standard_pair();
  for (double th : {0.7, 1.25, M_PI / 2, 2.2}) {
    const auto fm = frame_matrix(p.m0, 0.62, 0.03, th, -0.6);
    INFO("theta = " << th);
    REQUIRE(std::abs(fm.det + fm.alpha) < 1e-12);
    const Mat3 I = mat_mul(fm.A, fm.A_inv);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        REQUIRE(std::abs(I[i][j] - (i == j ? 1.0 : 0.0)) < 1e-12);

    // M0 = -A^{-1} L + kappa I against the rank-one closed form
    Mat3 L{};
    for (int j = 0; j < 3; ++j) {
      L[1][j] = fm.kappa * fm.A[1][j];
      L[2][j] = fm.kappa * fm.A[2][j];
    }
    const Mat3 AinvL = mat_mul(fm.A_inv, L);
    Mat3 M0{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M0[i][j] = -AinvL[i][j] + (i == j ? fm.kappa : 0.0);
    const Mat3 R = reduced_m0(fm);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) REQUIRE(std::abs(M0[i][j] - R[i][j]) < 1e-12);

    // eigenvectors: M0 w1 = kappa w1, M0 w2 = M0 w3 = 0
    const auto ev = reduced_m0_eigvecs(fm);
    const Vec3 m1v = mat_apply(M0, ev[0]), m2v = mat_apply(M0, ev[1]),
               m3v = mat_apply(M0, ev[2]);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(std::abs(m1v[i] - fm.kappa * ev[0][i]) < 1e-12);
      REQUIRE(std::abs(m2v[i]) < 1e-12);
      REQUIRE(std::abs(m3v[i]) < 1e-12);
    }
  }
}

TEST_CASE("displacement map: damped Newton with analytic Jacobian") {
  const auto p = standard_pair();
  SECTION("converges quadratically where the rays cross the perturbation") {
    for (double th : {0.9, 1.2, M_PI / 2, 2.0}) {
      const auto dm = difference_map(p, 0.6, 0.0, th);
      INFO("theta = " << th);
      REQUIRE(dm.converged);
      REQUIRE(dm.residual < 1e-12);
      REQUIRE(dm.iterations <= 5);
    }
  }
  SECTION("nonzero displacement across the bump, zero below it") {
    const auto dm = difference_map(p, 0.6, 0.0, 1.2);
    const double mag = std::sqrt(dm.F[0] * dm.F[0] + dm.F[1] * dm.F[1] + dm.F[2] * dm.F[2]);
    REQUIRE(mag > 1e-5);
    const auto dm0 = difference_map(p, 0.1, 0.0, 1.2);  // backward ray stays below support
    REQUIRE(dm0.converged);
    REQUIRE(std::sqrt(dm0.F[0] * dm0.F[0] + dm0.F[1] * dm0.F[1] + dm0.F[2] * dm0.F[2]) <
            1e-12);
  }
  SECTION("warm-start continuation in x") {
    std::vector<double> xs;
    for (int i = 0; i <= 20; ++i) xs.push_back(0.2 + 0.5 * i / 20.0);
    const auto line = difference_map_continuation(p, xs, 0.0, 1.3);
    double prev_mag = 0.0;
    for (size_t i = 0; i < line.size(); ++i) {
      REQUIRE(line[i].converged);
      const auto& F = line[i].F;
      const double mag = std::sqrt(F[0] * F[0] + F[1] * F[1] + F[2] * F[2]);
      // the solved branch varies continuously along the continuation
      REQUIRE(std::abs(mag - prev_mag) < 5e-3);
      prev_mag = mag;
    }
  }
}

TEST_CASE("pair construction rejects collar-touching perturbations") {
  REQUIRE_THROWS_AS(build_extension_pair("flat_disk", 0.05, 0.0, 0.1, 0.01),
                    std::invalid_argument);
}

TEST_CASE("identity pair: everything vanishes") {
  PairedSetup same{catalog("flat_disk"), catalog("flat_disk"), 0.6};
  for (double th : {0.9, 1.4, M_PI / 2}) {
    const auto dm = difference_map(same, 0.6, 0.0, th);
    REQUIRE(dm.converged);
    REQUIRE(std::abs(dm.F[0]) < 1e-8);
    REQUIRE(std::abs(dm.F[1]) < 1e-8);
    REQUIRE(std::abs(dm.F[2]) < 1e-8);
    const auto d = delta_fields(same, 0.6, 0.0, th, dm);
    REQUIRE(std::abs(d.delta_alpha) < 1e-8);
    REQUIRE(std::abs(d.delta_kappa) < 1e-8);
    REQUIRE(std::abs(d.dB) < 1e-8);
    REQUIRE(std::abs(d.dY) < 1e-8);
    REQUIRE(std::abs(d.dJ) < 1e-8);
  }
  const auto r = first_order_residual(same, 0.6, 0.05, 1.2);
  REQUIRE(r.max() < 1e-7);
}

TEST_CASE("delta-J relation holds up to an O(F) remainder") {
  const auto p = standard_pair();
  for (double th : {0.7, 1.1, 1.9, 2.4}) {
    const auto dm = difference_map(p, 0.6, 0.0, th);
    REQUIRE(dm.converged);
    const auto d = delta_fields(p, 0.6, 0.0, th, dm);
    const double fn =
        std::sqrt(dm.F[0] * dm.F[0] + dm.F[1] * dm.F[1] + dm.F[2] * dm.F[2]);
    INFO("theta = " << th << " |F| = " << fn);
    REQUIRE(delta_j_relation_residual(d, th) < 10.0 * (fn + std::abs(d.delta_alpha)) + 1e-10);
  }
}

TEST_CASE("displaced vs undisplaced frame matrix differ by O(F)") {
  const auto p = standard_pair();
  const double x = 0.6, y = 0.0, th = 1.2;
  const auto dm = difference_map(p, x, y, th);
  const auto fm_disp =
      frame_matrix(p.m0, x + dm.F[0], y + dm.F[1], th + dm.F[2], -p.T);
  const auto fm_base = frame_matrix(p.m0, x, y, th, -p.T);
  REQUIRE_FALSE(fm_disp.singular);
  double gap = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      gap = std::max(gap, std::abs(fm_disp.A[i][j] - fm_base.A[i][j]));
  const double fn = std::sqrt(dm.F[0] * dm.F[0] + dm.F[1] * dm.F[1] + dm.F[2] * dm.F[2]);
  REQUIRE(gap > 0.0);
  REQUIRE(gap < 20.0 * fn);
}

TEST_CASE("difference fields and the exact pointwise kappa identity") {
  const auto p = standard_pair();
  const auto dm = difference_map(p, 0.6, 0.0, 1.2);
  const auto d = delta_fields(p, 0.6, 0.0, 1.2, dm);
  REQUIRE(std::abs(d.delta_alpha) < 1e-14);  // evaluation point is above the support
  REQUIRE(std::abs(p.m1.alpha_eval(0.35, 0.0).a - p.m0.alpha_eval(0.35, 0.0).a) > 1e-3);
  for (double x : {0.25, 0.3, 0.35, 0.42, 0.6})
    for (double y : {-0.05, 0.0, 0.08}) {
      REQUIRE(delta_kappa_identity_residual(p, x, y) < 1e-10);
    }
  SECTION("finite-difference variant of the kappa identity is O(h^2)") {
    auto fd_residual = [&](double h) {
      const double x = 0.35, y = 0.0;
      auto dalpha = [&](double xx) {
        return p.m1.alpha_eval(xx, y).a - p.m0.alpha_eval(xx, y).a;
      };
      const double da = dalpha(x);
      const double dax = (dalpha(x + h) - dalpha(x - h)) / (2 * h);
      const AlphaJet a0 = p.m0.alpha_eval(x, y), a1 = p.m1.alpha_eval(x, y);
      const double dk = a1.ax / a1.a - a0.ax / a0.a;
      return std::abs(dk - (dax - (a0.ax / a0.a) * da) / a1.a);
    };
    const double r1 = fd_residual(2e-3), r2 = fd_residual(1e-3);
    REQUIRE(r2 < 1e-4);
    REQUIRE(r1 / r2 > 3.0);
    REQUIRE(r1 / r2 < 5.0);
  }
}

TEST_CASE("exact first-order system for the displacement map") {
  const auto p = standard_pair();
  for (double th : {1.0, 1.4, M_PI / 2}) {
    const auto r = first_order_residual(p, 0.6, 0.05, th);
    INFO("theta = " << th);
    REQUIRE(r.max() < 1e-6);
  }
  SECTION("residual is finite-difference limited (step halving)") {
    const double r1 = first_order_residual(p, 0.6, 0.05, 1.2, 2e-4).max();
    const double r2 = first_order_residual(p, 0.6, 0.05, 1.2, 1e-4).max();
    if (r2 > 1e-10) REQUIRE(r1 / r2 > 2.0);
  }
}

TEST_CASE("scalar reduction along the pi/2 coordinate ray") {
  const auto p = standard_pair();
  SECTION("source ODE reproduces the direct difference of Jac solutions") {
    for (double x : {0.5, 0.6, 0.7})
      for (double y : {-0.05, 0.0, 0.08}) {
        const auto tr = c_difference(p, x, y);
        INFO("x=" << x << " y=" << y);
        REQUIRE(c_difference_crosscheck(tr) < 1e-12);
        if (y == 0.0) REQUIRE(std::abs(tr.C.back()) > 1e-5);  // bump is actually seen
      }
  }
  SECTION("C matches the frame differences at theta = pi/2") {
    // At theta = pi/2 the perturbed and reference rays are the same coordinate
    // line, the displacement map vanishes in (a, b), and b1 - b0 equals the
    // difference of the transported B components at t = -x.
    const double x = 0.45, y = 0.0;
    const auto tr = c_difference(p, x, y);
    const auto f1 = frame_flow(p.m1, x, y, M_PI / 2, -x);
    const auto f0 = frame_flow(p.m0, x, y, M_PI / 2, -x);
    REQUIRE(std::abs(tr.C.back() - (f1.B - f0.B)) < 1e-9);
    REQUIRE(std::abs(tr.Cd.back() - (f1.Bd - f0.Bd)) < 1e-9);
  }
  SECTION("Volterra identity at the boundary") {
    for (double x : {0.5, 0.6, 0.7})
      for (double y : {-0.05, 0.0, 0.08}) {
        INFO("x=" << x << " y=" << y);
        REQUIRE(volterra_residual(p, x, y) < 1e-8);
      }
    // quadrature convergence under step refinement
    const double r1 = volterra_residual(p, 0.6, 0.0, 1e-3);
    const double r2 = volterra_residual(p, 0.6, 0.0, 5e-4);
    REQUIRE(r2 < r1);
  }
  SECTION("linearity: halving the bump amplitude halves max |C|") {
    auto max_c = [](const ScalarTrace& tr) {
      double m = 0.0;
      for (double c : tr.C) m = std::max(m, std::abs(c));
      return m;
    };
    const auto p_full = build_extension_pair("flat_disk", 0.35, 0.0, 0.12, 0.01, 0.6);
    const auto p_half = build_extension_pair("flat_disk", 0.35, 0.0, 0.12, 0.005, 0.6);
    const double ratio = max_c(c_difference(p_full, 0.6, 0.0)) /
                         max_c(c_difference(p_half, 0.6, 0.0));
    REQUIRE(ratio == Catch::Approx(2.0).epsilon(0.05));
  }
  SECTION("identical pair gives identically zero reduction") {
    PairedSetup same{catalog("flat_disk"), catalog("flat_disk"), 0.6};
    const auto tr = c_difference(same, 0.6, 0.0);
    REQUIRE(c_difference_crosscheck(tr) == 0.0);
    REQUIRE(volterra_residual(same, 0.6, 0.0) < 1e-15);
  }
}
