#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lensrig/metric.hpp"

using namespace lensrig;

namespace {
// Central-difference oracle for the analytic jets.
double fd_x(const GaussianMetric& m, double x, double y, double h = 1e-5) {
  return (m.alpha(x + h, y) - m.alpha(x - h, y)) / (2 * h);
}
double fd_y(const GaussianMetric& m, double x, double y, double h = 1e-5) {
  return (m.alpha(x, y + h) - m.alpha(x, y - h)) / (2 * h);
}
double fd_xx(const GaussianMetric& m, double x, double y, double h = 1e-4) {
  return (m.alpha(x + h, y) - 2 * m.alpha(x, y) + m.alpha(x - h, y)) / (h * h);
}
}  // namespace

TEST_CASE("eval_metric: catalog closed forms") {
  const auto fd = flat_disk(2.0);
  const AlphaJet j = fd.eval(0.5, 0.3);
  CHECK(j.a == Catch::Approx(1.5).margin(1e-15));
  CHECK(j.ax == Catch::Approx(-1.0).margin(1e-15));
  CHECK(j.ay == 0.0);
  CHECK(j.axx == 0.0);

  const auto sc = sphere_cap(M_PI / 3.0);
  const AlphaJet js = sc.eval(0.0, 0.0);
  CHECK(js.a == Catch::Approx(std::sin(M_PI / 3.0)).epsilon(1e-14));
  CHECK(js.ax == Catch::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("eval_metric: domain error outside chart") {
  const auto m = hyperbolic_collar(1.0);
  CHECK_THROWS_AS(m.eval(m.x_max + 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(m.eval(0.0, m.y_max + 1.0), std::domain_error);
}

TEST_CASE("kappa: catalog values") {
  CHECK(flat_disk(2.0).kappa(0.5, 0.0) == Catch::Approx(-1.0 / 1.5).epsilon(1e-14));
  CHECK(sphere_cap(M_PI / 3.0).kappa(0.0, 0.0) ==
        Catch::Approx(-1.0 / std::tan(M_PI / 3.0)).epsilon(1e-14));
  CHECK(hyperbolic_collar(1.0).kappa(0.0, 0.0) ==
        Catch::Approx(-1.0 / std::tanh(1.0)).epsilon(1e-14));
}

TEST_CASE("gauss_curvature: constant-curvature catalog") {
  std::mt19937_64 rng(7);
  auto check_const = [&rng](const GaussianMetric& m, double G) {
    std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1);
    for (int i = 0; i < 50; ++i) {
      const double x = ux(rng), y = uy(rng);
      CHECK(m.gauss(x, y) == Catch::Approx(G).margin(1e-12));
      // chain identity G = -(dx kappa + kappa^2)
      CHECK(m.gauss(x, y) + m.kappa_x(x, y) + m.kappa(x, y) * m.kappa(x, y) ==
            Catch::Approx(0.0).margin(1e-10));
    }
  };
  check_const(flat_disk(2.0), 0.0);
  check_const(sphere_cap(M_PI / 3.0), 1.0);
  check_const(hyperbolic_collar(1.0), -1.0);
}

TEST_CASE("catalog: convexity kappa < 0 on the physical chart") {
  std::mt19937_64 rng(11);
  for (const char* name : {"flat_disk", "sphere_cap", "hyperbolic_collar"}) {
    const auto m = catalog(name);
    std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1);
    for (int i = 0; i < 100; ++i) CHECK(m.kappa(ux(rng), uy(rng)) < 0.0);
  }
}

TEST_CASE("bump_perturb: jet oracle and support") {
  const auto m0 = flat_disk(2.0);
  const auto m1 = bump_perturb(m0, 0.5, 0.0, 0.2, 0.01);

  SECTION("matches finite differences of the analytic formula") {
    for (double x : {0.4, 0.5, 0.62}) {
      for (double y : {-0.1, 0.0, 0.13}) {
        const AlphaJet j = m1.eval(x, y);
        CHECK(j.ax == Catch::Approx(fd_x(m1, x, y)).margin(2e-6));
        CHECK(j.ay == Catch::Approx(fd_y(m1, x, y)).margin(2e-6));
        CHECK(j.axx == Catch::Approx(fd_xx(m1, x, y)).margin(2e-5));
        // mixed and higher derivatives via nested differences
        const double h = 1e-4;
        const double axy = (m1.eval(x + h, y + h).a - m1.eval(x + h, y - h).a -
                            m1.eval(x - h, y + h).a + m1.eval(x - h, y - h).a) /
                           (4 * h * h);
        CHECK(j.axy == Catch::Approx(axy).margin(2e-5));
        const double axxx =
            (m1.eval(x + 2 * h, y).a - 2 * m1.eval(x + h, y).a + 2 * m1.eval(x - h, y).a -
             m1.eval(x - 2 * h, y).a) /
            (2 * h * h * h);
        CHECK(j.axxx == Catch::Approx(axxx).margin(2e-3));
      }
    }
  }

  SECTION("amplitude 0 is the identity") {
    const auto mz = bump_perturb(m0, 0.5, 0.0, 0.2, 0.0);
    for (double x : {0.0, 0.3, 0.55}) CHECK(mz.alpha(x, 0.1) == m0.alpha(x, 0.1));
  }

  SECTION("differs only on the support; boundary jet untouched") {
    CHECK(m1.alpha(0.1, 0.0) == m0.alpha(0.1, 0.0));
    CHECK(m1.alpha(0.5, 0.0) != m0.alpha(0.5, 0.0));
    const AlphaJet b0 = m0.eval(0.0, 0.05), b1 = m1.eval(0.0, 0.05);
    CHECK(b1.a == b0.a);
    CHECK(b1.ax == b0.ax);
    CHECK(b1.axx == b0.axx);
    CHECK(b1.axxx == b0.axxx);
  }

  SECTION("support touching the collar is rejected") {
    CHECK_THROWS_AS(bump_perturb(m0, 0.1, 0.0, 0.2, 0.01), std::invalid_argument);
  }
}

TEST_CASE("invariant: |G + axx/a| < 1e-10 on 200 random points per catalog metric") {
  std::mt19937_64 rng(3);
  for (const char* name : {"flat_disk", "sphere_cap", "hyperbolic_collar",
                           "flat_polar_annulus"}) {
    const auto m = catalog(name);
    std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1);
    for (int i = 0; i < 200; ++i) {
      const double x = ux(rng), y = uy(rng);
      const AlphaJet j = m.eval(x, y);
      CHECK(std::abs(m.gauss(x, y) + j.axx / j.a) < 1e-10);
    }
  }
}
