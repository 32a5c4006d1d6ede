#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lensrig/geodesic.hpp"
#include "lensrig/metric.hpp"

using namespace lensrig;

TEST_CASE("polar_dir: components and g-norm") {
  const auto m = flat_disk(2.0);
  auto [dx, dy] = polar_dir(m, 0.5, 0.0, M_PI / 2.0);
  CHECK(dx == Catch::Approx(1.0).margin(1e-15));
  CHECK(dy == Catch::Approx(0.0).margin(1e-15));
  auto [dx0, dy0] = polar_dir(m, 0.5, 0.0, 0.0);
  CHECK(dx0 == Catch::Approx(0.0).margin(1e-15));
  CHECK(dy0 == Catch::Approx(1.0 / 1.5).epsilon(1e-14));
  // g-norm 1: dx^2 + alpha^2 dy^2 = 1
  for (double th : {0.3, 1.1, 2.5}) {
    auto [a, b] = polar_dir(m, 0.4, 0.2, th);
    const double al = m.alpha(0.4, 0.2);
    CHECK(a * a + al * al * b * b == Catch::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("flow: radial geodesics are exact meridians") {
  const auto fd = flat_disk(2.0);
  const auto s = flow(fd, {0.0, 0.0, M_PI / 2.0}, 0.7);
  CHECK(s.x == Catch::Approx(0.7).margin(1e-12));
  CHECK(s.y == Catch::Approx(0.0).margin(1e-15));
  CHECK(s.theta == Catch::Approx(M_PI / 2.0).margin(1e-15));

  const auto sc = sphere_cap(M_PI / 3.0);
  const auto s2 = flow(sc, {0.1, 0.3, M_PI / 2.0}, 0.2);
  CHECK(s2.x == Catch::Approx(0.3).margin(1e-12));
  CHECK(s2.y == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("flow: flat chord matches the Euclidean straight-line oracle") {
  const double R = 2.0;
  const auto m = flat_disk(R);
  const double th = M_PI / 4.0, t = 0.5;
  const auto s = flow(m, {0.0, 0.0, th}, t);
  // Euclidean oracle: start at (R, 0) in Cartesian, direction making angle th
  // with the (counterclockwise) boundary tangent (0,1); inward component -sin(th).
  const double px = R - t * std::sin(th);
  const double py = t * std::cos(th);
  const double r = std::hypot(px, py);
  const double phi = std::atan2(py, px);
  CHECK(s.x == Catch::Approx(R - r).margin(1e-8));
  CHECK(s.y == Catch::Approx(phi).margin(1e-8));
}

TEST_CASE("exit_time: flat chord lengths") {
  const double R = 2.0;
  const auto m = flat_disk(R);
  SECTION("theta = pi/4 chord") {
    const auto e = exit_time(m, {0.0, 0.0, M_PI / 4.0});
    REQUIRE(e.exited);
    CHECK(e.boundary == Boundary::X0);
    CHECK(e.length == Catch::Approx(2 * R * std::sin(M_PI / 4.0)).margin(1e-8));
  }
  SECTION("diameter through the fold") {
    const auto e = exit_time(m, {0.0, 0.0, M_PI / 2.0});
    REQUIRE(e.exited);
    CHECK(e.boundary == Boundary::XMax);
    CHECK(e.length == Catch::Approx(2 * R).margin(1e-8));
  }
  SECTION("tangential limit") {
    const auto e = exit_time(m, {0.0, 0.0, 0.02});
    REQUIRE(e.exited);
    CHECK(e.length == Catch::Approx(2 * R * std::sin(0.02)).margin(1e-7));
  }
}

TEST_CASE("scattering: flat disk record matches tangent-chord oracle") {
  const double R = 2.0;
  const auto m = flat_disk(R);
  const double th = M_PI / 4.0;
  const auto rec = scattering(m, {0.0, 0.0, th}, kDefaultStep, R);
  REQUIRE(rec.exited);
  CHECK(rec.length == Catch::Approx(2 * R * std::sin(th)).margin(1e-8));
  // boundary arc offset = R * (angle offset) = 2R*theta  =>  delta y = 2*theta
  CHECK(rec.exit.y - rec.entry.y == Catch::Approx(2 * th).margin(1e-8));
  // angle of incidence equals angle of emergence (chart theta runs to -th)
  CHECK(std::abs(rec.exit.theta) == Catch::Approx(th).margin(1e-8));
  CHECK(std::sin(rec.exit.theta) < 0.0);  // outward

  CHECK_THROWS_AS(scattering(m, {0.0, 0.0, -0.3}), std::invalid_argument);
}

TEST_CASE("scattering: sphere cap matches the great-circle oracle") {
  const double r0 = M_PI / 3.0;
  const auto m = sphere_cap(r0);
  // Ambient R^3 oracle: boundary circle at colatitude r0, entry at longitude 0.
  auto oracle = [&](double th) {
    // chord length: cos(rho_min) cos(l/2) = cos(r0), Clairaut sin(rho_min)=sin(r0)cos(th)
    const double srm = std::sin(r0) * std::cos(th);
    const double crm = std::sqrt(1.0 - srm * srm);
    return 2.0 * std::acos(std::min(1.0, std::cos(r0) / crm));
  };
  for (double th : {0.3, 0.8, 1.2}) {
    const auto rec = scattering(m, {0.0, 0.1, th}, 2e-4, r0);
    REQUIRE(rec.exited);
    CHECK(rec.length == Catch::Approx(oracle(th)).margin(1e-7));
    CHECK(std::abs(rec.exit.theta) == Catch::Approx(th).margin(1e-7));
  }
  // pole-crossing meridian
  const auto rec = scattering(m, {0.0, 0.1, M_PI / 2.0}, kDefaultStep, r0);
  REQUIRE(rec.exited);
  CHECK(rec.length == Catch::Approx(2 * r0).margin(1e-10));
  CHECK(rec.exit.y == Catch::Approx(0.1 + M_PI).margin(1e-12));
}

TEST_CASE("extended_scattering: mask semantics") {
  const double R = 2.0;
  const auto m = flat_disk(R);
  SECTION("empty unknown region behaves like flow") {
    RegionMask all_known{[](double, double) { return Region::Known; }};
    const auto r = extended_scattering(m, all_known, {0.1, 0.0, 1.0}, 0.4);
    REQUIRE(!r.absorbed);
    const auto f = flow(m, {0.1, 0.0, 1.0}, 0.4);
    CHECK(r.state.x == Catch::Approx(f.x).margin(1e-14));
    CHECK(r.state.y == Catch::Approx(f.y).margin(1e-14));
  }
  SECTION("chord missing / hitting an unknown inner disk") {
    // unknown region: x > 1.0 (inner disk of radius 1)
    RegionMask mask = collar_mask(m, 1.0);
    // shallow chord: max depth R(1-cos th) with th=0.5 -> 0.245 < 1.0
    const auto shallow = extended_scattering(m, mask, {0.0, 0.0, 0.5}, 0.9);
    CHECK(!shallow.absorbed);
    // steep chord endpoint deep inside: absorbed
    const auto deep = extended_scattering(m, mask, {0.0, 0.0, 1.5}, 1.5);
    CHECK(deep.absorbed);
  }
}

TEST_CASE("invariants: spray equivalence, unit speed, time reversal, symmetry") {
  std::mt19937_64 rng(17);
  for (const char* name : {"flat_disk", "sphere_cap", "hyperbolic_collar"}) {
    const auto m = catalog(name);
    std::uniform_real_distribution<double> ux(0.0, m.eps1), uy(-m.delta1, m.delta1),
        uth(0.2, M_PI - 0.2);
    for (int i = 0; i < 25; ++i) {
      const double x = ux(rng), y = uy(rng), th = uth(rng);
      const double t = 0.3;
      // spray equivalence against the ambient 2nd-order integrator
      const auto [vx, vy] = polar_dir(m, x, y, th);
      const auto a = ambient_flow(m, {x, y, vx, vy}, t);
      const auto s = flow(m, {x, y, th}, t);
      CHECK(s.x == Catch::Approx(a[0]).margin(1e-8));
      CHECK(s.y == Catch::Approx(a[1]).margin(1e-8));
      // unit speed along the ambient track
      const double al = m.alpha(a[0], a[1]);
      CHECK(std::hypot(a[2], al * a[3]) == Catch::Approx(1.0).margin(1e-10));
      // time reversal
      const auto back = flow(m, s, -t);
      CHECK(back.x == Catch::Approx(x).margin(1e-8));
      CHECK(back.y == Catch::Approx(y).margin(1e-8));
      CHECK(back.theta == Catch::Approx(th).margin(1e-8));
    }
  }
  // length-map symmetry: reverse the exit state and flow back
  const auto m = flat_disk(2.0);
  const auto rec = scattering(m, {0.0, 0.0, 0.9});
  REQUIRE(rec.exited);
  const UnitBundleState rev{rec.exit.x, rec.exit.y, rec.exit.theta + M_PI};
  const auto back = exit_time(m, rev);
  REQUIRE(back.exited);
  CHECK(back.length == Catch::Approx(rec.length).margin(1e-8));
}
