#include <algorithm>
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vortexlab/functional.hpp"

using namespace vortexlab;
using std::numbers::pi;

TEST_CASE("derived parameters") {
  auto g = build_torus({1.0}, {8});
  auto p = derive_parameters({2, 1, "E1"}, BundleSpec{1, 0, "E2"}, 16 * pi, *g);
  CHECK(p.tau_hat == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(p.sigma == doctest::Approx(2.0 / 11.0).epsilon(1e-14));
  CHECK(p.tau_prime == doctest::Approx(-28 * pi).epsilon(1e-14));
  CHECK(std::abs(4 * pi / p.sigma - 0.5 * (p.tau - p.tau_prime)) < 1e-12 * (4 * pi / p.sigma));
  CHECK(std::abs(p.tau * p.r1 + p.tau_prime * p.r2 - 4 * pi * (p.d1 + p.d2) / p.volume) < 1e-12 * 64 * pi);

  for (double tau : {0.3, 2.0, 17.0}) {
    auto q = derive_parameters({1, 0, "E1"}, BundleSpec{1, 0, "E2"}, tau, *g);
    CHECK(q.tau_prime == doctest::Approx(-tau).epsilon(1e-15));
    CHECK(std::abs(4 * pi / q.sigma - tau) < 1e-12 * tau);
  }

  // (r1 + r2) tau_hat = d1 + d2
  CHECK_THROWS_AS(derive_parameters({1, 1, "E1"}, BundleSpec{1, 1, "E2"}, 4 * pi, *g), Error);
  try {
    derive_parameters({1, 1, "E1"}, BundleSpec{1, 1, "E2"}, 4 * pi, *g);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonpositiveSigmaDenominator);
  }
}

TEST_CASE("energy of trivial states") {
  auto g = build_torus({1.3}, {16}, 0.8);
  FieldState s;
  s.a1 = background_connection({1, 0, "L"}, *g);
  s.phi = {Field(g->size(), 0.0)};
  auto p0 = derive_parameters({1, 0, "L"}, std::nullopt, 0.0, *g);
  auto e0 = ymh_energy(s, p0, *g);
  CHECK(e0.total == 0.0);
  for (double v : ymh_density(s, p0, *g)) CHECK(v == 0.0);

  const double tau = 3.7;
  auto p = derive_parameters({1, 0, "L"}, std::nullopt, tau, *g);
  auto e = ymh_energy(s, p, *g);
  CHECK(e.total == doctest::Approx(0.25 * tau * tau * g->volume()).epsilon(1e-13));
}

TEST_CASE("energy report consistency and Bogomolny bound on random states") {
  auto g = build_torus({1.0}, {32});
  for (int seed = 0; seed < 5; ++seed) {
    auto s = random_state(seed, 4.0, {1, 1, "L"}, std::nullopt, *g);
    auto p = derive_parameters({1, 1, "L"}, std::nullopt, 1.1 * 4 * pi, *g);
    auto e = ymh_energy(s, p, *g);
    CHECK(e.curvature1 >= 0.0);
    CHECK(e.kinetic >= 0.0);
    CHECK(e.potential1 >= 0.0);
    CHECK(std::abs(e.total - (e.curvature1 + e.kinetic + e.potential1)) <= 1e-12 * e.total);
    CHECK(e.defect >= -1e-9);
    CHECK(std::abs(g->integrate(ymh_density(s, p, *g)) - e.total) <= 1e-12 * e.total);
  }
}

TEST_CASE("energy and density are gauge invariant") {
  // exp of a band-limited field is resolved to roundoff only from 64^2 on
  auto g = build_torus({1.0}, {64});
  auto s = random_state(1, 4.0, {2, 0, "E1"}, BundleSpec{1, 0, "E2"}, *g);
  auto p = derive_parameters({2, 0, "E1"}, BundleSpec{1, 0, "E2"}, 5.0, *g);
  auto t = gauge_apply(random_gauge(2, 2, 0.3, *g), random_gauge(3, 1, 0.3, *g), s, *g);
  auto e = ymh_energy(s, p, *g), et = ymh_energy(t, p, *g);
  CHECK(std::abs(e.total - et.total) <= 1e-10 * e.total);

  auto c = gauge_apply(constant_phase_gauge({0.3, -1.1}, *g), constant_phase_gauge({0.7}, *g), s, *g);
  auto d = ymh_density(s, p, *g), dc = ymh_density(c, p, *g);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(d[i] - dc[i]));
  CHECK(worst <= 1e-12 * (1.0 + *std::max_element(d.begin(), d.end())));
}

namespace {

Tangent random_direction(std::uint64_t seed, const FieldState& s, const TorusGeometry& g) {
  BundleSpec b1 = s.a1.bundle;
  std::optional<BundleSpec> b2;
  if (s.a2) b2 = s.a2->bundle;
  auto r = random_state(seed, 4.0, b1, b2, g, {0.5, 0.5});
  Tangent v;
  v.a1 = r.a1.a;
  if (r.a2) v.a2 = r.a2->a;
  v.phi = r.phi;
  return v;
}

double worst_fd_error(const FieldState& s, const ParameterSet& p, const TorusGeometry& g,
                      std::uint64_t seed0) {
  auto grad = ymh_gradient(s, p, g);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    auto v = random_direction(seed0 + k, s, g);
    const double h = 1e-4;
    const double ep = ymh_energy(displace(s, v, h), p, g).total;
    const double em = ymh_energy(displace(s, v, -h), p, g).total;
    const double fd = (ep - em) / (2 * h);
    const double an = pairing(grad, v, g);
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
  }
  return worst;
}

}  // namespace

TEST_CASE("gradient matches finite differences") {
  auto g = build_torus({1.0}, {16}, 1.3);
  auto s = random_state(4, 4.0, {1, 1, "L"}, std::nullopt, *g);
  auto p = derive_parameters({1, 1, "L"}, std::nullopt, 9.0, *g);
  CHECK(worst_fd_error(s, p, *g, 100) < 1e-5);

  auto t = random_state(5, 4.0, {2, 2, "E1"}, BundleSpec{1, 0, "E2"}, *g);
  auto pt = derive_parameters({2, 2, "E1"}, BundleSpec{1, 0, "E2"}, 30.0, *g);
  CHECK(worst_fd_error(t, pt, *g, 200) < 1e-5);

  auto g4 = build_torus({1.0, 1.0}, {8, 8});
  auto s4 = random_state(6, 4.0, {1, 1, "E1"}, BundleSpec{1, 0, "E2"}, *g4);
  auto p4 = derive_parameters({1, 1, "E1"}, BundleSpec{1, 0, "E2"}, 30.0, *g4);
  CHECK(worst_fd_error(s4, p4, *g4, 300) < 1e-5);
}

TEST_CASE("potential gradient vanishes at phi phi^* = tau") {
  auto g = build_torus({1.0}, {8});
  FieldState s;
  s.a1 = background_connection({1, 0, "L"}, *g);
  const double tau = 2.5;
  s.phi = {Field(g->size(), std::polar(std::sqrt(tau), 0.4))};
  auto p = derive_parameters({1, 0, "L"}, std::nullopt, tau, *g);
  CHECK(mat::max_abs(ymh_gradient(s, p, *g).phi) < 1e-10);
}

TEST_CASE("Chern-Weil degree") {
  auto g = build_torus({1.0}, {32});
  for (int d : {0, 1, 2, -3}) {
    auto a = background_connection({1, d, "L"}, *g);
    CHECK(std::abs(chern_weil_degree(a, *g) - d) < 1e-12);
    auto s = random_state(d + 10, 4.0, {1, d, "L"}, std::nullopt, *g);
    CHECK(std::abs(chern_weil_degree(s.a1, *g) - d) < 1e-8);
  }
  auto g4 = build_torus({1.0, 1.0}, {8, 8});
  auto a4 = background_connection({1, 2, "L"}, *g4, {1, 1});
  CHECK(std::abs(chern_weil_degree(a4, *g4) - 2) < 1e-12);
  CHECK(std::abs(ch2_background(a4, *g4) - ch2_quadrature(a4, *g4)) < 1e-10);
  auto s4 = random_state(1, 4.0, {1, 1, "L"}, std::nullopt, *g4);
  CHECK(std::abs(ch2_quadrature(s4.a1, *g4)) < 1e-10);
}

TEST_CASE("threshold classification") {
  auto g = build_torus({1.0}, {8});
  BundleSpec l{1, 1, "L"};
  CHECK(check_threshold(l, 5 * pi, *g) == Threshold::Solvable);
  CHECK(check_threshold(l, 4 * pi, *g) == Threshold::Boundary);
  CHECK(check_threshold(l, 2 * pi, *g) == Threshold::Obstructed);
}
