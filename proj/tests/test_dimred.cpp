#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vortexlab/dimred.hpp"
#include "vortexlab/spectral.hpp"

using namespace vortexlab;
using std::numbers::pi;

namespace {

TripleState zero_triple(const BundleSpec& b1, const BundleSpec& b2, const TorusGeometry& g) {
  TripleState t;
  t.a1 = background_connection(b1, g);
  t.a2 = background_connection(b2, g);
  t.phi = mat::zeros(b1.rank, b2.rank, g.size());
  return t;
}

}  // namespace

TEST_CASE("zero fields: only the fiber block of E2 survives") {
  auto g = build_torus({1.0}, {16});
  BundleSpec b1{2, 0, "E1"}, b2{1, 0, "E2"};
  auto p = derive_parameters(b1, b2, 7.0, *g);
  auto t = zero_triple(b1, b2, *g);
  auto blocks = assemble_reduced_curvature(t, p, *g);
  CHECK(mat::max_abs(blocks.fiber1) == 0.0);
  for (const auto& m : blocks.mixed) CHECK(mat::max_abs(m) == 0.0);
  // |-4 pi i / sigma I_E2|^2 = 16 pi^2 r2 / sigma^2
  const double expected = 16 * pi * pi * p.r2 / (p.sigma * p.sigma);
  for (double v : blocks.norm2) CHECK(std::abs(v - expected) <= 1e-12 * expected);

  // c(tau) is the zero-field value of |F|^2_sigma - e_tau
  const double e0 = 0.25 * (p.tau * p.tau * p.r1 + p.tau_prime * p.tau_prime * p.r2);
  CHECK(std::abs(expected - e0 - p.c_tau) <= 1e-12 * expected);
  CHECK(verify_density_identity(t, p, *g) <= 1e-12 * expected);
  CHECK(verify_integral_identity(t, p, *g).gap <= 1e-14);
}

TEST_CASE("bilinearity of the Higgs blocks") {
  auto g = build_torus({1.0}, {16});
  auto t = random_state(3, 6.0, {1, 1, "E1"}, BundleSpec{1, 0, "E2"}, *g);
  auto p = derive_parameters({1, 1, "E1"}, BundleSpec{1, 0, "E2"}, 20.0, *g);
  auto b = assemble_reduced_curvature(t, p, *g);
  auto t2 = t;
  for (auto& e : t2.phi)
    for (auto& v : e) v *= 2.0;
  auto b2 = assemble_reduced_curvature(t2, p, *g);
  for (std::size_t q = 0; q < g->size(); q += 7) {
    CHECK(std::abs(b2.fiber1[0][q] - 4.0 * b.fiber1[0][q]) <= 1e-12 * (1 + std::abs(b2.fiber1[0][q])));
    CHECK(std::abs(b2.mixed[1][0][q] - 2.0 * b.mixed[1][0][q]) <= 1e-12 * (1 + std::abs(b2.mixed[1][0][q])));
  }
}

TEST_CASE("density and integral identities on random triples") {
  auto g = build_torus({1.0}, {32});
  for (int seed = 0; seed < 10; ++seed) {
    const bool big = seed % 2 == 1;
    BundleSpec b1{big ? 2 : 1, big ? 2 : 1, "E1"}, b2{1, 0, "E2"};
    auto t = random_state(seed, 6.0, b1, b2, *g);
    auto p = derive_parameters(b1, b2, 25.0, *g);
    auto e = ymh_density(t, p, *g);
    double scale = 1.0;
    for (double v : e) scale = std::max(scale, v);
    CHECK(verify_density_identity(t, p, *g) <= 1e-12 * scale);
    CHECK(verify_integral_identity(t, p, *g).gap <= 1e-12);
  }
}

TEST_CASE("identity residual is gauge invariant") {
  auto g = build_torus({1.0}, {64});
  BundleSpec b1{2, 0, "E1"}, b2{1, 0, "E2"};
  auto t = random_state(4, 6.0, b1, b2, *g);
  auto p = derive_parameters(b1, b2, 9.0, *g);
  auto u = gauge_apply(random_gauge(1, 2, 0.3, *g), random_gauge(2, 1, 0.3, *g), t, *g);
  auto i0 = verify_integral_identity(t, p, *g), i1 = verify_integral_identity(u, p, *g);
  CHECK(std::abs(i0.lhs - i1.lhs) <= 1e-10 * i0.lhs);
  CHECK(std::abs(i0.rhs - i1.rhs) <= 1e-10 * i0.rhs);
  CHECK(verify_density_identity(u, p, *g) <= 1e-10);
}

TEST_CASE("HYM on M x S^2 iff coupled vortex") {
  auto g = build_torus({1.0}, {64});
  SolveOptions o;
  o.residual_tol = 1e-8;
  auto v = solve_abelian_vortex({1, 1, "L"}, 1.1 * 4 * pi, *g, o);
  auto c = embed_vortex_as_coupled(v, *g, o);
  auto rep = hym_equivalence_check(c.state, c.params, *g);
  CHECK(rep.hym.max() <= 1e-8);
  CHECK(rep.vortex.max() <= 1e-8);
  CHECK(rep.consistent);
  CHECK(rep.max_pointwise_residual <= 1e-10);

  // decoupled: phi = 0 with both connections at their slopes
  BundleSpec b1{1, 1, "E1"}, b2{1, 0, "E2"};
  auto p = derive_parameters(b1, b2, 4 * pi / g->volume(), *g);
  auto t = zero_triple(b1, b2, *g);
  auto d = hym_equivalence_check(t, p, *g);
  CHECK(d.hym.max() <= 1e-10);
  CHECK(d.vortex.max() <= 1e-10);

  // break only the E2 equation by delta cos(2 pi x)
  const double delta = 0.3;
  RealField w(g->size());
  std::vector<int> mi(2);
  for (std::size_t q = 0; q < g->size(); ++q) {
    g->unravel(q, mi);
    w[q] = -delta * std::cos(2 * pi * g->coord(0, mi[0])) / (4 * pi * pi);
  }
  Field wc(w.begin(), w.end());
  auto wx = spectral::deriv(wc, *g, 0), wy = spectral::deriv(wc, *g, 1);
  for (std::size_t q = 0; q < g->size(); ++q) {
    t.a2->a[0][0][q] = cplx(0.0, -wy[q].real());
    t.a2->a[1][0][q] = cplx(0.0, wx[q].real());
  }
  auto broken = hym_equivalence_check(t, p, *g);
  CHECK(broken.hym.get("lambda_E2") >= delta / 2);
  CHECK(broken.hym.get("lambda_E1") <= 1e-10);
  CHECK(broken.vortex.get("curvature2") >= delta / 2);
  CHECK(broken.consistent);
}

TEST_CASE("dimensional reduction rejects vortices") {
  auto g = build_torus({1.0}, {8});
  auto s = random_state(1, 4.0, {1, 1, "L"}, std::nullopt, *g);
  auto p = derive_parameters({1, 1, "L"}, std::nullopt, 20.0, *g);
  CHECK_THROWS_AS(assemble_reduced_curvature(s, p, *g), Error);
}
