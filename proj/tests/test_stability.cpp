#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vortexlab/stability.hpp"

using namespace vortexlab;
using std::numbers::pi;

namespace {

double tau_of(double tau_hat, double vol = 1.0) { return 4 * pi * tau_hat / vol; }

}  // namespace

TEST_CASE("slopes") {
  SplitModel m{{3, 1, 2, 0, 0, 0}, {}, 1.0};
  CHECK(slope(m, {0}) == 3.0);
  CHECK(slope(m, {1, 2}) == 1.5);
  CHECK(slope(m, {3, 4, 5}) == 0.0);
  CHECK_THROWS_AS(slope(m, {}), Error);
  CHECK(slope(BundleSpec{2, 3, "E"}) == 1.5);
}

TEST_CASE("pair stability examples") {
  auto v = pair_is_stable({{0}, {0}, 1.0}, tau_of(1.0));
  CHECK(v.verdict == Verdict::Stable);

  v = pair_is_stable({{2, 0}, {1}, 1.0}, tau_of(1.0));
  CHECK(v.verdict == Verdict::Unstable);
  CHECK(v.witness == std::vector<int>{0});

  v = pair_is_stable({{2, 0}, {1}, 1.0}, tau_of(2.0));
  CHECK(v.verdict == Verdict::Wall);

  // phi in a destabilizing position: quotient slope too small
  v = pair_is_stable({{0, 0}, {0}, 1.0}, tau_of(0.5));
  CHECK(v.verdict == Verdict::Unstable);

  v = pair_is_stable({{1}, {0}, 1.0}, tau_of(0.9));
  CHECK(v.verdict == Verdict::Unstable);
  v = pair_is_stable({{1}, {0}, 1.0}, tau_of(1.1));
  CHECK(v.verdict == Verdict::Stable);
}

TEST_CASE("triple stability reduces to the twisted pair") {
  SplitModel m{{2, 0}, {1}, 1.0};
  for (double th : {0.5, 1.0, 1.5, 2.0, 3.0})
    CHECK(triple_is_stable(m, 0, tau_of(th)).verdict == pair_is_stable(m, tau_of(th)).verdict);
  auto t = triple_is_stable({{1}, {0}, 1.0}, 1, tau_of(0.5));
  auto p = pair_is_stable({{0}, {0}, 1.0}, tau_of(0.5));
  CHECK(t.verdict == p.verdict);
  try {
    triple_is_stable(m, 0, 1.0, 2);
    FAIL("expected RankTwoSecondFactor");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankTwoSecondFactor);
  }
}

TEST_CASE("wall sets") {
  auto w = tau_walls(SplitModel{{2, 0}, {1}, 1.0});
  REQUIRE(w.walls.size() == 3);
  CHECK(w.walls[0] == doctest::Approx(0.0));
  CHECK(w.walls[1] == doctest::Approx(4 * pi));
  CHECK(w.walls[2] == doctest::Approx(8 * pi));
  for (std::size_t i = 0; i < w.walls.size(); ++i) {
    const auto [d, r] = w.provenance[i];
    CHECK(w.walls[i] == doctest::Approx(4 * pi * d / r));
  }
  auto single = tau_walls(SplitModel{{3}, {0}, 2.0});
  REQUIRE(single.walls.size() == 1);
  CHECK(single.walls[0] == doctest::Approx(4 * pi * 3 / 2.0));

  auto b = tau_walls(-1, 2, 2, 1.0);
  CHECK(std::is_sorted(b.walls.begin(), b.walls.end()));
  CHECK(std::adjacent_find(b.walls.begin(), b.walls.end()) == b.walls.end());
}

TEST_CASE("Wall verdicts coincide with the wall set") {
  for (const SplitModel& m : {SplitModel{{2, 0}, {1}, 1.0}, SplitModel{{3, -1, 1}, {0, 2}, 1.5},
                              SplitModel{{1, 1}, {0}, 0.7}}) {
    auto w = tau_walls(m);
    // on a wall the verdict is Wall unless another subobject already destabilizes
    for (double t : w.walls) CHECK(pair_is_stable(m, t).verdict != Verdict::Stable);
    // constant between consecutive walls
    std::vector<double> edges = w.walls;
    edges.insert(edges.begin(), w.walls.front() - 5.0);
    edges.push_back(w.walls.back() + 5.0);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const auto ref = pair_is_stable(m, 0.5 * (edges[i] + edges[i + 1])).verdict;
      CHECK(ref != Verdict::Wall);
      for (double f : {0.1, 0.3, 0.7, 0.9})
        CHECK(pair_is_stable(m, edges[i] + f * (edges[i + 1] - edges[i])).verdict == ref);
    }
    // Wall only ever at a wall
    for (double t = w.walls.front() - 3.0; t < w.walls.back() + 3.0; t += 0.05) {
      if (pair_is_stable(m, t).verdict != Verdict::Wall) continue;
      bool found = false;
      for (double x : w.walls) found = found || std::abs(x - t) <= 1e-12 * std::max(1.0, std::abs(t));
      CHECK(found);
    }
  }
}

TEST_CASE("permutation and twist invariance") {
  SplitModel m{{3, -1, 1}, {0, 2}, 1.0};
  SplitModel p{{1, 3, -1}, {1, 0}, 1.0};
  for (double th = -2.0; th <= 4.0; th += 0.37) {
    const auto v = pair_is_stable(m, tau_of(th)).verdict;
    CHECK(pair_is_stable(p, tau_of(th)).verdict == v);
    SplitModel tw = m;
    for (auto& d : tw.degrees) d += 2;
    CHECK(pair_is_stable(tw, tau_of(th + 2)).verdict == v);
  }
}

TEST_CASE("stability agrees with the solver on rank-one models") {
  auto g = build_torus({1.0}, {32});
  SplitModel m{{1}, {0}, 1.0};
  for (double th : {0.7, 0.9, 0.95, 1.05, 1.1, 1.3}) {
    auto rep = correspondence_smoke_test(m, tau_of(th), *g);
    CHECK(rep.consistent);
    CHECK(rep.solver_converged == (th > 1.0));
    CHECK((rep.verdict.verdict == Verdict::Stable) == (th > 1.0));
  }
  // split model with an unsupported summand: solvable only at its wall
  SplitModel s{{0, 1}, {0}, 1.0};
  auto at = correspondence_smoke_test(s, tau_of(1.0), *g);
  CHECK(at.at_wall);
  CHECK(at.solver_converged);
  CHECK(at.consistent);
  auto off = correspondence_smoke_test(s, tau_of(1.2), *g);
  CHECK_FALSE(off.solver_converged);
  CHECK(off.verdict.verdict == Verdict::Unstable);
  CHECK(off.consistent);
}
