// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "vortexlab/analysis.hpp"
#include "vortexlab/dimred.hpp"
#include "vortexlab/io.hpp"
#include "vortexlab/stability.hpp"

using namespace vortexlab;
using std::numbers::pi;

namespace {

constexpr double kEnergyTol = 1e-5;        // 1: relative
constexpr double kBogomolnyLimit = 60.0;   // 1: seconds
constexpr double kThresholdLimit = 300.0;  // 2: seconds
constexpr double kDensityTol = 1e-10;      // 3: absolute, pointwise
constexpr double kDensityLimit = 120.0;    // 3: seconds
constexpr double kIntegralTol = 1e-8;      // 4: relative
constexpr double kConstantsTol = 1e-12;    // 4: relative
constexpr double kGradientTol = 1e-5;      // 5: relative, floor 1e-3 on the pairing
constexpr double kDegreeTol = 1e-8;        // 6
constexpr double kEmbedTol = 1e-8;         // 7
constexpr double kElRatio = 3.0;           // 8
constexpr double kElLimit = 600.0;         // 8: seconds
constexpr double kMonotoneSlack = 1e-3;    // 9
constexpr double kThetaTol = 0.05;         // 10: relative

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome bogomolny_minimum() {
  const auto t0 = std::chrono::steady_clock::now();
  auto g = build_torus({1.0}, {128});
  const double tau = 1.1 * 4 * pi;
  auto sol = solve_abelian_vortex({1, 1, "L"}, tau, *g, {});
  const double rel = std::abs(sol.energy.total - 2 * pi * tau) / (2 * pi * tau);
  const double secs = seconds_since(t0);
  return {rel <= kEnergyTol && secs < kBogomolnyLimit,
          fmt("|E - 2 pi tau| / 2 pi tau = %.2e, residual %.2e, %.1f s", rel, sol.residuals.max(), secs)};
}

Outcome existence_threshold() {
  const auto t0 = std::chrono::steady_clock::now();
  auto g = build_torus({1.0}, {64});
  BundleSpec l{1, 1, "L"};
  bool ok = true;
  std::string detail;
  for (double f : {1.05, 1.1, 1.3}) {
    try {
      auto s = solve_abelian_vortex(l, f * 4 * pi, *g, {});
      detail += fmt("%.2f converged; ", f);
    } catch (const Error& e) {
      ok = false;
      detail += fmt("%.2f ", f) + to_string(e.code()) + "; ";
    }
  }
  SolveOptions forced;
  forced.force = true;
  for (double f : {0.7, 0.9, 0.95}) {
    try {
      solve_abelian_vortex(l, f * 4 * pi, *g, forced);
      ok = false;
      detail += fmt("%.2f converged; ", f);
    } catch (const Error& e) {
      ok = ok && e.code() == ErrorCode::Diverged;
      detail += fmt("%.2f ", f) + to_string(e.code()) + "; ";
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < kThresholdLimit, detail + fmt("%.1f s", secs)};
}

struct RandomTriple {
  TripleState t;
  ParameterSet p;
};

RandomTriple random_triple(int i, const TorusGeometry& g) {
  const bool big = i % 2 == 1;
  BundleSpec b1{big ? 2 : 1, big ? 2 : 1, "E1"}, b2{1, 0, "E2"};
  const double tau = 20.0 + 0.37 * i;
  return {random_state(1000 + i, 6.0, b1, b2, g), derive_parameters(b1, b2, tau, g)};
}

Outcome density_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  auto g = build_torus({1.0}, {64});
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto r = random_triple(i, *g);
    worst = std::max(worst, verify_density_identity(r.t, r.p, *g));
  }
  const double secs = seconds_since(t0);
  return {worst <= kDensityTol && secs < kDensityLimit,
          fmt("max pointwise residual %.2e over 100 triples, %.1f s", worst, secs)};
}

Outcome integral_identity() {
  auto g = build_torus({1.0}, {64});
  double gap = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto r = random_triple(i, *g);
    gap = std::max(gap, verify_integral_identity(r.t, r.p, *g).gap);
  }
  double sigma_gap = 0.0, cw_gap = 0.0;
  for (const double vol : {1.0, 2.25}) {
    auto gv = build_torus({std::sqrt(vol)}, {8});
    for (int r1 : {1, 2, 3})
      for (int d1 = -2; d1 <= 3; ++d1)
        for (int d2 : {-1, 0, 2})
          for (double tau : {0.5, 7.0, 30.0}) {
            ParameterSet p;
            try {
              p = derive_parameters({r1, d1, "E1"}, BundleSpec{1, d2, "E2"}, tau, *gv);
            } catch (const Error&) {
              continue;
            }
            const double a = 4 * pi / p.sigma, b = 0.5 * (p.tau - p.tau_prime);
            sigma_gap = std::max(sigma_gap, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}));
            const double lhs = p.tau * p.r1 + p.tau_prime * p.r2, rhs = 4 * pi * (p.d1 + p.d2) / p.volume;
            cw_gap = std::max(cw_gap, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0}));
          }
  }
  return {gap <= kIntegralTol && sigma_gap <= kConstantsTol && cw_gap <= kConstantsTol,
          fmt("integral gap %.2e, sigma forms %.2e, Chern-Weil constraint %.2e", gap, sigma_gap, cw_gap)};
}

Outcome gradient_check() {
  auto g = build_torus({1.0}, {16}, 1.3);
  auto g4 = build_torus({1.0, 1.0}, {8, 8});
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const TorusGeometry& gk = k < 8 ? *g : *g4;
    FieldState s;
    ParameterSet p;
    if (k % 3 == 0) {
      BundleSpec b{1, k % 2, "L"};
      s = random_state(200 + k, 4.0, b, std::nullopt, gk);
      p = derive_parameters(b, std::nullopt, 9.0 + k, gk);
    } else {
      BundleSpec b1{k % 3 == 2 && k < 8 ? 2 : 1, k % 3 == 2 && k < 8 ? 2 : 1, "E1"}, b2{1, 0, "E2"};
      s = random_state(200 + k, 4.0, b1, b2, gk);
      p = derive_parameters(b1, b2, 30.0, gk);
    }
    auto grad = ymh_gradient(s, p, gk);
    for (int d = 0; d < 10; ++d) {
      auto r = random_state(5000 + 10 * k + d, 4.0, s.a1.bundle,
                            s.a2 ? std::optional(s.a2->bundle) : std::nullopt, gk, {0.5, 0.5});
      Tangent v;
      v.a1 = r.a1.a;
      if (r.a2) v.a2 = r.a2->a;
      v.phi = r.phi;
      const double h = 1e-4;
      const double fd = (ymh_energy(displace(s, v, h), p, gk).total -
                         ymh_energy(displace(s, v, -h), p, gk).total) / (2 * h);
      const double an = pairing(grad, v, gk);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
    }
  }
  return {worst <= kGradientTol, fmt("worst relative error %.2e over 100 directions", worst)};
}

Outcome chern_weil_integrality() {
  auto g2 = build_torus({1.0}, {32});
  auto g4 = build_torus({1.0, 1.0}, {8, 8});
  double worst = 0.0;
  bool right = true;
  for (int i = 0; i < 50; ++i) {
    const bool four = i % 5 == 4;
    const int d = (i % 7) - 3;
    const auto& g = four ? *g4 : *g2;
    auto s = random_state(300 + i, 4.0, {1, d, "L"}, std::nullopt, g, {0.5, 1.0});
    const double deg = chern_weil_degree(s.a1, g);
    worst = std::max(worst, std::abs(deg - std::round(deg)));
    right = right && std::lround(deg) == d;
  }
  return {worst <= kDegreeTol && right, fmt("max |deg - round(deg)| = %.2e over 50 states", worst)};
}

Outcome coupled_embedding() {
  auto g = build_torus({1.0}, {64});
  SolveOptions o;
  o.residual_tol = 1e-9;
  auto v = solve_abelian_vortex({1, 1, "L"}, 1.1 * 4 * pi, *g, o);
  auto c = embed_vortex_as_coupled(v, *g, o);
  const double r = c.residuals.max();
  auto doubled = v.state;
  for (auto& e : doubled.phi)
    for (auto& z : e) z *= 2.0;
  bool rejected = false;
  try {
    solve_second_connection(doubled, -v.params.tau, *g, o);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::IncompatibleTopology;
  }
  return {r <= kEmbedTol && rejected,
          fmt("coupled residuals %.2e (curvature1 %.2e, curvature2 %.2e); ", r, c.residuals.get("curvature1"),
              c.residuals.get("curvature2")) +
              (rejected ? "inconsistent data rejected" : "inconsistent data accepted")};
}

Outcome euler_lagrange() {
  const auto t0 = std::chrono::steady_clock::now();
  SolveOptions o;
  o.residual_tol = 1e-9;
  std::vector<double> res;
  for (int n : {16, 32}) {
    auto g = build_torus({1.0, 1.0}, {n, n});
    auto v = solve_abelian_vortex({1, 2, "L"}, 1.1 * 8 * pi, *g, o, nullptr, {1, 1});
    auto c = embed_vortex_as_coupled(v, *g, o);
    res.push_back(euler_lagrange_residual(c.state, c.params, *g).max());
  }
  const double ratio = res[0] / res[1];
  const double secs = seconds_since(t0);
  return {ratio >= kElRatio && secs < kElLimit,
          fmt("residual %.3e at 16^4, %.3e at 32^4, ratio %.2f", res[0], res[1], ratio) + fmt(", %.1f s", secs)};
}

Outcome monotonicity() {
  auto g = build_torus({1.0, 1.0}, {32, 32});
  auto a = background_connection({1, 2, "L"}, *g, {1, 1});
  auto e = curvature_norm2(curvature(a, *g), *g);
  std::vector<double> radii;
  for (int i = 0; i <= 20; ++i) radii.push_back(0.05 + 0.01 * i);
  auto prof = scaled_energy_profile(e, {0.25, 0.5, 0.5, 0.75}, radii, *g);
  auto v = monotonicity_check(prof, kMonotoneSlack);
  return {v.monotone, fmt("worst violation %.2e at r = %.2f over 21 radii in [0.05, 0.25]", v.worst_violation,
                          v.at_radius)};
}

Outcome concentration() {
  auto g = build_torus({1.0, 1.0}, {16, 16});
  std::mt19937_64 rng(3);
  auto bg = random_periodic(rng, 6.0, 0.1, *g);
  for (auto& v : bg) v += 1.0;
  const std::vector<double> x0{0.25, 0.5, 0.75, 0.5}, x1{0.75, 0.0, 0.25, 0.0};
  const double E0 = 8 * pi * pi, E1 = 4.0;
  std::vector<RealField> one, two;
  for (double lam : {0.1, 0.06, 0.04, 0.035}) {
    one.push_back(synthetic_bump_density({x0}, {E0}, lam, bg, *g));
    two.push_back(synthetic_bump_density({x0, x1}, {E0, E1}, lam, bg, *g));
  }
  const std::vector<double> sched{0.3, 0.2, 0.15};
  auto near = [&](const std::vector<double>& p, const std::vector<double>& x) {
    for (int a = 0; a < 4; ++a)
      if (std::abs(p[a] - x[a]) > 0.5 * g->spacing(a)) return false;
    return true;
  };
  auto r1 = concentration_detect(one, 1.0, sched, *g, 2);
  auto r2 = concentration_detect(two, 1.0, sched, *g, 2);
  bool ok = r1.clusters.size() == 1 && near(r1.clusters[0].point, x0) &&
            std::abs(r1.clusters[0].theta - E0) <= kThetaTol * E0;
  double err1 = r1.clusters.empty() ? 1.0 : std::abs(r1.clusters[0].theta - E0) / E0;
  double err2 = 1.0;
  if (r2.clusters.size() == 2) {
    const auto& c0 = r2.clusters[0];
    const auto& c1 = r2.clusters[1];
    ok = ok && near(c0.point, x0) && near(c1.point, x1);
    err2 = std::max(std::abs(c0.theta - E0) / E0, std::abs(c1.theta - E1) / E1);
  } else {
    ok = false;
  }
  ok = ok && err2 <= kThetaTol;
  return {ok, fmt("single point Theta error %.2e; two points resolved with errors <= %.2e (%.0f clusters)", err1,
                  err2, static_cast<double>(r2.clusters.size()))};
}

Outcome stability_correspondence() {
  auto g = build_torus({1.0}, {32});
  SplitModel m{{1}, {0}, 1.0};
  bool ok = true;
  int agree = 0;
  for (double th : {0.7, 0.8, 0.9, 0.95, 1.05, 1.1, 1.3}) {
    auto rep = correspondence_smoke_test(m, 4 * pi * th, *g);
    const bool stable = rep.verdict.verdict == Verdict::Stable;
    if (stable == rep.solver_converged) ++agree;
    ok = ok && stable == rep.solver_converged;
  }
  // wall sets against the verdicts on a dense scan of rank-one models
  int checked = 0;
  for (int d = -2; d <= 3; ++d)
    for (double vol : {1.0, 1.5}) {
      SplitModel r{{d}, {0}, vol};
      auto w = tau_walls(r);
      ok = ok && w.walls.size() == 1;
      for (double t : w.walls) ok = ok && pair_is_stable(r, t).verdict == Verdict::Wall;
      for (int k = -400; k <= 400; ++k) {
        const double t = 4 * pi * d / vol + 0.013 * k;
        const bool wall = pair_is_stable(r, t).verdict == Verdict::Wall;
        ok = ok && wall == (k == 0);
        ++checked;
      }
    }
  return {ok, fmt("Stable <=> converged at %.0f/7 tau values; %.0f scan points match the wall sets",
                  static_cast<double>(agree), static_cast<double>(checked))};
}

Outcome determinism() {
  auto run = [] {
    auto g = build_torus({1.0}, {64});
    auto v = solve_abelian_vortex({1, 1, "L"}, 1.2 * 4 * pi, *g, {});
    auto c = embed_vortex_as_coupled(v, *g, {});
    std::vector<io::SweepRow> rows;
    SolveOptions forced;
    forced.force = true;
    for (double th : {0.9, 1.1}) {
      io::SweepRow r{4 * pi * th, to_string(check_threshold({1, 1, "L"}, 4 * pi * th, *g)), "converged"};
      try {
        r.energy = solve_abelian_vortex({1, 1, "L"}, 4 * pi * th, *g, forced).energy;
        r.has_energy = true;
      } catch (const Error& e) {
        r.status = to_string(e.code());
      }
      rows.push_back(r);
    }
    auto g4 = build_torus({1.0, 1.0}, {8, 8});
    auto t = random_state(9, 4.0, {1, 1, "E1"}, BundleSpec{1, 0, "E2"}, *g4);
    return io::encode_state(v.state, *g, 1) + io::certificate_json(v, *g, 1) +
           io::encode_state(c.state, *g, 1) + io::certificate_json(c, *g, 1) + io::sweep_csv(rows) +
           io::encode_state(t, *g4, 9);
  };
  const auto a = run(), b = run(), c = run();
  return {a == b && b == c, fmt("3 runs, %.0f bytes each, ", static_cast<double>(a.size())) +
                                (a == b && b == c ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Bogomolny minimum on the degree-1 line bundle", bogomolny_minimum},
      {"existence threshold", existence_threshold},
      {"pointwise curvature identity on M x S^2", density_identity},
      {"integral identity and constants", integral_identity},
      {"gradient vs finite differences", gradient_check},
      {"Chern-Weil integrality", chern_weil_integrality},
      {"coupled embedding", coupled_embedding},
      {"Euler-Lagrange convergence under refinement", euler_lagrange},
      {"monotonicity of the HYM profile on T^4", monotonicity},
      {"concentration detection", concentration},
      {"stability / solver correspondence", stability_correspondence},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
