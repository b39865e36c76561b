#include "vortexlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

namespace vortexlab {

using std::numbers::pi;

namespace {

constexpr double kWallTol = 1e-12;

bool equal_slope(double mu, double tau_hat) {
  return std::abs(mu - tau_hat) <= kWallTol * std::max(1.0, std::abs(tau_hat));
}

std::vector<int> members(unsigned mask, int r) {
  std::vector<int> out;
  for (int i = 0; i < r; ++i)
    if (mask & (1u << i)) out.push_back(i);
  return out;
}

}  // namespace

void validate(const SplitModel& m) {
  if (m.degrees.empty()) throw Error(ErrorCode::EmptySubobject, "model has no summands");
  if (m.degrees.size() > 20) throw Error(ErrorCode::ConfigInvalid, "too many summands to enumerate");
  if (!(m.vol > 0.0)) throw Error(ErrorCode::ConfigInvalid, "volume must be positive");
  for (int i : m.phi_support)
    if (i < 0 || i >= static_cast<int>(m.degrees.size()))
      throw Error(ErrorCode::ConfigInvalid, "phi support index out of range");
}

double slope(const SplitModel& m, const std::vector<int>& subset) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubobject, "slope of the zero subobject");
  double d = 0.0;
  for (int i : subset) d += m.degrees.at(i);
  return d / static_cast<double>(subset.size());
}

double slope(const BundleSpec& b) {
  if (b.rank < 1) throw Error(ErrorCode::EmptySubobject, "rank must be positive");
  return static_cast<double>(b.degree) / b.rank;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    case Verdict::Wall: return "Wall";
  }
  return "?";
}

StabilityVerdict pair_is_stable(const SplitModel& m, double tau) {
  validate(m);
  const int r = static_cast<int>(m.degrees.size());
  const double tau_hat = tau * m.vol / (4.0 * pi);
  unsigned support = 0;
  for (int i : m.phi_support) support |= 1u << i;
  const unsigned full = (1u << r) - 1;

  StabilityVerdict wall, bad;
  bool has_wall = false, has_bad = false;
  for (unsigned s = 1; s <= full; ++s) {
    auto sub = members(s, r);
    const double mu = slope(m, sub);
    if (equal_slope(mu, tau_hat)) {
      if (!has_wall) {
        wall = {Verdict::Wall, sub, "mu(E') = tau_hat"};
        has_wall = true;
      }
    } else if (mu > tau_hat && !has_bad) {
      bad = {Verdict::Unstable, sub, "mu(E') > tau_hat"};
      has_bad = true;
    }
    if (s == full || (s & support) != support) continue;
    const double muq = slope(m, members(full & ~s, r));
    if (equal_slope(muq, tau_hat)) {
      if (!has_wall) {
        wall = {Verdict::Wall, sub, "mu(E/E') = tau_hat with phi in E'"};
        has_wall = true;
      }
    } else if (muq < tau_hat && !has_bad) {
      bad = {Verdict::Unstable, sub, "mu(E/E') < tau_hat with phi in E'"};
      has_bad = true;
    }
  }
  if (has_bad) return bad;
  if (has_wall) return wall;
  return {Verdict::Stable, {}, ""};
}

StabilityVerdict triple_is_stable(const SplitModel& m1, int line_degree2, double tau, int rank2) {
  if (rank2 != 1)
    throw Error(ErrorCode::RankTwoSecondFactor, "triple stability needs a line bundle as E2");
  SplitModel shifted = m1;
  for (auto& d : shifted.degrees) d -= line_degree2;
  return pair_is_stable(shifted, tau);
}

namespace {

WallSet finish(std::vector<std::pair<std::pair<int, int>, double>> raw) {
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first.second < b.first.second;
  });
  WallSet w;
  for (const auto& [prov, tau] : raw) {
    if (!w.walls.empty() && equal_slope(tau, w.walls.back())) continue;
    w.walls.push_back(tau);
    w.provenance.push_back(prov);
  }
  return w;
}

}  // namespace

WallSet tau_walls(const SplitModel& m) {
  validate(m);
  const int r = static_cast<int>(m.degrees.size());
  std::vector<std::pair<std::pair<int, int>, double>> raw;
  for (unsigned s = 1; s < (1u << r); ++s) {
    auto sub = members(s, r);
    int d = 0;
    for (int i : sub) d += m.degrees[i];
    const int rk = static_cast<int>(sub.size());
    raw.push_back({{d, rk}, 4.0 * pi * d / (rk * m.vol)});
  }
  return finish(std::move(raw));
}

WallSet tau_walls(int d_min, int d_max, int r_max, double vol) {
  std::vector<std::pair<std::pair<int, int>, double>> raw;
  for (int rk = 1; rk <= r_max; ++rk)
    for (int d = d_min; d <= d_max; ++d) raw.push_back({{d, rk}, 4.0 * pi * d / (rk * vol)});
  return finish(std::move(raw));
}

CorrespondenceReport correspondence_smoke_test(const SplitModel& m, double tau,
                                               const TorusGeometry& geom,
                                               const SolveOptions& opts) {
  validate(m);
  if (geom.complex_dim() != 1 || m.degrees.size() > 2)
    throw Error(ErrorCode::HypothesisUnmet, "realizable models are rank <= 2 split on T^2");
  if (std::abs(m.vol - geom.volume()) > 1e-12 * m.vol)
    throw Error(ErrorCode::ConfigInvalid, "model volume differs from the geometry");
  CorrespondenceReport rep;
  rep.verdict = pair_is_stable(m, tau);
  rep.at_wall = rep.verdict.verdict == Verdict::Wall;

  SolveOptions forced = opts;
  forced.force = true;
  rep.solver_converged = true;
  rep.solver_status = "converged";
  for (int i = 0; i < static_cast<int>(m.degrees.size()); ++i) {
    const bool carries_phi =
        std::find(m.phi_support.begin(), m.phi_support.end(), i) != m.phi_support.end();
    const int d = m.degrees[i];
    if (carries_phi) {
      try {
        solve_abelian_vortex({1, d, "L"}, tau, geom, forced);
      } catch (const Error& e) {
        rep.solver_converged = false;
        rep.solver_status = std::string("summand ") + std::to_string(i) + ": " + e.what();
        break;
      }
    } else {
      // phi = 0 on this summand: the constant-curvature connection solves iff 2 pi d / Vol = tau / 2
      const double lam = 2.0 * pi * d / geom.volume();
      if (std::abs(lam - 0.5 * tau) > opts.residual_tol * std::max(1.0, tau)) {
        rep.solver_converged = false;
        rep.solver_status = std::string("summand ") + std::to_string(i) + ": slope is not tau_hat";
        break;
      }
    }
  }
  const bool stable = rep.verdict.verdict == Verdict::Stable;
  const bool unstable = rep.verdict.verdict == Verdict::Unstable;
  rep.consistent = !(rep.solver_converged && unstable) && !(stable && !rep.solver_converged);
  return rep;
}

std::string to_json(const StabilityVerdict& v) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(v.verdict);
  j["witness"] = v.witness;
  j["reason"] = v.reason;
  return j.dump(2);
}

std::string to_json(const WallSet& w) {
  nlohmann::ordered_json j;
  j["walls"] = w.walls;
  j["provenance"] = nlohmann::ordered_json::array();
  for (const auto& [d, r] : w.provenance) j["provenance"].push_back({{"degree", d}, {"rank", r}});
  return j.dump(2);
}

}  // namespace vortexlab
