#pragma once

#include <string>
#include <vector>

#include "vortexlab/solvers.hpp"

namespace vortexlab {

// E = L_0 + ... + L_{r-1} over a torus of volume `vol`, phi supported on `phi_support`.
struct SplitModel {
  std::vector<int> degrees;
  std::vector<int> phi_support;
  double vol = 1.0;
};

void validate(const SplitModel& m);

// mean degree of the summands in `subset` (rank = |subset|)
double slope(const SplitModel& m, const std::vector<int>& subset);
double slope(const BundleSpec& b);

enum class Verdict { Stable, Unstable, Wall };
const char* to_string(Verdict v);

struct StabilityVerdict {
  Verdict verdict = Verdict::Stable;
  std::vector<int> witness;  // violating or critical sub-sum
  std::string reason;
};

// Unstable if some comparison fails strictly; otherwise Wall if some comparison
// is an equality within 1e-12.
StabilityVerdict pair_is_stable(const SplitModel& m, double tau);
// (E1 x E2^*, phi) with E2 a line bundle of degree line_degree2; rank2 must be 1.
StabilityVerdict triple_is_stable(const SplitModel& m1, int line_degree2, double tau, int rank2 = 1);

struct WallSet {
  std::vector<double> walls;                  // tau values, strictly increasing
  std::vector<std::pair<int, int>> provenance;  // (sub-degree, sub-rank)
};

WallSet tau_walls(const SplitModel& m);
// every 4 pi d' / (r' vol) with d_min <= d' <= d_max, 1 <= r' <= r_max
WallSet tau_walls(int d_min, int d_max, int r_max, double vol);

struct CorrespondenceReport {
  StabilityVerdict verdict;
  bool solver_converged = false;
  std::string solver_status;
  bool at_wall = false;
  bool consistent = true;
};

// Solves the model's diagonal realization summand by summand (m = 1): summands
// carrying phi are abelian vortices, the others must be HYM of slope tau_hat.
CorrespondenceReport correspondence_smoke_test(const SplitModel& m, double tau,
                                               const TorusGeometry& geom,
                                               const SolveOptions& opts = {});

std::string to_json(const StabilityVerdict& v);
std::string to_json(const WallSet& w);

}  // namespace vortexlab
