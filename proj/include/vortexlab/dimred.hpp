#pragma once

#include <string>

#include "vortexlab/solvers.hpp"

namespace vortexlab {

// SU(2)-invariant connection on M x S^2 assembled from a triple. The S^2
// directions are carried analytically: alpha ^ alpha^* = (i/2) sigma omega_P1,
// |alpha|^2_sigma = 1/2, and sigma omega_P1 has unit norm.
struct ReducedCurvatureSample {
  GridForm base1;               // p^* F_A1
  GridForm base2;               // p^* F_A2
  std::vector<MatField> mixed;  // d_{A1 x A2^*} beta = D_j phi dx_j ^ alpha
  MatField fiber1;              // sigma omega_P1 coefficient of -beta ^ beta^*
  MatField fiber2;              // ... of -4 pi i omega_P1 + beta^* ^ beta
  RealField norm2;              // |F_A|^2_sigma
};

ReducedCurvatureSample assemble_reduced_curvature(const TripleState& t, const ParameterSet& p,
                                                  const TorusGeometry& geom);

// max_x | |F_A|^2_sigma - e_tau - c(tau) |
double verify_density_identity(const TripleState& t, const ParameterSet& p,
                               const TorusGeometry& geom);

struct IntegralIdentity {
  double lhs = 0.0;  // YM_sigma(A)
  double rhs = 0.0;  // sigma YMH_tau + C(tau)
  double gap = 0.0;  // |lhs - rhs| / max(|lhs|, |rhs|, 1)
};

IntegralIdentity verify_integral_identity(const TripleState& t, const ParameterSet& p,
                                          const TorusGeometry& geom);

struct HymEquivalence {
  Residuals hym;     // Lambda F_A - lambda I per diagonal block, F^{0,2}_A
  Residuals vortex;  // coupled vortex residuals
  double constant = 1.0;  // |hym| <= constant |vortex| and vice versa
  bool consistent = true;
  double max_pointwise_residual = 0.0;  // density identity
  double integral_gap = 0.0;
};

HymEquivalence hym_equivalence_check(const TripleState& t, const ParameterSet& p,
                                     const TorusGeometry& geom, double tol = 1e-8);

std::string to_json(const HymEquivalence& r);

}  // namespace vortexlab
