#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vortexlab/functional.hpp"

namespace vortexlab {

struct SolveOptions {
  double residual_tol = 1e-10;
  int max_iters = 200;
  double armijo = 1e-4;
  int max_halvings = 40;
  int energy_increase_limit = 5;  // consecutive increases before Diverged
  double u_ceiling = 30.0;        // |u|_inf ceiling of the scalar reduction
  double conditioning_floor = 1e-12;
  double cg_tol = 1e-13;
  int cg_max_iters = 4000;
  bool force = false;  // run even when the threshold check fails
  std::uint64_t seed = 1;
};

SolveOptions solve_options_from_json(const std::string& text);

struct Residuals {
  std::vector<std::pair<std::string, double>> values;  // name -> max pointwise norm

  double max() const;
  double get(const std::string& name) const;
};

// Independent evaluation of the vortex equations
//   dbar_A phi = 0,  Lambda F_A - (i/2) phi phi^* + (i/2) tau = 0
// and, for triples,
//   Lambda F_A1 - (i/2) phi phi^* + (i/2) tau = 0,
//   Lambda F_A2 + (i/2) phi^* phi + (i/2) tau' = 0,  dbar phi = 0.
Residuals vortex_residuals(const FieldState& s, const ParameterSet& p, const TorusGeometry& geom);

struct VortexSolution {
  FieldState state;
  ParameterSet params;
  Residuals residuals;
  EnergyReport energy;
  int iterations = 0;
  std::vector<double> energy_trace;
  double certificate_gap = 0.0;  // (total - minimum) / max(|minimum|, 1)
  std::string status = "converged";
};

// Kernel element of the background dbar operator on a line bundle of degree
// d >= 1 over T^2, by inverse iteration on dbar^* dbar. Normalized to max |phi0| = 1.
Field holomorphic_section(const BundleSpec& bundle, const TorusGeometry& geom,
                          const SolveOptions& opts, double* kernel_residual = nullptr);

// Abelian vortex by the scalar reduction A = A0 + i(-u_y dx + u_x dy), phi = e^u phi0.
// `phi0` may be passed in; otherwise it is the constant section (deg 0) or the
// numerical dbar kernel (deg >= 1, m = 1). `charges` distributes the degree over the
// complex planes (default: all in the first); a passed `phi0` must carry the same twist.
VortexSolution solve_abelian_vortex(const BundleSpec& bundle, double tau,
                                    const TorusGeometry& geom, const SolveOptions& opts,
                                    const Field* phi0 = nullptr,
                                    const std::vector<int>& charges = {});

// Preconditioned gradient descent on the YMH functional with Armijo backtracking.
VortexSolution gradient_flow(const FieldState& state0, const ParameterSet& p,
                             const TorusGeometry& geom, const SolveOptions& opts);

// Abelian A' on the trivial line bundle with Lambda F_A' + (i/2) phi^* phi + (i/2) tau' = 0.
ConnectionState solve_second_connection(const FieldState& vortex, double tau_prime,
                                        const TorusGeometry& geom, const SolveOptions& opts,
                                        double* residual = nullptr);

// Rank-one vortex (B, psi) at parameter t -> coupled vortex (B + A', A', psi / sqrt 2)
// at tau = (t + 4 pi d / Vol) / 2, tau' = (4 pi d / Vol - t) / 2.
VortexSolution embed_vortex_as_coupled(const VortexSolution& vortex, const TorusGeometry& geom,
                                       const SolveOptions& opts);

// Coulomb gauge d^* a = 0: exact Hodge projection for rank 1, small-field
// iteration for rank > 1.
ConnectionState coulomb_project(const ConnectionState& a, const TorusGeometry& geom,
                                const SolveOptions& opts, double field_limit = 1.0);
// max |sum_j d_j a_j| / s
double coulomb_residual(const ConnectionState& a, const TorusGeometry& geom);

// Pull back a state on T^2 along the projection T^2 x T^2 -> T^2 (first factor).
FieldState pullback_product(const FieldState& s, const TorusGeometry& g2,
                            const TorusGeometry& g4);

}  // namespace vortexlab
