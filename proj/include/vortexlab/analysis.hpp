#pragma once

#include <string>
#include <vector>

#include "vortexlab/solvers.hpp"

namespace vortexlab {

struct DensityProfile {
  std::vector<double> center;
  std::vector<double> radii;
  std::vector<double> values;  // r^(4-n) int_{B_r} e dv, n = 2m
  std::vector<double> slack;   // shell quadrature bound r^(4-n) sup|e| |S_r| h
};

DensityProfile scaled_energy_profile(const RealField& density, const std::vector<double>& center,
                                     const std::vector<double>& radii, const TorusGeometry& geom);

struct MonotonicityVerdict {
  bool monotone = true;
  bool hypothesis_met = true;  // false: profile is not from a critical point, nothing is asserted
  double worst_violation = 0.0;  // max_i values[i] - values[i+1]
  double at_radius = 0.0;
};

MonotonicityVerdict monotonicity_check(const DensityProfile& profile, double tol = 1e-3,
                                       bool stationary = true);

struct Concentration {
  std::vector<double> point;
  std::size_t index = 0;
  double theta = 0.0;
};

struct ConcentrationReport {
  double epsilon = 0.0;
  std::vector<std::size_t> detected_points;  // grid indices with Theta >= epsilon
  std::vector<Concentration> clusters;       // one representative per connected cluster
  RealField theta;                           // Theta at every grid point
};

// liminf over the sequence is the minimum over its last `tail` members (0: all);
// Theta is the value at the smallest radius of the (decreasing) schedule.
ConcentrationReport concentration_detect(const std::vector<RealField>& densities, double epsilon,
                                         const std::vector<double>& r_schedule,
                                         const TorusGeometry& geom, std::size_t tail = 0);

// sum_j E_j lambda^-n G((x - x_j) / lambda) + background, G the unit-mass Gaussian
RealField synthetic_bump_density(const std::vector<std::vector<double>>& points,
                                 const std::vector<double>& masses, double lambda,
                                 const RealField& background, const TorusGeometry& geom);

struct ElResidual {
  double e1 = 0.0;  // d^*_A1 F_A1 - (i/2) J d_A1(phi phi^*)
  double e2 = 0.0;  // d^*_A2 F_A2 + (i/2) J d_A2(phi^* phi)
  double e3 = 0.0;  // dbar phi
  double max() const { return std::max({e1, e2, e3}); }
};

// Second-order central differences for the outer derivatives; abelian triples only.
ElResidual euler_lagrange_residual(const TripleState& t, const ParameterSet& p,
                                   const TorusGeometry& geom, double tol = 1e-8);

struct EnergyAudit {
  double limit_energy = 0.0;
  double concentrated_mass = 0.0;
  double e_tau = 0.0;
  double gap = 0.0;  // |limit + mass - E(tau)| / E(tau)
  bool pass = false;
  std::vector<double> multiplicities;  // mass / 8 pi^2
  std::vector<std::string> warnings;
};

EnergyAudit energy_identity_audit(const RealField& limit_density, const std::vector<double>& masses,
                                  double e_tau, const TorusGeometry& geom, double tol = 0.02);

std::string profile_csv(const DensityProfile& p);
std::string to_json(const DensityProfile& p, const MonotonicityVerdict& v);
std::string to_json(const ConcentrationReport& r, const TorusGeometry& geom);
std::string to_json(const ElResidual& r);
std::string to_json(const EnergyAudit& a);

}  // namespace vortexlab
