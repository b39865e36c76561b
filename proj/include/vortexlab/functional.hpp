#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vortexlab/fields.hpp"

namespace vortexlab {

struct ParameterSet {
  double tau = 0.0;
  double tau_hat = 0.0;
  double tau_prime = 0.0;  // coupled case
  double sigma = 0.0;      // coupled case
  double c_tau = 0.0;
  double big_C_tau = 0.0;
  double volume = 0.0;
  int r1 = 1, r2 = 1;
  int d1 = 0, d2 = 0;
  bool coupled = false;
};

// tau_hat = tau Vol / 4pi. For triples:
//   tau' = (4pi (d1 + d2) / Vol - tau r1) / r2
//   sigma = 2 r2 Vol / ((r1 + r2) tau_hat - d1 - d2)
//   c(tau) = 16 pi^2 r2 / sigma^2 - (tau^2 r1 + tau'^2 r2) / 4
//   C(tau) = sigma c(tau) Vol
ParameterSet derive_parameters(const BundleSpec& b1, const std::optional<BundleSpec>& b2,
                               double tau, const TorusGeometry& geom);

struct EnergyReport {
  double total = 0.0;
  double curvature1 = 0.0;
  double curvature2 = 0.0;
  double kinetic = 0.0;
  double potential1 = 0.0;  // 1/4 |phi phi^* - tau|^2
  double potential2 = 0.0;  // 1/4 |phi^* phi + tau'|^2
  double topological_minimum = 0.0;
  double defect = 0.0;
};

struct DensityTerms {
  RealField curvature1, curvature2, kinetic, potential1, potential2;
};

DensityTerms ymh_density_terms(const FieldState& s, const ParameterSet& p,
                               const TorusGeometry& geom);
RealField ymh_density(const FieldState& s, const ParameterSet& p, const TorusGeometry& geom);
EnergyReport ymh_energy(const FieldState& s, const ParameterSet& p, const TorusGeometry& geom);

// Pointwise |F|^2 with the omega-metric: (1/s^2) sum_{j<k} |F_jk|^2
RealField curvature_norm2(const GridForm& f, const TorusGeometry& geom);

// L^2(dv) gradient in coordinate components: pairing sum_j Re Tr(da_j G_j^*) + Re Tr(dphi G_phi^*)
struct Tangent {
  std::vector<MatField> a1;
  std::vector<MatField> a2;
  MatField phi;
};

Tangent ymh_gradient(const FieldState& s, const ParameterSet& p, const TorusGeometry& geom);
double pairing(const Tangent& u, const Tangent& v, const TorusGeometry& geom);
FieldState displace(const FieldState& s, const Tangent& v, double t);

// (i / 2pi) int Tr(Lambda F) dv
double chern_weil_degree(const ConnectionState& a, const TorusGeometry& geom);
// -(1 / 8pi^2) int Tr(F ^ F): analytic from the background, or by quadrature
double ch2_background(const ConnectionState& a, const TorusGeometry& geom);
double ch2_quadrature(const ConnectionState& a, const TorusGeometry& geom);

// 2 pi tau deg - 8 pi^2 Ch2, and for triples 2 pi (tau d1 + tau' d2) - 8 pi^2 (Ch2_1 + Ch2_2)
double topological_minimum(const FieldState& s, const ParameterSet& p, const TorusGeometry& geom);

enum class Threshold { Solvable, Boundary, Obstructed };
const char* to_string(Threshold t);
Threshold check_threshold(const BundleSpec& bundle, double tau, const TorusGeometry& geom);

std::string to_json(const ParameterSet& p);
std::string to_json(const EnergyReport& e);

}  // namespace vortexlab
