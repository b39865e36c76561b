#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vortexlab/geometry.hpp"

namespace vortexlab {

// Matrix-valued grid function, rows x cols entry-major.
using MatField = std::vector<Field>;

namespace mat {

MatField zeros(int rows, int cols, std::size_t npts);
MatField identity(int n, std::size_t npts);
// C = A(ra x ca) * B(ca x cb)
MatField mul(const MatField& a, const MatField& b, int ra, int ca, int cb);
MatField adjoint(const MatField& a, int rows, int cols);
void axpy(MatField& y, cplx alpha, const MatField& x);
MatField combine(cplx alpha, const MatField& x, cplx beta, const MatField& y);
// [A, B] for square matrices
MatField commutator(const MatField& a, const MatField& b, int n);
// pointwise Tr(A A^*) (Frobenius norm squared)
RealField frob2(const MatField& a);
// pointwise Re Tr(A B^*)
RealField inner(const MatField& a, const MatField& b);
// pointwise trace
Field trace(const MatField& a, int n);
double max_abs(const MatField& a);

}  // namespace mat

struct BundleSpec {
  int rank = 1;
  int degree = 0;
  std::string label;

  double slope() const { return static_cast<double>(degree) / rank; }
};

// Flux quantum B_k = 2 pi / L_k^2 of complex plane k (per unit charge).
double flux_quantum(const TorusGeometry& geom, int plane);

// Per-plane charge carried by every diagonal entry of the background
// connection so that the omega-degree equals bundle.degree. All flux is put in
// plane 0; throws NonIntegralCharge if that is not an integer.
std::vector<int> background_charges(const BundleSpec& bundle, const TorusGeometry& geom);

// omega-degree realized by per-entry plane charges
double charges_degree(const std::vector<int>& charges, int rank, const TorusGeometry& geom);

// Unitary connection A = A0 + a. A0 is the central constant-curvature
// connection in Landau gauge, A0_{y_k} = -i B_k q_k x_k, with
// F0_{x_k y_k} = -i B_k q_k I. The perturbation a is periodic and skew-hermitian.
struct ConnectionState {
  BundleSpec bundle;
  std::vector<int> charges;         // per complex plane
  std::vector<MatField> a;          // [real axis] rank x rank

  int rank() const { return bundle.rank; }
};

ConnectionState background_connection(const BundleSpec& bundle, const TorusGeometry& geom,
                                      std::vector<int> charges = {});

// A vortex (a1, phi) with phi in Gamma(E) (rank x 1), or a triple (a1, a2, phi)
// with phi in Gamma(Hom(E2, E1)) (rank1 x rank2).
struct FieldState {
  ConnectionState a1;
  std::optional<ConnectionState> a2;
  MatField phi;

  bool is_triple() const { return a2.has_value(); }
  int rows() const { return a1.rank(); }
  int cols() const { return a2 ? a2->rank() : 1; }
};
using TripleState = FieldState;

// per-plane twist of the Higgs field entries: q1 - q2
std::vector<int> higgs_charges(const FieldState& s);

// Throws ShapeMismatch if array sizes disagree with the bundles and geometry.
void validate(const FieldState& s, const TorusGeometry& geom);

GridForm curvature(const ConnectionState& a, const TorusGeometry& geom);

// d_A on a periodic End(E)-valued function: d xi + [a, xi]
std::vector<MatField> adjoint_derivative(const ConnectionState& a, const MatField& xi,
                                         const TorusGeometry& geom);

// D_j phi = d_j phi + A1_j phi - phi A2_j including background twist
MatField covariant_derivative(const FieldState& s, const TorusGeometry& geom, int axis);
// same operator applied to another section of the Higgs bundle of s
MatField covariant_derivative(const FieldState& s, const MatField& phi, const TorusGeometry& geom,
                              int axis);
std::vector<MatField> covariant_derivatives(const FieldState& s, const TorusGeometry& geom);

// (0,1) part: per complex plane, (1/2)(D_x + i D_y) phi
std::vector<MatField> dbar_A(const FieldState& s, const TorusGeometry& geom);

// max pointwise Frobenius norm of the (0,2) part of F_A (0 for m = 1)
double integrability_residual(const ConnectionState& a, const TorusGeometry& geom);

using GaugeField = MatField;  // rank x rank, pointwise unitary, periodic

GaugeField identity_gauge(int rank, const TorusGeometry& geom);
// exp(X) of a random band-limited skew-hermitian X
GaugeField random_gauge(std::uint64_t seed, int rank, double amplitude, const TorusGeometry& geom);
GaugeField constant_phase_gauge(const std::vector<double>& angles, const TorusGeometry& geom);
GaugeField compose(const GaugeField& g, const GaugeField& h, int rank);

// (A1, A2, phi) -> (g1 A1, g2 A2, g1 phi g2^{-1}); for vortices g2 is ignored.
FieldState gauge_apply(const GaugeField& g1, const GaugeField& g2, const FieldState& s,
                       const TorusGeometry& geom);
FieldState gauge_apply(const GaugeField& g, const FieldState& vortex, const TorusGeometry& geom);

struct RandomOptions {
  double connection_amplitude = 0.3;
  double higgs_amplitude = 1.0;
};

// Smooth random real periodic field, Fourier amplitudes ~ (1 + |k|^2)^(-decay)
// in integer mode units, RMS-normalized to `amplitude`.
RealField random_periodic(std::mt19937_64& rng, double decay, double amplitude,
                          const TorusGeometry& geom);

// Random real trigonometric polynomial with modes |m_a| <= max_mode, RMS `amplitude`.
RealField random_trig(std::mt19937_64& rng, int max_mode, double amplitude,
                      const TorusGeometry& geom);

// Smooth section with per-plane charges: product of Gaussian theta sums
// sum_n g(x - x0 + nL) exp(-2 pi i q n y / L).
Field theta_section(const std::vector<int>& charges, const std::vector<double>& x0, double width,
                    const TorusGeometry& geom);

// Random smooth twisted section psi1 * theta(c1) + psi2 * theta(c2)
Field random_section(std::mt19937_64& rng, double decay, const std::vector<int>& charges,
                     const TorusGeometry& geom);

// Random smooth skew-hermitian perturbation. On m = 2 it is built from
// potentials, a = i(d^c u) + i d chi + const, so that F^{0,2} = 0 exactly (diagonal
// for rank > 1).
std::vector<MatField> random_perturbation(std::mt19937_64& rng, double decay, double amplitude,
                                          int rank, const TorusGeometry& geom);

FieldState random_state(std::uint64_t seed, double decay, const BundleSpec& b1,
                        const std::optional<BundleSpec>& b2, const TorusGeometry& geom,
                        const RandomOptions& opts = {});

}  // namespace vortexlab
