#include "vortexlab/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

namespace vortexlab {

using std::numbers::pi;

namespace {

void require_triple(const TripleState& t, const ParameterSet& p, const TorusGeometry& geom) {
  validate(t, geom);
  if (!t.is_triple() || !p.coupled)
    throw Error(ErrorCode::ShapeMismatch, "dimensional reduction needs a triple and coupled parameters");
  if (t.rows() != p.r1 || t.cols() != p.r2)
    throw Error(ErrorCode::ShapeMismatch, "parameters were derived for other ranks");
}

double max_norm(const MatField& m) {
  double worst = 0.0;
  for (double v : mat::frob2(m)) worst = std::max(worst, std::sqrt(v));
  return worst;
}

}  // namespace

ReducedCurvatureSample assemble_reduced_curvature(const TripleState& t, const ParameterSet& p,
                                                  const TorusGeometry& geom) {
  require_triple(t, p, geom);
  const int r1 = t.rows(), r2 = t.cols();
  const std::size_t n = geom.size();
  const double s = geom.kahler_scale();
  ReducedCurvatureSample out;
  out.base1 = curvature(t.a1, geom);
  out.base2 = curvature(*t.a2, geom);
  out.mixed = covariant_derivatives(t, geom);

  auto phis = mat::adjoint(t.phi, r1, r2);
  out.fiber1 = mat::mul(t.phi, phis, r1, r2, r1);
  for (auto& e : out.fiber1)
    for (auto& v : e) v *= cplx(0.0, -0.5);
  out.fiber2 = mat::mul(phis, t.phi, r2, r1, r2);
  for (auto& e : out.fiber2)
    for (auto& v : e) v *= cplx(0.0, 0.5);
  for (int i = 0; i < r2; ++i)
    for (auto& v : out.fiber2[i * r2 + i]) v += cplx(0.0, -4.0 * pi / p.sigma);

  out.norm2.assign(n, 0.0);
  for (const auto* f : {&out.base1, &out.base2})
    for (const auto& comp : f->comps) {
      auto fr = mat::frob2(comp);
      for (std::size_t q = 0; q < n; ++q) out.norm2[q] += fr[q] / (s * s);
    }
  // both off-diagonal blocks, each with |alpha|^2 = 1/2
  for (const auto& comp : out.mixed) {
    auto fr = mat::frob2(comp);
    for (std::size_t q = 0; q < n; ++q) out.norm2[q] += 2.0 * 0.5 * fr[q] / s;
  }
  for (const auto* f : {&out.fiber1, &out.fiber2}) {
    auto fr = mat::frob2(*f);
    for (std::size_t q = 0; q < n; ++q) out.norm2[q] += fr[q];
  }
  return out;
}

double verify_density_identity(const TripleState& t, const ParameterSet& p,
                               const TorusGeometry& geom) {
  auto blocks = assemble_reduced_curvature(t, p, geom);
  auto e = ymh_density(t, p, geom);
  double worst = 0.0;
  for (std::size_t q = 0; q < e.size(); ++q)
    worst = std::max(worst, std::abs(blocks.norm2[q] - e[q] - p.c_tau));
  return worst;
}

IntegralIdentity verify_integral_identity(const TripleState& t, const ParameterSet& p,
                                          const TorusGeometry& geom) {
  auto blocks = assemble_reduced_curvature(t, p, geom);
  IntegralIdentity r;
  // the fiber has volume int sigma omega_P1 = sigma
  r.lhs = p.sigma * geom.integrate(blocks.norm2);
  r.rhs = p.sigma * ymh_energy(t, p, geom).total + p.big_C_tau;
  r.gap = std::abs(r.lhs - r.rhs) / std::max({std::abs(r.lhs), std::abs(r.rhs), 1.0});
  return r;
}

HymEquivalence hym_equivalence_check(const TripleState& t, const ParameterSet& p,
                                     const TorusGeometry& geom, double tol) {
  auto blocks = assemble_reduced_curvature(t, p, geom);
  const int r1 = t.rows(), r2 = t.cols();
  HymEquivalence rep;
  rep.vortex = vortex_residuals(t, p, geom);

  // Lambda_sigma F_A = Lambda F_Ai + fiber coefficient; the mixed blocks do not contribute.
  // The Einstein constant is fixed by the trace: lambda = -(i/2) tau.
  auto block_residual = [&](const GridForm& base, const MatField& fiber, int r) {
    auto lam = contract_lambda(base, geom);
    mat::axpy(lam, 1.0, fiber);
    for (int i = 0; i < r; ++i)
      for (auto& v : lam[i * r + i]) v += cplx(0.0, 0.5 * p.tau);
    return max_norm(lam);
  };
  rep.hym.values.emplace_back("lambda_E1", block_residual(blocks.base1, blocks.fiber1, r1));
  rep.hym.values.emplace_back("lambda_E2", block_residual(blocks.base2, blocks.fiber2, r2));
  double f02 = 0.0;
  for (const auto& comp : dbar_A(t, geom)) f02 = std::max(f02, max_norm(comp));
  if (geom.complex_dim() > 1)
    f02 = std::max({f02, integrability_residual(t.a1, geom), integrability_residual(*t.a2, geom)});
  rep.hym.values.emplace_back("f02", f02);

  const double h = rep.hym.max(), v = rep.vortex.max();
  rep.constant = 1.0;
  rep.consistent = (h <= tol) == (v <= rep.constant * tol) || std::abs(h - v) <= 1e-12 * (1.0 + v);
  rep.max_pointwise_residual = verify_density_identity(t, p, geom);
  rep.integral_gap = verify_integral_identity(t, p, geom).gap;
  return rep;
}

std::string to_json(const HymEquivalence& r) {
  nlohmann::ordered_json j;
  j["max_pointwise_residual"] = r.max_pointwise_residual;
  j["integral_gap"] = r.integral_gap;
  for (const auto& [k, v] : r.hym.values) j["hym_residuals"][k] = v;
  for (const auto& [k, v] : r.vortex.values) j["vortex_residuals"][k] = v;
  j["equivalence_constant"] = r.constant;
  j["consistent"] = r.consistent;
  return j.dump(2);
}

}  // namespace vortexlab
