#include "vortexlab/functional.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "vortexlab/spectral.hpp"

namespace vortexlab {

using std::numbers::pi;

ParameterSet derive_parameters(const BundleSpec& b1, const std::optional<BundleSpec>& b2,
                               double tau, const TorusGeometry& geom) {
  ParameterSet p;
  p.tau = tau;
  p.volume = geom.volume();
  p.tau_hat = tau * p.volume / (4.0 * pi);
  p.r1 = b1.rank;
  p.d1 = b1.degree;
  if (!b2) {
    p.r2 = 0;
    return p;
  }
  p.coupled = true;
  p.r2 = b2->rank;
  p.d2 = b2->degree;
  const double dsum = static_cast<double>(p.d1 + p.d2);
  p.tau_prime = (4.0 * pi * dsum / p.volume - tau * p.r1) / p.r2;
  const double denom = (p.r1 + p.r2) * p.tau_hat - dsum;
  if (!(denom > 0.0))
    throw Error(ErrorCode::NonpositiveSigmaDenominator,
                "(r1 + r2) tau_hat - deg E1 - deg E2 = " + std::to_string(denom));
  p.sigma = 2.0 * p.r2 * p.volume / denom;
  p.c_tau = 16.0 * pi * pi * p.r2 / (p.sigma * p.sigma) -
            0.25 * (tau * tau * p.r1 + p.tau_prime * p.tau_prime * p.r2);
  p.big_C_tau = p.sigma * p.c_tau * p.volume;
  return p;
}

RealField curvature_norm2(const GridForm& f, const TorusGeometry& geom) {
  RealField out(geom.size(), 0.0);
  const double w = 1.0 / (geom.kahler_scale() * geom.kahler_scale());
  for (const auto& comp : f.comps) {
    auto n2 = mat::frob2(comp);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += w * n2[p];
  }
  return out;
}

DensityTerms ymh_density_terms(const FieldState& s, const ParameterSet& par,
                               const TorusGeometry& geom) {
  validate(s, geom);
  if (s.is_triple() != par.coupled || s.rows() != par.r1 || (par.coupled && s.cols() != par.r2))
    throw Error(ErrorCode::ShapeMismatch, "state does not match the parameter set");
  const std::size_t npts = geom.size();
  const int r1 = s.rows(), r2 = s.cols();
  DensityTerms t;
  t.curvature1 = curvature_norm2(curvature(s.a1, geom), geom);
  t.curvature2 = s.a2 ? curvature_norm2(curvature(*s.a2, geom), geom) : RealField(npts, 0.0);

  t.kinetic.assign(npts, 0.0);
  const double inv_s = 1.0 / geom.kahler_scale();
  for (int j = 0; j < geom.real_dim(); ++j) {
    auto n2 = mat::frob2(covariant_derivative(s, geom, j));
    for (std::size_t p = 0; p < npts; ++p) t.kinetic[p] += inv_s * n2[p];
  }

  auto pp = mat::mul(s.phi, mat::adjoint(s.phi, r1, r2), r1, r2, r1);
  for (int i = 0; i < r1; ++i)
    for (auto& v : pp[i * r1 + i]) v -= par.tau;
  t.potential1 = mat::frob2(pp);
  for (auto& v : t.potential1) v *= 0.25;

  if (s.a2) {
    auto qq = mat::mul(mat::adjoint(s.phi, r1, r2), s.phi, r2, r1, r2);
    for (int i = 0; i < r2; ++i)
      for (auto& v : qq[i * r2 + i]) v += par.tau_prime;
    t.potential2 = mat::frob2(qq);
    for (auto& v : t.potential2) v *= 0.25;
  } else {
    t.potential2.assign(npts, 0.0);
  }
  return t;
}

RealField ymh_density(const FieldState& s, const ParameterSet& par, const TorusGeometry& geom) {
  auto t = ymh_density_terms(s, par, geom);
  RealField e(geom.size());
  for (std::size_t p = 0; p < e.size(); ++p)
    e[p] = t.curvature1[p] + t.curvature2[p] + t.kinetic[p] + t.potential1[p] + t.potential2[p];
  return e;
}

EnergyReport ymh_energy(const FieldState& s, const ParameterSet& par, const TorusGeometry& geom) {
  auto t = ymh_density_terms(s, par, geom);
  EnergyReport r;
  r.curvature1 = geom.integrate(t.curvature1);
  r.curvature2 = geom.integrate(t.curvature2);
  r.kinetic = geom.integrate(t.kinetic);
  r.potential1 = geom.integrate(t.potential1);
  r.potential2 = geom.integrate(t.potential2);
  r.total = r.curvature1 + r.curvature2 + r.kinetic + r.potential1 + r.potential2;
  r.topological_minimum = topological_minimum(s, par, geom);
  r.defect = r.total - r.topological_minimum;
  return r;
}

namespace {

// sum_j nabla_j F_jk for every k, nabla_j = d_j + [a_j, .]
std::vector<MatField> curvature_divergence(const ConnectionState& c, const GridForm& f,
                                           const TorusGeometry& geom) {
  const int n = geom.real_dim();
  const int r = c.rank();
  std::vector<MatField> out(n, mat::zeros(r, r, geom.size()));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const double sign = j < k ? 1.0 : -1.0;
      const auto& fjk = f.comps[j < k ? pair_index(j, k, n) : pair_index(k, j, n)];
      for (int e = 0; e < r * r; ++e) {
        auto d = spectral::deriv(fjk[e], geom, j);
        for (std::size_t p = 0; p < geom.size(); ++p) out[k][e][p] += sign * d[p];
      }
      if (r > 1) mat::axpy(out[k], sign, mat::commutator(c.a[j], fjk, r));
    }
  return out;
}

}  // namespace

Tangent ymh_gradient(const FieldState& s, const ParameterSet& par, const TorusGeometry& geom) {
  validate(s, geom);
  const int n = geom.real_dim();
  const int r1 = s.rows(), r2 = s.cols();
  const double inv_s = 1.0 / geom.kahler_scale();
  const double inv_s2 = inv_s * inv_s;
  Tangent g;

  auto div1 = curvature_divergence(s.a1, curvature(s.a1, geom), geom);
  g.a1.resize(n);
  for (int k = 0; k < n; ++k) g.a1[k] = mat::combine(-2.0 * inv_s2, div1[k], 0.0, div1[k]);
  if (s.a2) {
    auto div2 = curvature_divergence(*s.a2, curvature(*s.a2, geom), geom);
    g.a2.resize(n);
    for (int k = 0; k < n; ++k) g.a2[k] = mat::combine(-2.0 * inv_s2, div2[k], 0.0, div2[k]);
  }

  auto dphi = covariant_derivatives(s, geom);
  auto phis = mat::adjoint(s.phi, r1, r2);
  g.phi = mat::zeros(r1, r2, geom.size());
  for (int j = 0; j < n; ++j) {
    auto dstar = mat::adjoint(dphi[j], r1, r2);
    auto k1 = mat::mul(dphi[j], phis, r1, r2, r1);
    mat::axpy(k1, -1.0, mat::mul(s.phi, dstar, r1, r2, r1));
    mat::axpy(g.a1[j], inv_s, k1);
    if (s.a2) {
      auto k2 = mat::mul(dstar, s.phi, r2, r1, r2);
      mat::axpy(k2, -1.0, mat::mul(phis, dphi[j], r2, r1, r2));
      mat::axpy(g.a2[j], inv_s, k2);
    }
    mat::axpy(g.phi, -2.0 * inv_s, covariant_derivative(s, dphi[j], geom, j));
  }

  auto pp = mat::mul(s.phi, phis, r1, r2, r1);
  for (int i = 0; i < r1; ++i)
    for (auto& v : pp[i * r1 + i]) v -= par.tau;
  mat::axpy(g.phi, 1.0, mat::mul(pp, s.phi, r1, r1, r2));
  if (s.a2) {
    auto qq = mat::mul(phis, s.phi, r2, r1, r2);
    for (int i = 0; i < r2; ++i)
      for (auto& v : qq[i * r2 + i]) v += par.tau_prime;
    mat::axpy(g.phi, 1.0, mat::mul(s.phi, qq, r1, r2, r2));
  }
  return g;
}

double pairing(const Tangent& u, const Tangent& v, const TorusGeometry& geom) {
  RealField acc(geom.size(), 0.0);
  auto add = [&](const MatField& a, const MatField& b) {
    auto ip = mat::inner(a, b);
    for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += ip[p];
  };
  for (std::size_t j = 0; j < u.a1.size() && j < v.a1.size(); ++j) add(u.a1[j], v.a1[j]);
  for (std::size_t j = 0; j < u.a2.size() && j < v.a2.size(); ++j) add(u.a2[j], v.a2[j]);
  if (!u.phi.empty() && !v.phi.empty()) add(u.phi, v.phi);
  return geom.integrate(acc);
}

FieldState displace(const FieldState& s, const Tangent& v, double t) {
  FieldState out = s;
  for (std::size_t j = 0; j < v.a1.size(); ++j) mat::axpy(out.a1.a[j], t, v.a1[j]);
  if (out.a2)
    for (std::size_t j = 0; j < v.a2.size(); ++j) mat::axpy(out.a2->a[j], t, v.a2[j]);
  if (!v.phi.empty()) mat::axpy(out.phi, t, v.phi);
  return out;
}

double chern_weil_degree(const ConnectionState& a, const TorusGeometry& geom) {
  auto lam = contract_lambda(curvature(a, geom), geom);
  auto tr = mat::trace(lam, a.rank());
  const cplx integral = geom.integrate(tr);
  return (cplx(0.0, 1.0) * integral).real() / (2.0 * pi);
}

double ch2_background(const ConnectionState& a, const TorusGeometry& geom) {
  if (geom.complex_dim() < 2) return 0.0;
  // Tr(F0 ^ F0) / d^4x = 2 r (-i B0 q0)(-i B1 q1)
  const double b0 = flux_quantum(geom, 0) * a.charges[0];
  const double b1 = flux_quantum(geom, 1) * a.charges[1];
  const double density = -2.0 * a.rank() * b0 * b1;
  const double s = geom.kahler_scale();
  return -density * geom.volume() / (s * s) / (8.0 * pi * pi);
}

double ch2_quadrature(const ConnectionState& a, const TorusGeometry& geom) {
  if (geom.complex_dim() < 2) return 0.0;
  auto f = curvature(a, geom);
  const int n = geom.real_dim(), r = a.rank();
  auto tr = [&](int i, int j, int k, int l) {
    return mat::trace(mat::mul(f.comps[pair_index(i, j, n)], f.comps[pair_index(k, l, n)], r, r, r),
                      r);
  };
  auto t1 = tr(0, 1, 2, 3), t2 = tr(0, 2, 1, 3), t3 = tr(0, 3, 1, 2);
  Field dens(geom.size());
  for (std::size_t p = 0; p < dens.size(); ++p) dens[p] = 2.0 * (t1[p] - t2[p] + t3[p]);
  const double s = geom.kahler_scale();
  return -(geom.integrate(dens).real() / (s * s)) / (8.0 * pi * pi);
}

double topological_minimum(const FieldState& s, const ParameterSet& par,
                           const TorusGeometry& geom) {
  double ch2 = ch2_background(s.a1, geom);
  double v = 2.0 * pi * par.tau * s.a1.bundle.degree;
  if (s.a2) {
    ch2 += ch2_background(*s.a2, geom);
    v += 2.0 * pi * par.tau_prime * s.a2->bundle.degree;
  }
  return v - 8.0 * pi * pi * ch2;
}

const char* to_string(Threshold t) {
  switch (t) {
    case Threshold::Solvable: return "Solvable";
    case Threshold::Boundary: return "Boundary";
    case Threshold::Obstructed: return "Obstructed";
  }
  return "Unknown";
}

Threshold check_threshold(const BundleSpec& bundle, double tau, const TorusGeometry& geom) {
  const double tau_hat = tau * geom.volume() / (4.0 * pi);
  const double mu = bundle.slope();
  const double gap = tau_hat - mu;
  if (std::abs(gap) <= 1e-12 * std::max(1.0, std::abs(mu))) return Threshold::Boundary;
  return gap > 0.0 ? Threshold::Solvable : Threshold::Obstructed;
}

std::string to_json(const ParameterSet& p) {
  nlohmann::ordered_json j;
  j["tau"] = p.tau;
  j["tau_hat"] = p.tau_hat;
  j["volume"] = p.volume;
  j["r1"] = p.r1;
  j["d1"] = p.d1;
  if (p.coupled) {
    j["r2"] = p.r2;
    j["d2"] = p.d2;
    j["tau_prime"] = p.tau_prime;
    j["sigma"] = p.sigma;
    j["c_tau"] = p.c_tau;
    j["big_C_tau"] = p.big_C_tau;
  }
  return j.dump();
}

std::string to_json(const EnergyReport& e) {
  nlohmann::ordered_json j;
  j["total"] = e.total;
  j["terms"] = {{"curvature1", e.curvature1}, {"curvature2", e.curvature2},
                {"kinetic", e.kinetic},       {"potential1", e.potential1},
                {"potential2", e.potential2}};
  j["topological_minimum"] = e.topological_minimum;
  j["defect"] = e.defect;
  return j.dump();
}

}  // namespace vortexlab
