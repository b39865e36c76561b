#include "vortexlab/solvers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "vortexlab/spectral.hpp"

namespace vortexlab {

using std::numbers::pi;

SolveOptions solve_options_from_json(const std::string& text) {
  SolveOptions o;
  auto j = nlohmann::json::parse(text);
  o.residual_tol = j.value("residual_tol", o.residual_tol);
  o.max_iters = j.value("max_iters", o.max_iters);
  o.armijo = j.value("armijo", o.armijo);
  o.max_halvings = j.value("max_halvings", o.max_halvings);
  o.energy_increase_limit = j.value("energy_increase_limit", o.energy_increase_limit);
  o.u_ceiling = j.value("u_ceiling", o.u_ceiling);
  o.conditioning_floor = j.value("conditioning_floor", o.conditioning_floor);
  o.cg_tol = j.value("cg_tol", o.cg_tol);
  o.cg_max_iters = j.value("cg_max_iters", o.cg_max_iters);
  o.force = j.value("force", o.force);
  o.seed = j.value("seed", o.seed);
  if (!(o.residual_tol > 0.0)) throw Error(ErrorCode::ConfigInvalid, "solver.residual_tol must be > 0");
  if (o.max_iters < 1) throw Error(ErrorCode::ConfigInvalid, "solver.max_iters must be >= 1");
  return o;
}

double Residuals::max() const {
  double m = 0.0;
  for (const auto& [k, v] : values) m = std::max(m, v);
  return m;
}

double Residuals::get(const std::string& name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw Error(ErrorCode::ShapeMismatch, "no residual named " + name);
}

namespace {

// energy - minimum must lie in [-1e-9, max(1e-5 |minimum|, 1e-9)]
void check_certificate(const EnergyReport& e) {
  const double d = e.total - e.topological_minimum;
  if (d < -1e-9 || d > std::max(1e-5 * std::abs(e.topological_minimum), 1e-9))
    throw Error(ErrorCode::ResidualTooLarge, "energy certificate violated");
}

double max_norm(const MatField& m) {
  double worst = 0.0;
  for (double v : mat::frob2(m)) worst = std::max(worst, std::sqrt(v));
  return worst;
}

// Lambda F + c_phi (i/2) phi-bilinear + (i/2) t I
MatField vortex_operator(const ConnectionState& a, const MatField& bilinear, double sign, double t,
                         const TorusGeometry& geom) {
  auto lam = contract_lambda(curvature(a, geom), geom);
  const int r = a.rank();
  mat::axpy(lam, cplx(0.0, 0.5 * sign), bilinear);
  for (int i = 0; i < r; ++i)
    for (auto& v : lam[i * r + i]) v += cplx(0.0, 0.5 * t);
  return lam;
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::real(std::conj(a[i]) * b[i]);
  return s;
}

// Preconditioned CG for a hermitian positive definite operator (real inner product).
// Returns iterations, or -1 on breakdown / no convergence.
int pcg(const std::function<Field(const Field&)>& op, const std::function<Field(const Field&)>& prec,
        const Field& b, Field& x, double tol, int max_iters) {
  x.assign(b.size(), 0.0);
  Field r = b;
  Field z = prec(r);
  Field p = z;
  double rz = dot(r, z);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return 0;
  for (int it = 1; it <= max_iters; ++it) {
    Field ap = op(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0) || !std::isfinite(pap)) return -1;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (std::sqrt(dot(r, r)) <= tol * bnorm) return it;
    z = prec(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return -1;
}

Field shifted_inverse_laplacian(const Field& f, double scale, double shift,
                                const TorusGeometry& geom) {
  return spectral::multiplier(f, geom, [&](std::span<const double> k) {
    double k2 = 0.0;
    for (double v : k) k2 += v * v;
    return cplx(1.0 / (scale * k2 + shift), 0.0);
  });
}

double linf(const RealField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double mean(const RealField& f) { return pairwise_sum(f) / static_cast<double>(f.size()); }

// a = i(-u_y dx + u_x dy) in every plane
std::vector<MatField> potential_connection(const RealField& u, const TorusGeometry& geom) {
  Field uc(u.begin(), u.end());
  std::vector<MatField> a(geom.real_dim(), MatField(1, Field(geom.size(), 0.0)));
  for (int k = 0; k < geom.complex_dim(); ++k) {
    auto ux = spectral::deriv(uc, geom, 2 * k);
    auto uy = spectral::deriv(uc, geom, 2 * k + 1);
    for (std::size_t p = 0; p < geom.size(); ++p) {
      a[2 * k][0][p] = cplx(0.0, -uy[p].real());
      a[2 * k + 1][0][p] = cplx(0.0, ux[p].real());
    }
  }
  return a;
}

RealField to_real(const Field& f) {
  RealField r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
  return r;
}

}  // namespace

Residuals vortex_residuals(const FieldState& s, const ParameterSet& p, const TorusGeometry& geom) {
  validate(s, geom);
  Residuals res;
  const int r1 = s.rows(), r2 = s.cols();
  auto phis = mat::adjoint(s.phi, r1, r2);
  auto pp = mat::mul(s.phi, phis, r1, r2, r1);
  double dbar = 0.0;
  for (const auto& comp : dbar_A(s, geom)) dbar = std::max(dbar, max_norm(comp));
  if (!s.is_triple()) {
    res.values.emplace_back("curvature", max_norm(vortex_operator(s.a1, pp, -1.0, p.tau, geom)));
    res.values.emplace_back("dbar", dbar);
  } else {
    auto qq = mat::mul(phis, s.phi, r2, r1, r2);
    res.values.emplace_back("curvature1", max_norm(vortex_operator(s.a1, pp, -1.0, p.tau, geom)));
    res.values.emplace_back("curvature2",
                            max_norm(vortex_operator(*s.a2, qq, 1.0, p.tau_prime, geom)));
    res.values.emplace_back("dbar", dbar);
  }
  if (geom.complex_dim() > 1) {
    double integ = integrability_residual(s.a1, geom);
    if (s.a2) integ = std::max(integ, integrability_residual(*s.a2, geom));
    res.values.emplace_back("integrability", integ);
  }
  return res;
}

Field holomorphic_section(const BundleSpec& bundle, const TorusGeometry& geom,
                          const SolveOptions& opts, double* kernel_residual) {
  if (bundle.rank != 1 || bundle.degree < 1)
    throw Error(ErrorCode::HypothesisUnmet, "zero data needs a line bundle of positive degree");
  if (geom.complex_dim() != 1)
    throw Error(ErrorCode::HypothesisUnmet, "the dbar kernel is only computed on T^2");
  FieldState s;
  s.a1 = background_connection(bundle, geom);
  // start from a random combination of lowest Landau level theta functions,
  // which span the continuum kernel; inverse iteration removes the discretization error
  const int q = s.a1.charges[0];
  const double L = geom.periods()[0];
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  s.phi = {Field(geom.size(), 0.0)};
  for (int c = 0; c < std::abs(q); ++c) {
    const cplx coef(normal(rng), normal(rng));
    auto th = theta_section({q}, {c * L / std::abs(q)}, 1.0 / std::sqrt(2.0 * pi * std::abs(q)), geom);
    for (std::size_t p = 0; p < geom.size(); ++p) s.phi[0][p] += coef * th[p];
  }

  const double gap = 0.5 * flux_quantum(geom, 0) * s.a1.charges[0];
  const double delta = 0.05 * gap;
  auto dbar = [&](const Field& f) {
    MatField m{f};
    auto dx = covariant_derivative(s, m, geom, 0)[0];
    auto dy = covariant_derivative(s, m, geom, 1)[0];
    Field out(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) out[p] = 0.5 * (dx[p] + cplx(0.0, 1.0) * dy[p]);
    return out;
  };
  // dbar^* = -(1/2)(D_x - i D_y); the metric factor 1/s is common to both and dropped
  auto normal_op = [&](const Field& f) {
    Field g = dbar(f);
    MatField m{g};
    auto dx = covariant_derivative(s, m, geom, 0)[0];
    auto dy = covariant_derivative(s, m, geom, 1)[0];
    Field out(f.size());
    for (std::size_t p = 0; p < f.size(); ++p)
      out[p] = -0.5 * (dx[p] - cplx(0.0, 1.0) * dy[p]) + delta * f[p];
    return out;
  };
  auto prec = [&](const Field& f) { return shifted_inverse_laplacian(f, 0.25, gap + delta, geom); };

  Field x = s.phi[0];
  double mx0 = 0.0;
  for (const auto& v : x) mx0 = std::max(mx0, std::abs(v));
  for (auto& v : x) v /= mx0;
  double resid = 0.0;
  for (const auto& v : dbar(x)) resid = std::max(resid, std::abs(v));
  for (int it = 0; it < 30 && resid > 1e-12; ++it) {
    Field y;
    if (pcg(normal_op, prec, x, y, opts.cg_tol, opts.cg_max_iters) < 0)
      throw Error(ErrorCode::SingularLinearization, "inverse iteration for the dbar kernel failed");
    double mx = 0.0;
    for (const auto& v : y) mx = std::max(mx, std::abs(v));
    for (auto& v : y) v /= mx;
    x = std::move(y);
    auto r = dbar(x);
    double rm = 0.0;
    for (const auto& v : r) rm = std::max(rm, std::abs(v));
    const bool stalled = rm > 0.5 * resid;
    resid = rm;
    if (resid < 1e-13 || (stalled && resid < 1e-10)) break;
  }
  if (kernel_residual) *kernel_residual = resid;
  return x;
}

VortexSolution solve_abelian_vortex(const BundleSpec& bundle, double tau,
                                    const TorusGeometry& geom, const SolveOptions& opts,
                                    const Field* phi0_in, const std::vector<int>& charges) {
  if (bundle.rank != 1) throw Error(ErrorCode::HypothesisUnmet, "abelian solver needs rank 1");
  const auto verdict = check_threshold(bundle, tau, geom);
  if (verdict != Threshold::Solvable && !opts.force)
    throw Error(ErrorCode::ThresholdViolated,
                std::string("tau is ") + to_string(verdict) + " for this bundle");
  if (bundle.degree < 0)
    throw Error(ErrorCode::HypothesisUnmet, "negative degree line bundles have no zero data");

  Field phi0;
  if (phi0_in) {
    phi0 = *phi0_in;
  } else if (bundle.degree == 0) {
    phi0.assign(geom.size(), 1.0);
  } else if (geom.complex_dim() == 1) {
    phi0 = holomorphic_section(bundle, geom, opts);
  } else {
    // product of lowest Landau level theta functions, one per plane
    FieldState probe;
    probe.a1 = background_connection(bundle, geom, charges);
    phi0.assign(geom.size(), 1.0);
    for (int k = 0; k < geom.complex_dim(); ++k) {
      const int q = probe.a1.charges[k];
      if (q < 0) throw Error(ErrorCode::HypothesisUnmet, "negative charge has no holomorphic section");
      if (q == 0) continue;
      std::vector<int> qk(geom.complex_dim(), 0);
      qk[k] = q;
      auto th = theta_section(qk, std::vector<double>(geom.complex_dim(), 0.0),
                              1.0 / std::sqrt(2.0 * pi * q), geom);
      for (std::size_t p = 0; p < geom.size(); ++p) phi0[p] *= th[p];
    }
    double mx = 0.0;
    for (const auto& v : phi0) mx = std::max(mx, std::abs(v));
    for (auto& v : phi0) v /= mx;
    probe.phi = {phi0};
    double res = 0.0;
    for (const auto& comp : dbar_A(probe, geom)) res = std::max(res, mat::max_abs(comp));
    if (res > 1e-10)
      throw Error(ErrorCode::HypothesisUnmet, "theta product is not holomorphic on this grid");
  }
  RealField rho(geom.size());
  for (std::size_t p = 0; p < rho.size(); ++p) rho[p] = std::norm(phi0[p]);

  const double s = geom.kahler_scale();
  const double vol = geom.volume();
  const double kappa = tau - 4.0 * pi * bundle.degree / vol;

  auto laplace = [&](const RealField& u) {
    Field uc(u.begin(), u.end());
    return to_real(spectral::laplacian(uc, geom));
  };
  auto residual_of = [&](const RealField& u, RealField& w) {
    RealField lap = laplace(u);
    RealField g(u.size());
    w.resize(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) {
      w[p] = rho[p] * std::exp(2.0 * u[p]);
      g[p] = -lap[p] / s + 0.5 * w[p] - 0.5 * kappa;
    }
    return g;
  };
  auto functional = [&](const RealField& u) {
    Field uc(u.begin(), u.end());
    RealField dens(u.size(), 0.0);
    for (int a = 0; a < geom.real_dim(); ++a) {
      auto d = spectral::deriv(uc, geom, a);
      for (std::size_t p = 0; p < u.size(); ++p) dens[p] += 0.5 / s * std::norm(d[p]);
    }
    for (std::size_t p = 0; p < u.size(); ++p)
      dens[p] += 0.25 * rho[p] * std::exp(2.0 * u[p]) - 0.5 * kappa * u[p];
    return geom.integrate(dens);
  };

  const double rho_bar = mean(rho);
  RealField u(geom.size(), kappa > 0.0 ? 0.5 * std::log(kappa / rho_bar) : 0.0);
  VortexSolution sol;
  double J = functional(u);
  sol.energy_trace.push_back(J);
  int increases = 0;
  double best_g = std::numeric_limits<double>::infinity();
  int stall = 0;
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    RealField w;
    RealField g = residual_of(u, w);
    const double gn = linf(g);
    if (gn <= 0.1 * opts.residual_tol) {
      converged = true;
      break;
    }
    if (gn < 0.5 * best_g) {
      best_g = gn;
      stall = 0;
    } else if (++stall >= 3 && gn <= opts.residual_tol) {
      converged = true;
      break;
    }
    if (linf(u) > opts.u_ceiling)
      throw Error(ErrorCode::Diverged, "conformal factor exceeded the amplitude ceiling");
    const double wbar = mean(w);
    if (wbar < opts.conditioning_floor)
      throw Error(ErrorCode::Diverged, "Newton linearization lost its zeroth-order term");

    auto op = [&](const Field& d) {
      Field lap = spectral::laplacian(d, geom);
      Field out(d.size());
      for (std::size_t p = 0; p < d.size(); ++p) out[p] = -lap[p] / s + w[p] * d[p];
      return out;
    };
    auto prec = [&](const Field& f) { return shifted_inverse_laplacian(f, 1.0 / s, wbar, geom); };
    Field rhs(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) rhs[p] = -g[p];
    Field step;
    if (pcg(op, prec, rhs, step, opts.cg_tol, opts.cg_max_iters) < 0)
      throw Error(ErrorCode::SingularLinearization, "Newton system could not be solved");
    RealField d = to_real(step);

    RealField gd(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) gd[p] = g[p] * d[p];
    const double slope = geom.integrate(gd);
    double t = 1.0;
    RealField trial(u.size());
    double Jt = J;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      for (std::size_t p = 0; p < u.size(); ++p) trial[p] = u[p] + t * d[p];
      Jt = functional(trial);
      if (std::isfinite(Jt) && Jt <= J + opts.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!std::isfinite(Jt)) throw Error(ErrorCode::Diverged, "energy is not finite");
    if (!accepted) {
      if (Jt > J) {
        if (++increases >= opts.energy_increase_limit)
          throw Error(ErrorCode::Diverged, "energy increased on consecutive steps");
      }
      // near roundoff the Armijo test is not informative; take the full Newton step
      if (gn <= opts.residual_tol) {
        for (std::size_t p = 0; p < u.size(); ++p) trial[p] = u[p] + d[p];
        Jt = functional(trial);
      }
    } else {
      increases = 0;
    }
    u = trial;
    J = Jt;
    sol.energy_trace.push_back(J);
  }
  sol.iterations = it;
  if (!converged) {
    if (kappa <= 0.0 || linf(u) > opts.u_ceiling)
      throw Error(ErrorCode::Diverged, "no convergence below the existence threshold");
    throw Error(ErrorCode::MaxIters, "Newton iteration did not converge");
  }

  FieldState st;
  st.a1 = background_connection(bundle, geom, charges);
  st.a1.a = potential_connection(u, geom);
  st.phi = {Field(geom.size())};
  for (std::size_t p = 0; p < geom.size(); ++p) st.phi[0][p] = std::exp(u[p]) * phi0[p];

  sol.state = std::move(st);
  sol.params = derive_parameters(bundle, std::nullopt, tau, geom);
  sol.residuals = vortex_residuals(sol.state, sol.params, geom);
  sol.energy = ymh_energy(sol.state, sol.params, geom);
  sol.certificate_gap =
      (sol.energy.total - sol.energy.topological_minimum) / std::max(1.0, std::abs(sol.energy.topological_minimum));
  if (sol.residuals.max() > opts.residual_tol) {
    sol.status = "residual_too_large";
    throw Error(ErrorCode::ResidualTooLarge,
                "independent residual " + std::to_string(sol.residuals.max()) + " exceeds tolerance");
  }
  check_certificate(sol.energy);
  return sol;
}

namespace {

Tangent precondition(const Tangent& g, double s, const TorusGeometry& geom) {
  auto apply = [&](const MatField& m) {
    MatField out(m.size());
    for (std::size_t e = 0; e < m.size(); ++e) out[e] = shifted_inverse_laplacian(m[e], 1.0 / s, 1.0, geom);
    return out;
  };
  Tangent d;
  for (const auto& c : g.a1) d.a1.push_back(apply(c));
  for (const auto& c : g.a2) d.a2.push_back(apply(c));
  d.phi = apply(g.phi);
  return d;
}

void scale_tangent(Tangent& t, double c) {
  for (auto& m : t.a1) mat::axpy(m, c - 1.0, MatField(m));
  for (auto& m : t.a2) mat::axpy(m, c - 1.0, MatField(m));
  mat::axpy(t.phi, c - 1.0, MatField(t.phi));
}

}  // namespace

VortexSolution gradient_flow(const FieldState& state0, const ParameterSet& p,
                             const TorusGeometry& geom, const SolveOptions& opts) {
  VortexSolution sol;
  sol.params = p;
  FieldState s = state0;
  double E = ymh_energy(s, p, geom).total;
  sol.energy_trace.push_back(E);
  sol.status = "max_iters";
  double t = 1.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    Tangent g = ymh_gradient(s, p, geom);
    const double gn = std::sqrt(pairing(g, g, geom));
    if (!std::isfinite(gn)) {
      sol.status = "diverged";
      break;
    }
    if (gn <= opts.residual_tol * (1.0 + std::abs(E))) {
      sol.status = "converged";
      break;
    }
    Tangent d = precondition(g, geom.kahler_scale(), geom);
    scale_tangent(d, -1.0);
    const double slope = pairing(g, d, geom);
    t = std::min(1.0, 2.0 * t);
    bool accepted = false;
    FieldState trial;
    double Et = E;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      trial = displace(s, d, t);
      Et = ymh_energy(trial, p, geom).total;
      if (std::isfinite(Et) && Et <= E + opts.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // no descent possible at this resolution; keep the current (best) state
      sol.status = gn <= 1e3 * opts.residual_tol * (1.0 + std::abs(E)) ? "stalled" : "diverged";
      break;
    }
    s = std::move(trial);
    E = Et;
    sol.energy_trace.push_back(E);
  }
  sol.iterations = it;
  sol.state = std::move(s);
  sol.residuals = vortex_residuals(sol.state, p, geom);
  sol.energy = ymh_energy(sol.state, p, geom);
  sol.certificate_gap = (sol.energy.total - sol.energy.topological_minimum) /
                        std::max(1.0, std::abs(sol.energy.topological_minimum));
  return sol;
}

ConnectionState solve_second_connection(const FieldState& vortex, double tau_prime,
                                        const TorusGeometry& geom, const SolveOptions& opts,
                                        double* residual) {
  validate(vortex, geom);
  RealField src(geom.size(), 0.0);
  for (const auto& e : vortex.phi)
    for (std::size_t p = 0; p < geom.size(); ++p) src[p] += std::norm(e[p]);
  RealField half(geom.size()), mag(geom.size());
  for (std::size_t p = 0; p < geom.size(); ++p) {
    half[p] = 0.5 * src[p] + 0.5 * tau_prime;
    mag[p] = 0.5 * src[p] + 0.5 * std::abs(tau_prime);
  }
  const double lhs = geom.integrate(half);
  const double scale = std::max(geom.integrate(mag), 1e-300);
  if (std::abs(lhs) > 1e-6 * scale)
    throw Error(ErrorCode::IncompatibleTopology,
                "int (|phi|^2 + tau') / 2 dv = " + std::to_string(lhs) +
                    " does not vanish on a degree-0 line bundle");
  // Lambda F_{i(-w_y dx + w_x dy)} = (i/s) Laplacian w = -(i/2)(|phi|^2 + tau')
  Field rhs(geom.size());
  for (std::size_t p = 0; p < geom.size(); ++p) rhs[p] = -geom.kahler_scale() * half[p];
  RealField w = to_real(spectral::solve_poisson(rhs, geom));

  ConnectionState a = background_connection({1, 0, "L"}, geom);
  a.a = potential_connection(w, geom);

  FieldState probe;
  probe.a1 = a;
  MatField bil{Field(src.begin(), src.end())};
  const double r = max_norm(vortex_operator(a, bil, 1.0, tau_prime, geom));
  if (residual) *residual = r;
  if (r > opts.residual_tol)
    throw Error(ErrorCode::ResidualTooLarge, "second connection residual " + std::to_string(r));
  return a;
}

VortexSolution embed_vortex_as_coupled(const VortexSolution& vortex, const TorusGeometry& geom,
                                       const SolveOptions& opts) {
  const auto& v = vortex.state;
  if (v.is_triple() || v.rows() != 1)
    throw Error(ErrorCode::HypothesisUnmet, "embedding takes a rank-one vortex");
  const double t = vortex.params.tau;
  const auto vr = vortex_residuals(v, vortex.params, geom);
  if (vr.max() > opts.residual_tol)
    throw Error(ErrorCode::ResidualTooLarge,
                "input is not a vortex: residual " + std::to_string(vr.max()));
  const int d = v.a1.bundle.degree;
  const double vol = geom.volume();
  const double tau = 0.5 * (t + 4.0 * pi * d / vol);
  const double tau_prime = 0.5 * (4.0 * pi * d / vol - t);

  FieldState half = v;
  for (auto& e : half.phi)
    for (auto& z : e) z /= std::sqrt(2.0);
  ConnectionState a2 = solve_second_connection(half, tau_prime, geom, opts);

  VortexSolution sol;
  FieldState& tr = sol.state;
  tr.a1 = v.a1;
  for (int j = 0; j < geom.real_dim(); ++j) mat::axpy(tr.a1.a[j], 1.0, a2.a[j]);
  tr.a2 = a2;
  tr.a2->bundle = {1, 0, "E2"};
  tr.phi = half.phi;
  sol.params = derive_parameters(tr.a1.bundle, tr.a2->bundle, tau, geom);
  sol.residuals = vortex_residuals(tr, sol.params, geom);
  sol.energy = ymh_energy(tr, sol.params, geom);
  sol.certificate_gap = (sol.energy.total - sol.energy.topological_minimum) /
                        std::max(1.0, std::abs(sol.energy.topological_minimum));
  sol.iterations = vortex.iterations;
  if (sol.residuals.max() > opts.residual_tol)
    throw Error(ErrorCode::ResidualTooLarge,
                "coupled residual " + std::to_string(sol.residuals.max()));
  check_certificate(sol.energy);
  return sol;
}

double coulomb_residual(const ConnectionState& a, const TorusGeometry& geom) {
  const int r = a.rank();
  double worst = 0.0;
  for (int e = 0; e < r * r; ++e) {
    Field div(geom.size(), 0.0);
    for (int j = 0; j < geom.real_dim(); ++j) {
      auto d = spectral::deriv(a.a[j][e], geom, j);
      for (std::size_t p = 0; p < geom.size(); ++p) div[p] += d[p];
    }
    for (const auto& v : div) worst = std::max(worst, std::abs(v) / geom.kahler_scale());
  }
  return worst;
}

namespace {

GaugeField exp_skew(const MatField& x, int r, std::size_t npts) {
  auto g = mat::zeros(r, r, npts);
  Eigen::MatrixXcd h(r, r);
  for (std::size_t p = 0; p < npts; ++p) {
    for (int e = 0; e < r * r; ++e) h(e / r, e % r) = cplx(0.0, 1.0) * x[e][p];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd ph = (-cplx(0.0, 1.0) * es.eigenvalues().cast<cplx>()).array().exp();
    Eigen::MatrixXcd gm = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    for (int e = 0; e < r * r; ++e) g[e][p] = gm(e / r, e % r);
  }
  return g;
}

}  // namespace

ConnectionState coulomb_project(const ConnectionState& a, const TorusGeometry& geom,
                                const SolveOptions& opts, double field_limit) {
  const int r = a.rank();
  const int n = geom.real_dim();
  if (r == 1) {
    ConnectionState out = a;
    std::vector<Field> hat(n);
    for (int j = 0; j < n; ++j) {
      hat[j] = a.a[j][0];
      spectral::fft_full(hat[j], geom, -1);
    }
    // projection onto divergence-free modes, with the wavenumbers seen by spectral::deriv
    std::vector<int> mi(n);
    std::vector<double> k(n);
    const double norm = 1.0 / static_cast<double>(geom.size());
    for (std::size_t p = 0; p < geom.size(); ++p) {
      geom.unravel(p, mi);
      double k2 = 0.0;
      cplx kd = 0.0;
      for (int j = 0; j < n; ++j) {
        k[j] = mi[j] == geom.axis_size(j) / 2 ? 0.0 : geom.wavenumber(j, mi[j]);
        k2 += k[j] * k[j];
        kd += k[j] * hat[j][p];
      }
      for (int j = 0; j < n; ++j) {
        if (k2 > 0.0) hat[j][p] -= k[j] * kd / k2;
        hat[j][p] *= norm;
      }
    }
    for (int j = 0; j < n; ++j) {
      spectral::fft_full(hat[j], geom, +1);
      out.a[j][0] = hat[j];
    }
    return out;
  }

  double amp = 0.0;
  for (const auto& c : a.a) amp = std::max(amp, mat::max_abs(c));
  double lmax = 0.0;
  for (double L : geom.periods()) lmax = std::max(lmax, L);
  if (amp * lmax > field_limit)
    throw Error(ErrorCode::FieldTooLarge, "connection is outside the small-field regime");

  FieldState st;
  st.a1 = a;
  st.phi = mat::zeros(r, 1, geom.size());
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    const double res = coulomb_residual(st.a1, geom);
    if (res <= opts.residual_tol) return st.a1;
    if (res > 0.9 * prev)
      throw Error(ErrorCode::FieldTooLarge, "Coulomb iteration is not contracting");
    prev = res;
    // xi = Laplacian^{-1} (sum_j d_j a_j), g = exp(xi)
    MatField xi(r * r);
    for (int e = 0; e < r * r; ++e) {
      Field div(geom.size(), 0.0);
      for (int j = 0; j < n; ++j) {
        auto d = spectral::deriv(st.a1.a[j][e], geom, j);
        for (std::size_t p = 0; p < geom.size(); ++p) div[p] += d[p];
      }
      xi[e] = spectral::solve_poisson(div, geom);
    }
    // keep xi exactly skew-hermitian
    auto xs = mat::adjoint(xi, r, r);
    xi = mat::combine(0.5, xi, -0.5, xs);
    st = gauge_apply(exp_skew(xi, r, geom.size()), st, geom);
  }
  throw Error(ErrorCode::MaxIters, "Coulomb iteration did not converge");
}

FieldState pullback_product(const FieldState& s, const TorusGeometry& g2,
                            const TorusGeometry& g4) {
  if (g2.complex_dim() != 1 || g4.complex_dim() != 2 || g4.periods()[0] != g2.periods()[0] ||
      g4.grid()[0] != g2.grid()[0] || g4.kahler_scale() != g2.kahler_scale())
    throw Error(ErrorCode::ShapeMismatch, "T^4 must be T^2 x T^2 over the given T^2");
  auto lift_field = [&](const Field& f) {
    Field out(g4.size());
    std::vector<int> mi(4), m2(2);
    for (std::size_t p = 0; p < g4.size(); ++p) {
      g4.unravel(p, mi);
      m2[0] = mi[0];
      m2[1] = mi[1];
      out[p] = f[g2.ravel(m2)];
    }
    return out;
  };
  auto lift_connection = [&](const ConnectionState& c) {
    std::vector<int> charges{c.charges[0], 0};
    const double deg = charges_degree(charges, c.rank(), g4);
    if (std::abs(deg - std::round(deg)) > 1e-9)
      throw Error(ErrorCode::NonIntegralCharge, "pulled-back degree is not an integer");
    BundleSpec b = c.bundle;
    b.degree = static_cast<int>(std::lround(deg));
    ConnectionState out = background_connection(b, g4, charges);
    for (int j = 0; j < 2; ++j)
      for (std::size_t e = 0; e < c.a[j].size(); ++e) out.a[j][e] = lift_field(c.a[j][e]);
    return out;
  };
  FieldState out;
  out.a1 = lift_connection(s.a1);
  if (s.a2) out.a2 = lift_connection(*s.a2);
  for (const auto& e : s.phi) out.phi.push_back(lift_field(e));
  return out;
}

}  // namespace vortexlab
