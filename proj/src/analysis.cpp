#include "vortexlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "vortexlab/spectral.hpp"

namespace vortexlab {

using std::numbers::pi;

namespace {

double unit_ball_volume(int n) { return n == 2 ? pi : 0.5 * pi * pi; }

// axis-aligned neighbor with periodic wrap
std::size_t neighbor(const TorusGeometry& geom, std::size_t p, int axis, int step) {
  const std::size_t stride = geom.stride(axis);
  const int n = geom.axis_size(axis);
  const int i = static_cast<int>((p / stride) % n);
  const int j = ((i + step) % n + n) % n;
  return p + (static_cast<std::ptrdiff_t>(j) - i) * static_cast<std::ptrdiff_t>(stride);
}

Field central_difference(const Field& f, const TorusGeometry& geom, int axis) {
  Field out(f.size());
  const double h2 = 2.0 * geom.spacing(axis);
  for (std::size_t p = 0; p < f.size(); ++p)
    out[p] = (f[neighbor(geom, p, axis, 1)] - f[neighbor(geom, p, axis, -1)]) / h2;
  return out;
}

}  // namespace

DensityProfile scaled_energy_profile(const RealField& density, const std::vector<double>& center,
                                     const std::vector<double>& radii, const TorusGeometry& geom) {
  if (density.size() != geom.size() || static_cast<int>(center.size()) != geom.real_dim())
    throw Error(ErrorCode::ShapeMismatch, "density or center does not match the geometry");
  const int n = geom.real_dim();
  double sup = 0.0;
  for (double v : density) sup = std::max(sup, std::abs(v));
  double h = 0.0;
  for (int a = 0; a < n; ++a) h = std::max(h, geom.spacing(a) * std::sqrt(geom.kahler_scale()));

  DensityProfile prof;
  prof.center = center;
  RealField masked(geom.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii[i];
    if (!(r > 0.0) || (i > 0 && r <= radii[i - 1]))
      throw Error(ErrorCode::ConfigInvalid, "radii must be positive and strictly increasing");
    auto mask = ball_mask(geom, center, r);
    for (std::size_t p = 0; p < geom.size(); ++p) masked[p] = density[p] * mask[p];
    const double w = std::pow(r, 4 - n);
    prof.radii.push_back(r);
    prof.values.push_back(w * geom.integrate(masked));
    const double sphere = n * unit_ball_volume(n) * std::pow(r, n - 1);
    prof.slack.push_back(w * sup * sphere * 0.5 * h * std::sqrt(static_cast<double>(n)));
  }
  return prof;
}

MonotonicityVerdict monotonicity_check(const DensityProfile& profile, double tol, bool stationary) {
  MonotonicityVerdict v;
  v.hypothesis_met = stationary;
  v.worst_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < profile.values.size(); ++i) {
    const double drop = profile.values[i] - profile.values[i + 1];
    if (drop > v.worst_violation) {
      v.worst_violation = drop;
      v.at_radius = profile.radii[i + 1];
    }
  }
  if (profile.values.size() < 2) v.worst_violation = 0.0;
  v.monotone = v.worst_violation <= tol;
  return v;
}

RealField synthetic_bump_density(const std::vector<std::vector<double>>& points,
                                 const std::vector<double>& masses, double lambda,
                                 const RealField& background, const TorusGeometry& geom) {
  if (points.size() != masses.size() || background.size() != geom.size())
    throw Error(ErrorCode::ShapeMismatch, "bump points, masses and background disagree");
  const int n = geom.real_dim();
  RealField out = background;
  const double norm = std::pow(2.0 * pi, -0.5 * n) * std::pow(lambda, -n);
  for (std::size_t j = 0; j < points.size(); ++j)
    for (std::size_t p = 0; p < geom.size(); ++p) {
      const double d2 = geom.distance2(p, points[j]) / (lambda * lambda);
      if (d2 < 80.0) out[p] += masses[j] * norm * std::exp(-0.5 * d2);
    }
  return out;
}

ConcentrationReport concentration_detect(const std::vector<RealField>& densities, double epsilon,
                                         const std::vector<double>& r_schedule,
                                         const TorusGeometry& geom, std::size_t tail) {
  if (densities.empty() || r_schedule.empty())
    throw Error(ErrorCode::ConfigInvalid, "concentration needs densities and radii");
  for (std::size_t i = 1; i < r_schedule.size(); ++i)
    if (!(r_schedule[i] < r_schedule[i - 1]))
      throw Error(ErrorCode::ConfigInvalid, "radius schedule must decrease");
  for (const auto& d : densities)
    if (d.size() != geom.size()) throw Error(ErrorCode::ShapeMismatch, "density size");
  const int n = geom.real_dim();
  const std::size_t first = tail == 0 || tail >= densities.size() ? 0 : densities.size() - tail;

  std::vector<Field> spectra;
  for (std::size_t i = first; i < densities.size(); ++i) {
    Field f(densities[i].begin(), densities[i].end());
    spectral::fft_full(f, geom, -1);
    spectra.push_back(std::move(f));
  }
  const std::vector<double> origin(n, 0.0);
  const double r = r_schedule.back();
  Field kernel;
  {
    auto mask = ball_mask(geom, origin, r);
    kernel.assign(mask.begin(), mask.end());
    spectral::fft_full(kernel, geom, -1);
  }
  ConcentrationReport rep;
  rep.epsilon = epsilon;
  rep.theta.assign(geom.size(), std::numeric_limits<double>::infinity());
  const double w = std::pow(r, 4 - n) * geom.cell_volume() / static_cast<double>(geom.size());
  for (const auto& s : spectra) {
    Field conv(geom.size());
    for (std::size_t p = 0; p < geom.size(); ++p) conv[p] = s[p] * kernel[p];
    spectral::fft_full(conv, geom, +1);
    for (std::size_t p = 0; p < geom.size(); ++p)
      rep.theta[p] = std::min(rep.theta[p], w * conv[p].real());
  }

  std::vector<char> seen(geom.size(), 0);
  for (std::size_t p = 0; p < geom.size(); ++p) {
    if (rep.theta[p] < epsilon) continue;
    rep.detected_points.push_back(p);
    if (seen[p]) continue;
    Concentration best;
    best.index = p;
    best.theta = rep.theta[p];
    std::deque<std::size_t> queue{p};
    seen[p] = 1;
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (rep.theta[q] > best.theta) {
        best.theta = rep.theta[q];
        best.index = q;
      }
      for (int a = 0; a < n; ++a)
        for (int step : {-1, 1}) {
          const std::size_t nb = neighbor(geom, q, a, step);
          if (!seen[nb] && rep.theta[nb] >= epsilon) {
            seen[nb] = 1;
            queue.push_back(nb);
          }
        }
    }
    std::vector<int> mi(n);
    geom.unravel(best.index, mi);
    for (int a = 0; a < n; ++a) best.point.push_back(geom.coord(a, mi[a]));
    rep.clusters.push_back(std::move(best));
  }
  std::sort(rep.clusters.begin(), rep.clusters.end(),
            [](const Concentration& a, const Concentration& b) { return a.index < b.index; });
  return rep;
}

ElResidual euler_lagrange_residual(const TripleState& t, const ParameterSet& p,
                                   const TorusGeometry& geom, double tol) {
  validate(t, geom);
  if (!t.is_triple() || t.rows() != 1 || t.cols() != 1)
    throw Error(ErrorCode::HypothesisUnmet, "Euler-Lagrange check is implemented for abelian triples");
  const auto vr = vortex_residuals(t, p, geom);
  if (vr.max() > tol)
    throw Error(ErrorCode::HypothesisUnmet,
                "input is not a coupled vortex: residual " + std::to_string(vr.max()));
  const int n = geom.real_dim();
  const double s = geom.kahler_scale();

  Field rho(geom.size());
  for (std::size_t q = 0; q < geom.size(); ++q) rho[q] = std::norm(t.phi[0][q]);
  std::vector<Field> drho(n);
  for (int a = 0; a < n; ++a) drho[a] = central_difference(rho, geom, a);

  // d^* F = J d(Lambda F) for integrable F, with J dx = -dy, J dy = dx
  auto residual = [&](const ConnectionState& a, double sign) {
    auto f = curvature(a, geom);
    std::vector<Field> dstar(n, Field(geom.size(), 0.0));
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const auto& fjk = f.comps[pair_index(j, k, n)][0];
        auto dj = central_difference(fjk, geom, j);
        auto dk = central_difference(fjk, geom, k);
        for (std::size_t q = 0; q < geom.size(); ++q) {
          dstar[k][q] -= dj[q] / s;  // -(1/s) d_j F_jk
          dstar[j][q] += dk[q] / s;  // -(1/s) d_k F_kj
        }
      }
    double worst = 0.0;
    for (int b = 0; b < n; ++b) {
      const int plane = b / 2;
      const bool is_x = b % 2 == 0;
      const Field& src = is_x ? drho[2 * plane + 1] : drho[2 * plane];
      const double jsign = is_x ? 1.0 : -1.0;
      for (std::size_t q = 0; q < geom.size(); ++q) {
        const cplx rhs = sign * cplx(0.0, 0.5) * jsign * src[q];
        worst = std::max(worst, std::abs(dstar[b][q] - rhs));
      }
    }
    return worst;
  };
  ElResidual r;
  r.e1 = residual(t.a1, 1.0);
  r.e2 = residual(*t.a2, -1.0);
  r.e3 = vr.get("dbar");
  return r;
}

EnergyAudit energy_identity_audit(const RealField& limit_density, const std::vector<double>& masses,
                                  double e_tau, const TorusGeometry& geom, double tol) {
  if (limit_density.size() != geom.size())
    throw Error(ErrorCode::ShapeMismatch, "limit density size");
  EnergyAudit a;
  a.limit_energy = geom.integrate(limit_density);
  for (double m : masses) {
    a.concentrated_mass += m;
    const double mult = m / (8.0 * pi * pi);
    a.multiplicities.push_back(mult);
    if (std::abs(mult - std::round(mult)) > 1e-6)
      a.warnings.push_back("mass " + std::to_string(m) + " is not an integer multiple of 8 pi^2");
  }
  a.e_tau = e_tau;
  a.gap = std::abs(a.limit_energy + a.concentrated_mass - e_tau) / std::max(std::abs(e_tau), 1e-300);
  a.pass = a.gap <= tol;
  return a;
}

std::string profile_csv(const DensityProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << "radius,value,slack\n";
  for (std::size_t i = 0; i < p.radii.size(); ++i)
    os << p.radii[i] << ',' << p.values[i] << ',' << p.slack[i] << '\n';
  return os.str();
}

std::string to_json(const DensityProfile& p, const MonotonicityVerdict& v) {
  nlohmann::ordered_json j;
  j["center"] = p.center;
  j["radii"] = p.radii;
  j["values"] = p.values;
  j["slack"] = p.slack;
  j["monotone"] = v.monotone;
  j["hypothesis_met"] = v.hypothesis_met;
  j["worst_violation"] = v.worst_violation;
  j["at_radius"] = v.at_radius;
  return j.dump(2);
}

std::string to_json(const ConcentrationReport& r, const TorusGeometry& geom) {
  nlohmann::ordered_json j;
  j["epsilon"] = r.epsilon;
  j["detected_count"] = r.detected_points.size();
  j["clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : r.clusters) {
    nlohmann::ordered_json e;
    e["point"] = c.point;
    e["index"] = c.index;
    e["theta"] = c.theta;
    j["clusters"].push_back(e);
  }
  j["geometry_hash"] = geom.hash();
  return j.dump(2);
}

std::string to_json(const ElResidual& r) {
  nlohmann::ordered_json j;
  j["e1"] = r.e1;
  j["e2"] = r.e2;
  j["e3"] = r.e3;
  j["max"] = r.max();
  return j.dump(2);
}

std::string to_json(const EnergyAudit& a) {
  nlohmann::ordered_json j;
  j["limit_energy"] = a.limit_energy;
  j["concentrated_mass"] = a.concentrated_mass;
  j["e_tau"] = a.e_tau;
  j["gap"] = a.gap;
  j["pass"] = a.pass;
  j["multiplicities"] = a.multiplicities;
  j["warnings"] = a.warnings;
  return j.dump(2);
}

}  // namespace vortexlab
