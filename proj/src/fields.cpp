#include "vortexlab/fields.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "vortexlab/spectral.hpp"

namespace vortexlab {

using std::numbers::pi;

namespace mat {

MatField zeros(int rows, int cols, std::size_t npts) {
  return MatField(static_cast<std::size_t>(rows) * cols, Field(npts, 0.0));
}

MatField identity(int n, std::size_t npts) {
  auto m = zeros(n, n, npts);
  for (int i = 0; i < n; ++i) m[i * n + i].assign(npts, 1.0);
  return m;
}

MatField mul(const MatField& a, const MatField& b, int ra, int ca, int cb) {
  const std::size_t npts = a.empty() ? 0 : a[0].size();
  auto c = zeros(ra, cb, npts);
  for (int i = 0; i < ra; ++i)
    for (int k = 0; k < ca; ++k) {
      const Field& x = a[i * ca + k];
      for (int j = 0; j < cb; ++j) {
        const Field& y = b[k * cb + j];
        Field& z = c[i * cb + j];
        for (std::size_t p = 0; p < npts; ++p) z[p] += x[p] * y[p];
      }
    }
  return c;
}

MatField adjoint(const MatField& a, int rows, int cols) {
  const std::size_t npts = a.empty() ? 0 : a[0].size();
  auto t = zeros(cols, rows, npts);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      for (std::size_t p = 0; p < npts; ++p) t[j * rows + i][p] = std::conj(a[i * cols + j][p]);
  return t;
}

void axpy(MatField& y, cplx alpha, const MatField& x) {
  for (std::size_t e = 0; e < y.size(); ++e)
    for (std::size_t p = 0; p < y[e].size(); ++p) y[e][p] += alpha * x[e][p];
}

MatField combine(cplx alpha, const MatField& x, cplx beta, const MatField& y) {
  MatField out = x;
  for (std::size_t e = 0; e < out.size(); ++e)
    for (std::size_t p = 0; p < out[e].size(); ++p) out[e][p] = alpha * x[e][p] + beta * y[e][p];
  return out;
}

MatField commutator(const MatField& a, const MatField& b, int n) {
  auto ab = mul(a, b, n, n, n);
  axpy(ab, -1.0, mul(b, a, n, n, n));
  return ab;
}

RealField frob2(const MatField& a) {
  RealField out(a.empty() ? 0 : a[0].size(), 0.0);
  for (const auto& e : a)
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += std::norm(e[p]);
  return out;
}

RealField inner(const MatField& a, const MatField& b) {
  RealField out(a.empty() ? 0 : a[0].size(), 0.0);
  for (std::size_t e = 0; e < a.size(); ++e)
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += std::real(a[e][p] * std::conj(b[e][p]));
  return out;
}

Field trace(const MatField& a, int n) {
  Field out(a.empty() ? 0 : a[0].size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += a[i * n + i][p];
  return out;
}

double max_abs(const MatField& a) {
  double m = 0.0;
  for (const auto& e : a)
    for (const auto& v : e) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace mat

double flux_quantum(const TorusGeometry& geom, int plane) {
  const double L = geom.periods()[plane];
  return 2.0 * pi / (L * L);
}

double charges_degree(const std::vector<int>& charges, int rank, const TorusGeometry& geom) {
  double d = 0.0;
  for (int k = 0; k < geom.complex_dim(); ++k) {
    const double L = geom.periods()[k];
    d += charges[k] * rank * geom.volume() / (geom.kahler_scale() * L * L);
  }
  return d;
}

std::vector<int> background_charges(const BundleSpec& bundle, const TorusGeometry& geom) {
  if (bundle.rank < 1) throw Error(ErrorCode::ShapeMismatch, "rank must be positive");
  std::vector<int> q(geom.complex_dim(), 0);
  const double unit = charges_degree([&] {
    std::vector<int> e(geom.complex_dim(), 0);
    e[0] = 1;
    return e;
  }(), bundle.rank, geom);
  const double q0 = bundle.degree / unit;
  if (std::abs(q0 - std::round(q0)) > 1e-9)
    throw Error(ErrorCode::NonIntegralCharge,
                "degree " + std::to_string(bundle.degree) + " is not realizable with rank " +
                    std::to_string(bundle.rank) + " on this torus");
  q[0] = static_cast<int>(std::lround(q0));
  return q;
}

ConnectionState background_connection(const BundleSpec& bundle, const TorusGeometry& geom,
                                      std::vector<int> charges) {
  ConnectionState c;
  c.bundle = bundle;
  if (charges.empty()) {
    c.charges = background_charges(bundle, geom);
  } else {
    if (static_cast<int>(charges.size()) != geom.complex_dim())
      throw Error(ErrorCode::ShapeMismatch, "one charge per complex plane");
    if (std::abs(charges_degree(charges, bundle.rank, geom) - bundle.degree) > 1e-9)
      throw Error(ErrorCode::NonIntegralCharge, "charges do not reproduce the degree");
    c.charges = std::move(charges);
  }
  c.a.assign(geom.real_dim(), mat::zeros(bundle.rank, bundle.rank, geom.size()));
  return c;
}

std::vector<int> higgs_charges(const FieldState& s) {
  std::vector<int> q = s.a1.charges;
  if (s.a2)
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= s.a2->charges[k];
  return q;
}

namespace {

void check_connection(const ConnectionState& c, const TorusGeometry& geom) {
  const std::size_t r = c.rank();
  if (static_cast<int>(c.a.size()) != geom.real_dim() ||
      static_cast<int>(c.charges.size()) != geom.complex_dim())
    throw Error(ErrorCode::ShapeMismatch, "connection has wrong number of components");
  for (const auto& comp : c.a) {
    if (comp.size() != r * r) throw Error(ErrorCode::ShapeMismatch, "connection matrix size");
    for (const auto& e : comp)
      if (e.size() != geom.size()) throw Error(ErrorCode::ShapeMismatch, "connection grid size");
  }
}

}  // namespace

void validate(const FieldState& s, const TorusGeometry& geom) {
  check_connection(s.a1, geom);
  if (s.a2) check_connection(*s.a2, geom);
  if (s.phi.size() != static_cast<std::size_t>(s.rows() * s.cols()))
    throw Error(ErrorCode::ShapeMismatch, "Higgs field must be rank1 x rank2");
  for (const auto& e : s.phi)
    if (e.size() != geom.size()) throw Error(ErrorCode::ShapeMismatch, "Higgs grid size");
}

GridForm curvature(const ConnectionState& c, const TorusGeometry& geom) {
  const int n = geom.real_dim();
  const int r = c.rank();
  GridForm f;
  f.degree = 2;
  f.rows = f.cols = r;
  f.comps.assign(pair_count(n), mat::zeros(r, r, geom.size()));
  // derivatives of every perturbation component
  std::vector<std::vector<MatField>> da(n);
  for (int j = 0; j < n; ++j) {
    da[j].assign(n, {});
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      da[j][k].resize(r * r);
      for (int e = 0; e < r * r; ++e) da[j][k][e] = spectral::deriv(c.a[k][e], geom, j);
    }
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      auto& comp = f.comps[pair_index(j, k, n)];
      for (int e = 0; e < r * r; ++e)
        for (std::size_t p = 0; p < geom.size(); ++p) comp[e][p] = da[j][k][e][p] - da[k][j][e][p];
      if (r > 1) mat::axpy(comp, 1.0, mat::commutator(c.a[j], c.a[k], r));
      if (j % 2 == 0 && k == j + 1) {
        const int plane = j / 2;
        const cplx f0(0.0, -flux_quantum(geom, plane) * c.charges[plane]);
        for (int i = 0; i < r; ++i)
          for (auto& v : comp[i * r + i]) v += f0;
      }
    }
  return f;
}

std::vector<MatField> adjoint_derivative(const ConnectionState& c, const MatField& xi,
                                         const TorusGeometry& geom) {
  const int n = geom.real_dim();
  const int r = c.rank();
  std::vector<MatField> out(n);
  for (int j = 0; j < n; ++j) {
    out[j].resize(r * r);
    for (int e = 0; e < r * r; ++e) out[j][e] = spectral::deriv(xi[e], geom, j);
    if (r > 1) mat::axpy(out[j], 1.0, mat::commutator(c.a[j], xi, r));
  }
  return out;
}

MatField covariant_derivative(const FieldState& s, const TorusGeometry& geom, int axis) {
  return covariant_derivative(s, s.phi, geom, axis);
}

MatField covariant_derivative(const FieldState& s, const MatField& phi, const TorusGeometry& geom,
                              int axis) {
  const int rows = s.rows(), cols = s.cols();
  const auto q = higgs_charges(s);
  const int plane = axis / 2;
  MatField d(rows * cols);
  for (int e = 0; e < rows * cols; ++e)
    d[e] = spectral::deriv(phi[e], geom, axis, axis % 2 == 0 ? q[plane] : 0);
  if (axis % 2 == 1 && q[plane] != 0) {
    const double b = flux_quantum(geom, plane) * q[plane];
    const int xa = axis - 1;
    const int nx = geom.axis_size(xa);
    const std::size_t st = geom.stride(xa);
    for (int e = 0; e < rows * cols; ++e)
      for (std::size_t p = 0; p < geom.size(); ++p) {
        const double x = geom.coord(xa, static_cast<int>((p / st) % nx));
        d[e][p] += cplx(0.0, -b * x) * phi[e][p];
      }
  }
  mat::axpy(d, 1.0, mat::mul(s.a1.a[axis], phi, rows, rows, cols));
  if (s.a2) mat::axpy(d, -1.0, mat::mul(phi, s.a2->a[axis], rows, cols, cols));
  return d;
}

std::vector<MatField> covariant_derivatives(const FieldState& s, const TorusGeometry& geom) {
  std::vector<MatField> out(geom.real_dim());
  for (int j = 0; j < geom.real_dim(); ++j) out[j] = covariant_derivative(s, geom, j);
  return out;
}

std::vector<MatField> dbar_A(const FieldState& s, const TorusGeometry& geom) {
  validate(s, geom);
  std::vector<MatField> out(geom.complex_dim());
  for (int k = 0; k < geom.complex_dim(); ++k)
    out[k] = mat::combine(0.5, covariant_derivative(s, geom, 2 * k), cplx(0.0, 0.5),
                          covariant_derivative(s, geom, 2 * k + 1));
  return out;
}

double integrability_residual(const ConnectionState& c, const TorusGeometry& geom) {
  if (geom.complex_dim() == 1) return 0.0;
  const int n = geom.real_dim();
  auto f = curvature(c, geom);
  double worst = 0.0;
  const cplx I(0.0, 1.0);
  for (int a = 0; a < geom.complex_dim(); ++a)
    for (int b = a + 1; b < geom.complex_dim(); ++b) {
      const auto& fxx = f.comps[pair_index(2 * a, 2 * b, n)];
      const auto& fxy = f.comps[pair_index(2 * a, 2 * b + 1, n)];
      const auto& fyx = f.comps[pair_index(2 * a + 1, 2 * b, n)];
      const auto& fyy = f.comps[pair_index(2 * a + 1, 2 * b + 1, n)];
      MatField f02 = fxx;
      for (std::size_t e = 0; e < f02.size(); ++e)
        for (std::size_t p = 0; p < geom.size(); ++p)
          f02[e][p] = 0.25 * (fxx[e][p] + I * fxy[e][p] + I * fyx[e][p] - fyy[e][p]);
      for (double v : mat::frob2(f02)) worst = std::max(worst, std::sqrt(v));
    }
  return worst;
}

GaugeField identity_gauge(int rank, const TorusGeometry& geom) {
  return mat::identity(rank, geom.size());
}

GaugeField constant_phase_gauge(const std::vector<double>& angles, const TorusGeometry& geom) {
  const int r = static_cast<int>(angles.size());
  auto g = mat::zeros(r, r, geom.size());
  for (int i = 0; i < r; ++i) g[i * r + i].assign(geom.size(), std::polar(1.0, angles[i]));
  return g;
}

GaugeField random_gauge(std::uint64_t seed, int rank, double amplitude,
                        const TorusGeometry& geom) {
  std::mt19937_64 rng(seed);
  const int r = rank;
  // X skew-hermitian, band-limited so that exp(X) stays spectrally resolved
  auto x = mat::zeros(r, r, geom.size());
  for (int i = 0; i < r; ++i) {
    auto d = random_trig(rng, 2, amplitude, geom);
    for (std::size_t p = 0; p < geom.size(); ++p) x[i * r + i][p] = cplx(0.0, d[p]);
    for (int j = i + 1; j < r; ++j) {
      auto re = random_trig(rng, 2, amplitude, geom);
      auto im = random_trig(rng, 2, amplitude, geom);
      for (std::size_t p = 0; p < geom.size(); ++p) {
        x[i * r + j][p] = cplx(re[p], im[p]);
        x[j * r + i][p] = -cplx(re[p], -im[p]);
      }
    }
  }
  auto g = mat::zeros(r, r, geom.size());
  Eigen::MatrixXcd h(r, r);
  for (std::size_t p = 0; p < geom.size(); ++p) {
    // X = -i H with H hermitian, exp(X) = V diag(exp(-i lambda)) V^*
    for (int e = 0; e < r * r; ++e) h(e / r, e % r) = cplx(0.0, 1.0) * x[e][p];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd ph = (-cplx(0.0, 1.0) * es.eigenvalues().cast<cplx>()).array().exp();
    Eigen::MatrixXcd gm = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    for (int e = 0; e < r * r; ++e) g[e][p] = gm(e / r, e % r);
  }
  return g;
}

GaugeField compose(const GaugeField& g, const GaugeField& h, int rank) {
  return mat::mul(g, h, rank, rank, rank);
}

namespace {

void check_unitary(const GaugeField& g, int r, const TorusGeometry& geom) {
  if (g.size() != static_cast<std::size_t>(r * r))
    throw Error(ErrorCode::ShapeMismatch, "gauge rank does not match bundle");
  for (const auto& e : g)
    if (e.size() != geom.size()) throw Error(ErrorCode::ShapeMismatch, "gauge grid size");
  auto ggs = mat::mul(g, mat::adjoint(g, r, r), r, r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (std::size_t p = 0; p < geom.size(); ++p)
        if (std::abs(ggs[i * r + j][p] - (i == j ? 1.0 : 0.0)) > 1e-10)
          throw Error(ErrorCode::NonUnitaryGauge, "g g^* != I");
}

ConnectionState transform(const GaugeField& g, const ConnectionState& c,
                          const TorusGeometry& geom) {
  const int r = c.rank();
  ConnectionState out = c;
  auto ginv = mat::adjoint(g, r, r);
  for (int j = 0; j < geom.real_dim(); ++j) {
    MatField dg(r * r);
    for (int e = 0; e < r * r; ++e) dg[e] = spectral::deriv(g[e], geom, j);
    out.a[j] = mat::mul(mat::mul(g, c.a[j], r, r, r), ginv, r, r, r);
    mat::axpy(out.a[j], -1.0, mat::mul(dg, ginv, r, r, r));
  }
  return out;
}

}  // namespace

FieldState gauge_apply(const GaugeField& g1, const GaugeField& g2, const FieldState& s,
                       const TorusGeometry& geom) {
  validate(s, geom);
  const int r1 = s.rows(), r2 = s.cols();
  check_unitary(g1, r1, geom);
  FieldState out;
  out.a1 = transform(g1, s.a1, geom);
  out.phi = mat::mul(g1, s.phi, r1, r1, r2);
  if (s.a2) {
    check_unitary(g2, r2, geom);
    out.a2 = transform(g2, *s.a2, geom);
    out.phi = mat::mul(out.phi, mat::adjoint(g2, r2, r2), r1, r2, r2);
  }
  return out;
}

FieldState gauge_apply(const GaugeField& g, const FieldState& vortex, const TorusGeometry& geom) {
  return gauge_apply(g, GaugeField{}, vortex, geom);
}

RealField random_periodic(std::mt19937_64& rng, double decay, double amplitude,
                          const TorusGeometry& geom) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = geom.real_dim();
  Field c(geom.size());
  std::vector<int> mi(n);
  for (std::size_t p = 0; p < geom.size(); ++p) {
    geom.unravel(p, mi);
    double m2 = 0.0;
    bool nyquist = false;
    for (int a = 0; a < n; ++a) {
      const int m = geom.mode(a, mi[a]);
      nyquist = nyquist || mi[a] == geom.axis_size(a) / 2;
      m2 += static_cast<double>(m) * m;
    }
    const double re = normal(rng), im = normal(rng);
    c[p] = nyquist ? cplx(0.0) : cplx(re, im) * std::pow(1.0 + m2, -decay);
  }
  spectral::fft_full(c, geom, +1);
  RealField out(geom.size());
  double ms = 0.0;
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = c[p].real();
    ms += out[p] * out[p];
  }
  const double rms = std::sqrt(ms / static_cast<double>(out.size()));
  if (rms > 0.0)
    for (auto& v : out) v *= amplitude / rms;
  return out;
}

RealField random_trig(std::mt19937_64& rng, int max_mode, double amplitude,
                      const TorusGeometry& geom) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = geom.real_dim();
  Field c(geom.size());
  std::vector<int> mi(n);
  for (std::size_t p = 0; p < geom.size(); ++p) {
    geom.unravel(p, mi);
    bool inside = true;
    for (int a = 0; a < n; ++a) inside = inside && std::abs(geom.mode(a, mi[a])) <= max_mode;
    const double re = normal(rng), im = normal(rng);
    c[p] = inside ? cplx(re, im) : cplx(0.0);
  }
  spectral::fft_full(c, geom, +1);
  RealField out(geom.size());
  double ms = 0.0;
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = c[p].real();
    ms += out[p] * out[p];
  }
  const double rms = std::sqrt(ms / static_cast<double>(out.size()));
  if (rms > 0.0)
    for (auto& v : out) v *= amplitude / rms;
  return out;
}

Field theta_section(const std::vector<int>& charges, const std::vector<double>& x0, double width,
                    const TorusGeometry& geom) {
  Field out(geom.size(), 1.0);
  std::vector<int> mi(geom.real_dim());
  for (int k = 0; k < geom.complex_dim(); ++k) {
    const int q = charges[k];
    if (q == 0) continue;
    const double L = geom.periods()[k];
    const double w = width * L;
    const int nmax = static_cast<int>(std::ceil(8.0 * w / L)) + 2;
    for (std::size_t p = 0; p < geom.size(); ++p) {
      geom.unravel(p, mi);
      const double x = geom.coord(2 * k, mi[2 * k]), y = geom.coord(2 * k + 1, mi[2 * k + 1]);
      cplx acc = 0.0;
      for (int m = -nmax; m <= nmax; ++m) {
        const double t = x + m * L - x0[k];
        acc += std::exp(-t * t / (2 * w * w)) * std::polar(1.0, -2 * pi * q * m * y / L);
      }
      out[p] *= acc;
    }
  }
  return out;
}

Field random_section(std::mt19937_64& rng, double decay, const std::vector<int>& charges,
                     const TorusGeometry& geom) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Field out(geom.size(), 0.0);
  for (int term = 0; term < 2; ++term) {
    std::vector<double> x0(geom.complex_dim());
    for (int k = 0; k < geom.complex_dim(); ++k) x0[k] = unif(rng) * geom.periods()[k];
    auto th = theta_section(charges, x0, 0.2, geom);
    auto re = random_periodic(rng, decay, 1.0, geom);
    auto im = random_periodic(rng, decay, 1.0, geom);
    for (std::size_t p = 0; p < geom.size(); ++p) out[p] += cplx(re[p], im[p]) * th[p];
  }
  return out;
}

std::vector<MatField> random_perturbation(std::mt19937_64& rng, double decay, double amplitude,
                                          int rank, const TorusGeometry& geom) {
  const int n = geom.real_dim();
  const int r = rank;
  std::vector<MatField> a(n, mat::zeros(r, r, geom.size()));
  if (geom.complex_dim() == 1) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < r; ++i) {
        auto d = random_periodic(rng, decay, amplitude, geom);
        for (std::size_t p = 0; p < geom.size(); ++p) a[j][i * r + i][p] = cplx(0.0, d[p]);
        for (int k = i + 1; k < r; ++k) {
          auto re = random_periodic(rng, decay, amplitude, geom);
          auto im = random_periodic(rng, decay, amplitude, geom);
          for (std::size_t p = 0; p < geom.size(); ++p) {
            a[j][i * r + k][p] = cplx(re[p], im[p]);
            a[j][k * r + i][p] = cplx(-re[p], im[p]);
          }
        }
      }
    return a;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < r; ++i) {
    auto u = random_periodic(rng, decay, 0.15 * amplitude, geom);
    auto chi = random_periodic(rng, decay, 0.15 * amplitude, geom);
    Field uc(u.begin(), u.end()), cc(chi.begin(), chi.end());
    for (int k = 0; k < geom.complex_dim(); ++k) {
      auto ux = spectral::deriv(uc, geom, 2 * k), uy = spectral::deriv(uc, geom, 2 * k + 1);
      auto cx = spectral::deriv(cc, geom, 2 * k), cy = spectral::deriv(cc, geom, 2 * k + 1);
      const double hx = 0.2 * amplitude * normal(rng), hy = 0.2 * amplitude * normal(rng);
      for (std::size_t p = 0; p < geom.size(); ++p) {
        a[2 * k][i * r + i][p] = cplx(0.0, -uy[p].real() + cx[p].real() + hx);
        a[2 * k + 1][i * r + i][p] = cplx(0.0, ux[p].real() + cy[p].real() + hy);
      }
    }
  }
  return a;
}

FieldState random_state(std::uint64_t seed, double decay, const BundleSpec& b1,
                        const std::optional<BundleSpec>& b2, const TorusGeometry& geom,
                        const RandomOptions& opts) {
  std::mt19937_64 rng(seed);
  FieldState s;
  s.a1 = background_connection(b1, geom);
  s.a1.a = random_perturbation(rng, decay, opts.connection_amplitude, b1.rank, geom);
  if (b2) {
    s.a2 = background_connection(*b2, geom);
    s.a2->a = random_perturbation(rng, decay, opts.connection_amplitude, b2->rank, geom);
  }
  const auto q = higgs_charges(s);
  s.phi.resize(s.rows() * s.cols());
  for (auto& e : s.phi) {
    e = random_section(rng, decay, q, geom);
    for (auto& v : e) v *= opts.higgs_amplitude;
  }
  return s;
}

}  // namespace vortexlab
