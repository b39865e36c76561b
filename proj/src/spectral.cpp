#include "vortexlab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace vortexlab::spectral {

namespace {

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

// Plans are cached for the lifetime of the process and executed with the
// new-array interface, so they are independent of the buffers used to plan.
class PlanCache {
 public:
  using Key = std::tuple<std::vector<int>, int, int>;  // shape, axis (-1 = full), sign

  fftw_plan get(const std::vector<int>& shape, int axis, int sign) {
    std::lock_guard lock(plan_mutex());
    Key key{shape, axis, sign};
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::size_t total = 1;
    for (int s : shape) total *= s;
    std::vector<cplx> scratch(total);
    fftw_plan plan = nullptr;
    const int rank = static_cast<int>(shape.size());
    if (axis < 0) {
      plan = fftw_plan_dft(rank, shape.data(), as_fftw(scratch.data()), as_fftw(scratch.data()),
                           sign, kPlanFlags);
    } else {
      std::vector<std::size_t> strides(rank, 1);
      for (int a = rank - 2; a >= 0; --a) strides[a] = strides[a + 1] * shape[a + 1];
      fftw_iodim dim{shape[axis], static_cast<int>(strides[axis]),
                     static_cast<int>(strides[axis])};
      std::vector<fftw_iodim> loops;
      for (int a = 0; a < rank; ++a)
        if (a != axis)
          loops.push_back({shape[a], static_cast<int>(strides[a]), static_cast<int>(strides[a])});
      plan = fftw_plan_guru_dft(1, &dim, static_cast<int>(loops.size()), loops.data(),
                                as_fftw(scratch.data()), as_fftw(scratch.data()), sign,
                                kPlanFlags);
    }
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

std::vector<int> shape_of(const TorusGeometry& geom) {
  std::vector<int> s(geom.real_dim());
  for (int a = 0; a < geom.real_dim(); ++a) s[a] = geom.axis_size(a);
  return s;
}

void fft_1d(std::span<cplx> f, int sign) {
  fftw_plan p = cache().get({static_cast<int>(f.size())}, 0, sign);
  fftw_execute_dft(p, as_fftw(f.data()), as_fftw(f.data()));
}

// In-place spectral derivative of a periodic 1D array with period `length`.
void deriv_1d(std::span<cplx> f, double length) {
  const int n = static_cast<int>(f.size());
  fft_1d(f, FFTW_FORWARD);
  for (int i = 0; i < n; ++i) {
    const int m = i < n / 2 ? i : i - n;
    const double k = (i == n / 2) ? 0.0 : 2.0 * std::numbers::pi * m / length;
    f[i] *= cplx(0.0, k) / static_cast<double>(n);
  }
  fft_1d(f, FFTW_BACKWARD);
}

// Order of y-modes on the unfolded line for each residue class.
struct Unfolding {
  std::vector<std::vector<int>> slots;  // per residue: FFT slot indices, ordered by n
};

const Unfolding& unfolding(int n, int q) {
  static std::map<std::pair<int, int>, Unfolding> memo;
  std::lock_guard lock(plan_mutex());
  auto key = std::make_pair(n, q);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const int aq = std::abs(q);
  Unfolding u;
  u.slots.resize(aq);
  for (int r = 0; r < aq; ++r) {
    std::vector<std::pair<int, int>> order;  // (n, slot)
    for (int kappa = -n / 2; kappa < n / 2; ++kappa) {
      if (((kappa % aq) + aq) % aq != r) continue;
      const int shift = (r - kappa) / q;
      const int slot = kappa < 0 ? kappa + n : kappa;
      order.emplace_back(shift, slot);
    }
    std::sort(order.begin(), order.end());
    for (auto& [s, slot] : order) u.slots[r].push_back(slot);
  }
  return memo.emplace(key, std::move(u)).first->second;
}

void twisted_x_deriv(std::span<cplx> out, const TorusGeometry& geom, int axis, int q) {
  const int ay = axis + 1;
  const int n = geom.axis_size(axis);
  if (n % std::abs(q) != 0)
    throw Error(ErrorCode::NonIntegralCharge, "grid resolution must be divisible by the charge");
  const std::size_t sx = geom.stride(axis), sy = geom.stride(ay);
  const double h = geom.spacing(axis);
  const auto& unf = unfolding(n, q);

  // out already holds f after a forward y-DFT (unnormalized)
  std::vector<int> multi(geom.real_dim());
  std::vector<cplx> line;
  for (std::size_t base = 0; base < geom.size(); ++base) {
    geom.unravel(base, multi);
    if (multi[axis] != 0 || multi[ay] != 0) continue;
    for (const auto& slots : unf.slots) {
      const std::size_t len = slots.size() * n;
      line.assign(len, 0.0);
      for (std::size_t t = 0; t < slots.size(); ++t)
        for (int i = 0; i < n; ++i) line[t * n + i] = out[base + i * sx + slots[t] * sy];
      deriv_1d(line, static_cast<double>(len) * h);
      for (std::size_t t = 0; t < slots.size(); ++t)
        for (int i = 0; i < n; ++i) out[base + i * sx + slots[t] * sy] = line[t * n + i];
    }
  }
}

}  // namespace

void set_threads(int) {
  // FFTW is used single-threaded; grid kernels are serial so reductions stay bit-stable.
}

void fft_axis(std::span<cplx> f, const TorusGeometry& geom, int axis, int sign) {
  fftw_plan p = cache().get(shape_of(geom), axis, sign);
  fftw_execute_dft(p, as_fftw(f.data()), as_fftw(f.data()));
}

void fft_full(std::span<cplx> f, const TorusGeometry& geom, int sign) {
  fftw_plan p = cache().get(shape_of(geom), -1, sign);
  fftw_execute_dft(p, as_fftw(f.data()), as_fftw(f.data()));
}

Field deriv(std::span<const cplx> f, const TorusGeometry& geom, int axis, int charge) {
  Field out(f.begin(), f.end());
  const bool twisted = charge != 0 && axis % 2 == 0;
  if (!twisted) {
    fft_axis(out, geom, axis, FFTW_FORWARD);
    const int n = geom.axis_size(axis);
    const std::size_t st = geom.stride(axis);
    std::vector<int> multi(geom.real_dim());
    for (std::size_t p = 0; p < out.size(); ++p) {
      const int i = static_cast<int>((p / st) % n);
      const double k = (i == n / 2) ? 0.0 : geom.wavenumber(axis, i);
      out[p] *= cplx(0.0, k) / static_cast<double>(n);
    }
    fft_axis(out, geom, axis, FFTW_BACKWARD);
    return out;
  }
  const int ay = axis + 1;
  const int ny = geom.axis_size(ay);
  fft_axis(out, geom, ay, FFTW_FORWARD);
  twisted_x_deriv(out, geom, axis, charge);
  fft_axis(out, geom, ay, FFTW_BACKWARD);
  for (auto& v : out) v /= static_cast<double>(ny);
  return out;
}

Field multiplier(std::span<const cplx> f, const TorusGeometry& geom,
                 const std::function<cplx(std::span<const double>)>& m) {
  Field out(f.begin(), f.end());
  fft_full(out, geom, FFTW_FORWARD);
  const int n = geom.real_dim();
  std::vector<int> multi(n);
  std::vector<double> k(n);
  const double norm = 1.0 / static_cast<double>(geom.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    geom.unravel(p, multi);
    for (int a = 0; a < n; ++a) k[a] = geom.wavenumber(a, multi[a]);
    out[p] *= m(k) * norm;
  }
  fft_full(out, geom, FFTW_BACKWARD);
  return out;
}

Field laplacian(std::span<const cplx> f, const TorusGeometry& geom) {
  return multiplier(f, geom, [](std::span<const double> k) {
    double k2 = 0.0;
    for (double v : k) k2 += v * v;
    return cplx(-k2, 0.0);
  });
}

Field solve_poisson(std::span<const cplx> rhs, const TorusGeometry& geom) {
  return multiplier(rhs, geom, [](std::span<const double> k) {
    double k2 = 0.0;
    for (double v : k) k2 += v * v;
    return k2 == 0.0 ? cplx(0.0) : cplx(-1.0 / k2, 0.0);
  });
}

double spectral_mass_above(std::span<const cplx> f, const TorusGeometry& geom, int cutoff) {
  Field c(f.begin(), f.end());
  fft_full(c, geom, FFTW_FORWARD);
  const int n = geom.real_dim();
  std::vector<int> multi(n);
  double hi = 0.0, total = 0.0;
  for (std::size_t p = 0; p < c.size(); ++p) {
    geom.unravel(p, multi);
    int mmax = 0;
    for (int a = 0; a < n; ++a) mmax = std::max(mmax, std::abs(geom.mode(a, multi[a])));
    const double w = std::norm(c[p]);
    total += w;
    if (mmax >= cutoff) hi += w;
  }
  return total > 0.0 ? hi / total : 0.0;
}

}  // namespace vortexlab::spectral
