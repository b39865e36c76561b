#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/error.hpp"

namespace vortexlab {

using cplx = std::complex<double>;
using Field = std::vector<cplx>;       // complex grid scalar, row-major over real axes
using RealField = std::vector<double>;

// Flat torus C^m / Lambda with a rectangular lattice. Complex direction k
// carries real axes 2k (x_k) and 2k+1 (y_k), both of period periods[k] and
// resolution grid[k]. The Kahler form is
//   omega = (i/2) * kahler_scale * sum_k dz^k ^ dzbar^k = kahler_scale * sum_k dx_k ^ dy_k,
// so the metric is kahler_scale * (euclidean) and Lambda(omega) = m.
class TorusGeometry {
 public:
  TorusGeometry(std::vector<double> periods, std::vector<int> grid, double kahler_scale);

  int complex_dim() const { return static_cast<int>(periods_.size()); }
  int real_dim() const { return 2 * complex_dim(); }
  double kahler_scale() const { return scale_; }
  const std::vector<double>& periods() const { return periods_; }
  const std::vector<int>& grid() const { return grid_; }

  // per real axis
  int axis_size(int axis) const { return grid_[axis / 2]; }
  double axis_length(int axis) const { return periods_[axis / 2]; }
  double spacing(int axis) const { return axis_length(axis) / axis_size(axis); }
  std::size_t stride(int axis) const { return strides_[axis]; }
  double coord(int axis, int i) const { return spacing(axis) * i; }
  // signed integer wavenumber index for FFT slot i
  int mode(int axis, int i) const;
  // angular wavenumber 2*pi*mode/L
  double wavenumber(int axis, int i) const;

  std::size_t size() const { return size_; }
  // multi-index of a flat point index
  void unravel(std::size_t idx, std::span<int> out) const;
  std::size_t ravel(std::span<const int> multi) const;

  // Vol(M) = scale^m * prod L_k^2
  double volume() const;
  // volume element carried by each grid point
  double cell_volume() const { return volume() / static_cast<double>(size_); }

  // trapezoid quadrature of a grid function against dv (pairwise summation)
  double integrate(std::span<const double> f) const;
  cplx integrate(std::span<const cplx> f) const;

  // flat-torus geodesic distance^2 (metric-scaled) from a grid point to a point of M
  double distance2(std::size_t idx, std::span<const double> center) const;
  double injectivity_radius() const;

  std::string to_json() const;
  std::string hash() const;
  static TorusGeometry from_json(const std::string& text);

  bool operator==(const TorusGeometry& o) const {
    return periods_ == o.periods_ && grid_ == o.grid_ && scale_ == o.scale_;
  }

 private:
  std::vector<double> periods_;
  std::vector<int> grid_;
  double scale_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

using GeometryPtr = std::shared_ptr<const TorusGeometry>;

inline GeometryPtr build_torus(std::vector<double> periods, std::vector<int> grid,
                               double kahler_scale = 1.0) {
  return std::make_shared<const TorusGeometry>(std::move(periods), std::move(grid), kahler_scale);
}

double pairwise_sum(std::span<const double> v);
cplx pairwise_sum(std::span<const cplx> v);

// A differential form on the grid: degree 1 has one component per real axis,
// degree 2 one component per axis pair j<k (pair_index). Each component is a
// rows x cols matrix-valued grid function stored entry-major.
struct GridForm {
  int degree = 2;
  int rows = 1;
  int cols = 1;
  std::vector<std::vector<Field>> comps;  // comps[c][entry] -> grid function

  const Field& at(int comp, int r, int c) const { return comps[comp][r * cols + c]; }
  Field& at(int comp, int r, int c) { return comps[comp][r * cols + c]; }
};

int pair_index(int j, int k, int n);  // j<k
int pair_count(int n);

// g^{i jbar} F_{i jbar}: (1/scale) * sum_k F_{x_k y_k}
std::vector<Field> contract_lambda(const GridForm& f, const TorusGeometry& geom);

// 0/1 indicator of the geodesic ball
RealField ball_mask(const TorusGeometry& geom, std::span<const double> center, double radius);

}  // namespace vortexlab
