#include "vortexlab/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>

#include <json.hpp>

namespace vortexlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositivePeriod: return "NonPositivePeriod";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::BidegreeMismatch: return "BidegreeMismatch";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::BundleMismatch: return "BundleMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonUnitaryGauge: return "NonUnitaryGauge";
    case ErrorCode::NonIntegralCharge: return "NonIntegralCharge";
    case ErrorCode::NonpositiveSigmaDenominator: return "NonpositiveSigmaDenominator";
    case ErrorCode::ThresholdViolated: return "ThresholdViolated";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::MaxIters: return "MaxIters";
    case ErrorCode::SingularLinearization: return "SingularLinearization";
    case ErrorCode::IncompatibleTopology: return "IncompatibleTopology";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::FieldTooLarge: return "FieldTooLarge";
    case ErrorCode::HypothesisUnmet: return "HypothesisUnmet";
    case ErrorCode::EmptySubobject: return "EmptySubobject";
    case ErrorCode::RankTwoSecondFactor: return "RankTwoSecondFactor";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ArtifactMissing: return "ArtifactMissing";
    case ErrorCode::ArtifactCorrupt: return "ArtifactCorrupt";
  }
  return "Unknown";
}

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

template <class T>
T pairwise_impl(const T* v, std::size_t n) {
  if (n <= 8) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_impl(v, half) + pairwise_impl(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> v) { return pairwise_impl(v.data(), v.size()); }
cplx pairwise_sum(std::span<const cplx> v) { return pairwise_impl(v.data(), v.size()); }

TorusGeometry::TorusGeometry(std::vector<double> periods, std::vector<int> grid,
                             double kahler_scale)
    : periods_(std::move(periods)), grid_(std::move(grid)), scale_(kahler_scale) {
  if (periods_.empty() || periods_.size() > 2)
    throw Error(ErrorCode::UnsupportedDimension, "complex dimension must be 1 or 2");
  if (grid_.size() != periods_.size())
    throw Error(ErrorCode::InvalidGrid, "grid and periods must have the same length");
  for (double p : periods_)
    if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::NonPositivePeriod, "period <= 0");
  if (!(scale_ > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "kahler_scale <= 0");
  for (int g : grid_)
    if (g < 8 || !is_power_of_two(g))
      throw Error(ErrorCode::InvalidGrid, "resolution must be a power of two >= 8");

  const int n = real_dim();
  strides_.assign(n, 1);
  for (int a = n - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * axis_size(a + 1);
  size_ = strides_[0] * axis_size(0);
}

int TorusGeometry::mode(int axis, int i) const {
  const int n = axis_size(axis);
  return i < n / 2 ? i : i - n;
}

double TorusGeometry::wavenumber(int axis, int i) const {
  return 2.0 * std::numbers::pi * mode(axis, i) / axis_length(axis);
}

void TorusGeometry::unravel(std::size_t idx, std::span<int> out) const {
  for (int a = 0; a < real_dim(); ++a) {
    out[a] = static_cast<int>(idx / strides_[a]);
    idx -= out[a] * strides_[a];
  }
}

std::size_t TorusGeometry::ravel(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int a = 0; a < real_dim(); ++a) idx += multi[a] * strides_[a];
  return idx;
}

double TorusGeometry::volume() const {
  double v = 1.0;
  for (double p : periods_) v *= scale_ * p * p;
  return v;
}

double TorusGeometry::integrate(std::span<const double> f) const {
  return pairwise_sum(f) * cell_volume();
}

cplx TorusGeometry::integrate(std::span<const cplx> f) const {
  return pairwise_sum(f) * cell_volume();
}

double TorusGeometry::distance2(std::size_t idx, std::span<const double> center) const {
  double d2 = 0.0;
  for (int a = 0; a < real_dim(); ++a) {
    const int i = static_cast<int>(idx / strides_[a]);
    idx -= i * strides_[a];
    const double L = axis_length(a);
    double d = coord(a, i) - center[a];
    d -= L * std::round(d / L);
    d2 += d * d;
  }
  return scale_ * d2;
}

double TorusGeometry::injectivity_radius() const {
  double lmin = periods_[0];
  for (double p : periods_) lmin = std::min(lmin, p);
  return 0.5 * std::sqrt(scale_) * lmin;
}

std::string TorusGeometry::to_json() const {
  nlohmann::json j;
  j["dim"] = complex_dim();
  j["periods"] = periods_;
  j["grid"] = grid_;
  j["kahler_scale"] = scale_;
  return j.dump();
}

std::string TorusGeometry::hash() const {
  // FNV-1a over the canonical JSON form
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TorusGeometry TorusGeometry::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  auto periods = j.at("periods").get<std::vector<double>>();
  auto grid = j.at("grid").get<std::vector<int>>();
  if (j.contains("dim") && j["dim"].get<int>() != static_cast<int>(periods.size()))
    throw Error(ErrorCode::UnsupportedDimension, "dim does not match the number of periods");
  return TorusGeometry(periods, grid, j.value("kahler_scale", 1.0));
}

int pair_count(int n) { return n * (n - 1) / 2; }

int pair_index(int j, int k, int n) {
  // lexicographic over j<k
  return j * n - j * (j + 1) / 2 + (k - j - 1);
}

std::vector<Field> contract_lambda(const GridForm& f, const TorusGeometry& geom) {
  const int n = geom.real_dim();
  if (f.degree != 2 || static_cast<int>(f.comps.size()) != pair_count(n))
    throw Error(ErrorCode::BidegreeMismatch, "contraction needs a complete 2-form");
  const int entries = f.rows * f.cols;
  const double inv = 1.0 / geom.kahler_scale();
  std::vector<Field> out(entries, Field(geom.size(), 0.0));
  for (int k = 0; k < geom.complex_dim(); ++k) {
    const auto& comp = f.comps[pair_index(2 * k, 2 * k + 1, n)];
    for (int e = 0; e < entries; ++e)
      for (std::size_t p = 0; p < geom.size(); ++p) out[e][p] += inv * comp[e][p];
  }
  return out;
}

RealField ball_mask(const TorusGeometry& geom, std::span<const double> center, double radius) {
  if (radius >= geom.injectivity_radius())
    throw Error(ErrorCode::RadiusTooLarge, "ball is not embedded");
  RealField mask(geom.size(), 0.0);
  const double r2 = radius * radius;
  for (std::size_t p = 0; p < geom.size(); ++p)
    if (geom.distance2(p, center) < r2) mask[p] = 1.0;
  return mask;
}

}  // namespace vortexlab
