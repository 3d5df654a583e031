#include "cboed/density.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cboed/error.hpp"
#include "cboed/gauss_transform.hpp"

namespace cboed {

namespace {

std::atomic<std::uint64_t> g_fit_count{0};

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

std::vector<double> column_sd(const Matrix& points) {
  const std::size_t n = points.rows();
  const std::size_t m = points.cols();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "bandwidth selection needs at least two points");
  std::vector<double> sd(m);
  for (std::size_t d = 0; d < m; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += points(i, d);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = points(i, d) - mean;
      ss += e * e;
    }
    sd[d] = std::sqrt(ss / static_cast<double>(n - 1));
    // Relative test: a constant column can leave rounding noise in ss.
    if (!(sd[d] > 1e-14 * std::max(1.0, std::abs(mean)))) {
      throw Error(ErrorCode::kDegenerateDimension,
                  "data dimension " + std::to_string(d) +
                      " has no spread; the QoI is insensitive to the parameters");
    }
  }
  return sd;
}

}  // namespace

double standard_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<double> silverman_bandwidth(const Matrix& points) {
  auto h = column_sd(points);
  const double m = static_cast<double>(points.cols());
  const double n = static_cast<double>(points.rows());
  const double factor = std::pow(4.0 / ((m + 2.0) * n), 1.0 / (m + 4.0));
  for (double& v : h) v *= factor;
  return h;
}

std::vector<double> scott_bandwidth(const Matrix& points) {
  auto h = column_sd(points);
  const double m = static_cast<double>(points.cols());
  const double n = static_cast<double>(points.rows());
  const double factor = std::pow(n, -1.0 / (m + 4.0));
  for (double& v : h) v *= factor;
  return h;
}

GaussianKde::GaussianKde(Matrix points, std::vector<double> bandwidth)
    : points_(std::move(points)), bandwidth_(std::move(bandwidth)) {
  double prod = static_cast<double>(points_.rows());
  for (double h : bandwidth_) prod *= h * std::sqrt(2.0 * std::numbers::pi);
  norm_ = 1.0 / prod;
}

GaussianKde GaussianKde::fit(const Matrix& points, const BandwidthRule& rule) {
  const std::size_t n = points.rows();
  const std::size_t m = points.cols();
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "KDE needs at least one dimension");
  if (m > kMaxKdeDims) {
    throw Error(ErrorCode::kDimensionCapExceeded,
                "KDE supports at most " + std::to_string(kMaxKdeDims) + " data dimensions");
  }
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "KDE needs at least two points");
  for (double v : points.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "KDE points must be finite");
  }

  // Sorting first makes the fit, bandwidth included, independent of point order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a);
    const auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  Matrix sorted(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(points.row(order[i]).begin(), m, sorted.row(i).begin());
  }

  std::vector<double> h;
  switch (rule.kind) {
    case BandwidthRule::Kind::kSilverman: h = silverman_bandwidth(sorted); break;
    case BandwidthRule::Kind::kScott: h = scott_bandwidth(sorted); break;
    case BandwidthRule::Kind::kFixed:
      if (rule.fixed.size() != m) {
        throw Error(ErrorCode::kDimensionMismatch, "fixed bandwidth needs one value per dimension");
      }
      for (double v : rule.fixed) {
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw Error(ErrorCode::kInvalidArgument, "fixed bandwidth values must be positive");
        }
      }
      h = rule.fixed;
      break;
  }


  g_fit_count.fetch_add(1, std::memory_order_relaxed);
  return GaussianKde(std::move(sorted), std::move(h));
}

std::uint64_t GaussianKde::fit_count() { return g_fit_count.load(std::memory_order_relaxed); }

double GaussianKde::eval(std::span<const double> x) const {
  const std::size_t n = points_.rows();
  const std::size_t m = points_.cols();
  if (x.size() != m) throw Error(ErrorCode::kDimensionMismatch, "KDE query has the wrong dimension");

  // Rows are sorted by their first coordinate; only the window within the
  // cutoff contributes.
  const double reach = kKernelCutoff * bandwidth_[0];
  std::size_t lo = 0, hi = n;
  {
    std::size_t a = 0, b = n;
    while (a < b) {
      const std::size_t mid = (a + b) / 2;
      if (points_(mid, 0) < x[0] - reach) a = mid + 1; else b = mid;
    }
    lo = a;
    b = n;
    while (a < b) {
      const std::size_t mid = (a + b) / 2;
      if (points_(mid, 0) <= x[0] + reach) a = mid + 1; else b = mid;
    }
    hi = a;
  }

  double inv_h[kMaxKdeDims];
  for (std::size_t d = 0; d < m; ++d) inv_h[d] = 1.0 / bandwidth_[d];

  double sum = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto p = points_.row(i);
    double q = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
      const double z = (x[d] - p[d]) * inv_h[d];
      q += z * z;
    }
    sum += std::exp(-0.5 * q);
  }
  return sum * norm_;
}

std::vector<double> GaussianKde::eval_many(const Matrix& xs, Parallelism par) const {
  if (xs.cols() != dims()) throw Error(ErrorCode::kDimensionMismatch, "KDE query has the wrong dimension");
  std::vector<double> out(xs.rows());
  if (dims() == 1) {
    const std::vector<double> src = points_.column(0);
    const GaussTransform1d transform(src, bandwidth_[0], {std::vector<double>(src.size(), 1.0)});
    parallel_for(xs.rows(), par, [&](std::size_t i) {
      double s = 0.0;
      transform.evaluate(xs(i, 0), std::span<double>(&s, 1));
      out[i] = std::max(0.0, s) * norm_;
    });
  } else {
    parallel_for(xs.rows(), par, [&](std::size_t i) { out[i] = eval(xs.row(i)); });
  }
  return out;
}

ObservedDensity::ObservedDensity(std::vector<double> c, std::vector<double> s)
    : center(std::move(c)), sigma(std::move(s)) {
  if (center.empty() || center.size() != sigma.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "observed density needs one sigma per center coordinate");
  }
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (!std::isfinite(center[i])) throw Error(ErrorCode::kInvalidArgument, "observed center must be finite");
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw Error(ErrorCode::kInvalidArgument, "observed sigma must be positive");
    }
  }
}

double ObservedDensity::peak() const {
  double p = 1.0;
  for (double s : sigma) p *= kInvSqrt2Pi / s;
  return p;
}

double ObservedDensity::normalized(std::span<const double> x) const {
  if (!norm_constant) throw Error(ErrorCode::kInvalidArgument, "observed density has no normalization constant yet");
  return gaussian_profile_eval(*this, x) / *norm_constant;
}

double gaussian_profile_eval(const ObservedDensity& obs, std::span<const double> x) {
  if (x.size() != obs.dims()) throw Error(ErrorCode::kDimensionMismatch, "profile query has the wrong dimension");
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - obs.center[i]) / obs.sigma[i];
    q += z * z;
  }
  return obs.peak() * std::exp(-0.5 * q);
}

NoiseModel NoiseModel::fixed(std::vector<double> sigma) {
  if (sigma.empty()) throw ValidationError("noise.sigma", "must not be empty");
  for (double s : sigma) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("noise.sigma", "must be positive");
  }
  return NoiseModel(Fixed{std::move(sigma)});
}

NoiseModel NoiseModel::affine(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("noise.a", "must be positive");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("noise.b", "must be non-negative");
  return NoiseModel(Affine{a, b});
}

void NoiseModel::check_dims(std::size_t m) const {
  if (const auto* f = std::get_if<Fixed>(&model_)) {
    if (f->sigma.size() != 1 && f->sigma.size() != m) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "noise sigma has " + std::to_string(f->sigma.size()) + " entries for a " +
                      std::to_string(m) + "-dimensional design");
    }
  }
}

std::vector<double> NoiseModel::sigma_at(std::span<const double> q) const {
  check_dims(q.size());
  std::vector<double> out(q.size());
  if (const auto* f = std::get_if<Fixed>(&model_)) {
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = f->sigma.size() == 1 ? f->sigma[0] : f->sigma[i];
  } else {
    const auto& a = std::get<Affine>(model_);
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = a.a + a.b * std::abs(q[i]);
  }
  return out;
}

double truncnorm_normalizer_1d(double q, double sigma, Interval range) {
  if (!(range.lo < range.hi)) throw Error(ErrorCode::kInvalidArgument, "range must satisfy lo < hi");
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  const double a = (range.lo - q) / sigma;
  const double b = (range.hi - q) / sigma;
  // Work in whichever tail keeps both terms small.
  if (a > 0.0) return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
  if (b < 0.0) return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
  return 1.0 - 0.5 * std::erfc(b / std::numbers::sqrt2) - 0.5 * std::erfc(-a / std::numbers::sqrt2);
}

}  // namespace cboed
