#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "cboed/core.hpp"
#include "cboed/matrix.hpp"
#include "cboed/parallel.hpp"

namespace cboed {

// Largest data-space dimension the kernel density estimator accepts.
inline constexpr std::size_t kMaxKdeDims = 4;

// Kernels are dropped beyond this many kernel standard deviations; the
// discarded weight per kernel is below exp(-40.5) of its peak.
inline constexpr double kKernelCutoff = 9.0;

double standard_normal_pdf(double z);
double standard_normal_cdf(double z);

struct BandwidthRule {
  enum class Kind { kSilverman, kScott, kFixed };
  Kind kind = Kind::kSilverman;
  std::vector<double> fixed;  // used when kind == kFixed

  static BandwidthRule silverman() { return {}; }
  static BandwidthRule scott() { return {Kind::kScott, {}}; }
  static BandwidthRule fixed_vector(std::vector<double> h) { return {Kind::kFixed, std::move(h)}; }
};

// h_i = sd_i * (4 / ((m + 2) N))^(1 / (m + 4)).
// Throws kDegenerateDimension when a column has zero spread.
std::vector<double> silverman_bandwidth(const Matrix& points);

// h_i = sd_i * N^(-1 / (m + 4)).
std::vector<double> scott_bandwidth(const Matrix& points);

// Product-kernel Gaussian KDE with a diagonal bandwidth.
class GaussianKde {
 public:
  static GaussianKde fit(const Matrix& points, const BandwidthRule& rule);

  std::size_t dims() const { return points_.cols(); }
  std::size_t size() const { return points_.rows(); }
  const Matrix& points() const { return points_; }
  const std::vector<double>& bandwidth() const { return bandwidth_; }

  double eval(std::span<const double> x) const;

  // Evaluates the density at every row of `xs`. One-dimensional estimates use
  // a fast Gauss transform; higher dimensions sum kernels inside the cutoff
  // window directly.
  std::vector<double> eval_many(const Matrix& xs, Parallelism par = {}) const;

  // Number of fits performed in this process.
  static std::uint64_t fit_count();

 private:
  GaussianKde(Matrix points, std::vector<double> bandwidth);

  // Point rows sorted lexicographically, so sums run in an order that does
  // not depend on how the caller ordered the points.
  Matrix points_;
  std::vector<double> bandwidth_;
  double norm_ = 0.0;
};

// Unnormalized Gaussian profile N(q, sigma^2) over a data space. The
// normalization constant over the attainable data range is attached once the
// posterior ratios have been computed.
struct ObservedDensity {
  std::vector<double> center;
  std::vector<double> sigma;
  std::optional<double> norm_constant;

  ObservedDensity(std::vector<double> center, std::vector<double> sigma);

  std::size_t dims() const { return center.size(); }
  double peak() const;
  // Value of the normalized density over the data range; requires
  // norm_constant.
  double normalized(std::span<const double> x) const;
};

double gaussian_profile_eval(const ObservedDensity& obs, std::span<const double> x);

// Measurement standard deviations as a function of the observed center.
class NoiseModel {
 public:
  struct Fixed {
    std::vector<double> sigma;  // one entry per QoI, or a single broadcast value
  };
  struct Affine {
    double a = 0.0;
    double b = 0.0;  // sigma_i = a + b |q_i|
  };

  static NoiseModel fixed(std::vector<double> sigma);
  static NoiseModel affine(double a, double b);

  bool is_fixed() const { return std::holds_alternative<Fixed>(model_); }
  const std::variant<Fixed, Affine>& variant() const { return model_; }

  std::vector<double> sigma_at(std::span<const double> q) const;
  // Throws kDimensionMismatch if a fixed sigma list cannot cover `m` QoI.
  void check_dims(std::size_t m) const;

 private:
  explicit NoiseModel(std::variant<Fixed, Affine> m) : model_(std::move(m)) {}
  std::variant<Fixed, Affine> model_;
};

// Mass of N(q, sigma^2) inside [lo, hi].
double truncnorm_normalizer_1d(double q, double sigma, Interval range);

}  // namespace cboed
