#include "cboed/information.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cboed/error.hpp"
#include "cboed/gauss_transform.hpp"
#include "cboed/models.hpp"

namespace cboed {

const char* to_string(KlEstimator form) {
  switch (form) {
    case KlEstimator::kPriorMean: return "prior_mean";
    case KlEstimator::kVolumeScaled: return "volume_scaled";
  }
  return "unknown";
}

double kl_from_ratios(const PosteriorRatios& ratios, KlEstimator form, double parameter_volume) {
  const std::size_t n = ratios.ratios.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "no ratios to estimate from");
  if (!(ratios.norm_constant >= kInfeasibleThreshold)) {
    throw Error(ErrorCode::kInfeasibleObservation, "normalization constant missing or below threshold");
  }
  double sum = 0.0;
  for (double r : ratios.ratios) {
    const double s = r / ratios.norm_constant;
    if (s > 0.0) sum += s * std::log(s);
  }
  double value = sum / static_cast<double>(n);
  if (form == KlEstimator::kVolumeScaled) value *= parameter_volume;
  return value;
}

double kl_quadrature_oracle(const LinearModel& model, const std::vector<double>& center,
                            const std::vector<double>& sigma) {
  const std::size_t n = model.space().dims();
  const Matrix& w = model.weights();
  if (n > 2 || w.rows() != n) {
    throw Error(ErrorCode::kUnsupportedModel, "quadrature oracle needs a square affine map with n <= 2");
  }
  const ObservedDensity obs(center, sigma);
  if (obs.dims() != n) throw Error(ErrorCode::kDimensionMismatch, "observation dimension differs from the model");

  const auto& box = model.space().bounds();
  const double volume = model.space().volume();
  const double det = n == 1 ? w(0, 0) : w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);
  if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::kUnsupportedModel, "affine map is singular");

  // The exact push-forward is uniform on Q(Lambda) with density
  // 1 / (|det W| vol), so the posterior on Lambda is |det W| obs(Q) / C with C
  // the observed mass over Q(Lambda).
  const std::size_t cells = n == 1 ? 20000 : 1000;
  const double h0 = box[0].width() / static_cast<double>(cells);
  const double h1 = n == 2 ? box[1].width() / static_cast<double>(cells) : 1.0;
  const std::size_t total = n == 1 ? cells : cells * cells;

  std::vector<double> profile(total);
  std::vector<double> lambda(n), q(n);
  for (std::size_t c = 0; c < total; ++c) {
    lambda[0] = box[0].lo + (static_cast<double>(c % cells) + 0.5) * h0;
    if (n == 2) lambda[1] = box[1].lo + (static_cast<double>(c / cells) + 0.5) * h1;
    model.evaluate(lambda, q);
    profile[c] = gaussian_profile_eval(obs, q);
  }

  double mass;
  if (n == 1) {
    const double a = model.offset()[0] + w(0, 0) * box[0].lo;
    const double b = model.offset()[0] + w(0, 0) * box[0].hi;
    mass = truncnorm_normalizer_1d(center[0], sigma[0], {std::min(a, b), std::max(a, b)});
  } else {
    double s = 0.0;
    for (double p : profile) s += p;
    mass = s * h0 * h1 * std::abs(det);
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::kInfeasibleObservation, "observation has no mass on the data range");

  double kl = 0.0;
  for (double p : profile) {
    const double post = std::abs(det) * p / mass;
    if (post > 0.0) kl += post * std::log(post * volume);
  }
  return kl * h0 * h1;
}

namespace {

// Sums over the cloud for one center, with w_i = 1 / push_i and
// phi_i = exp(-|z_i|^2 / 2), z_i = (x_i - q) / sigma:
//   a = sum w phi, b = sum w log(w) phi, quad = sum w phi |z|^2.
struct CenterSums {
  double a = 0.0;
  double b = 0.0;
  double quad = 0.0;
};

// Direct windowed evaluation over the cloud sorted by its first coordinate.
class DirectSums {
 public:
  DirectSums(const Matrix& cloud, const std::vector<double>& w, const std::vector<double>& wlogw)
      : m_(cloud.cols()), order_(cloud.rows()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t x, std::size_t y) { return cloud(x, 0) < cloud(y, 0); });
    points_ = Matrix(order_.size(), m_);
    w_.resize(order_.size());
    wlogw_.resize(order_.size());
    first_.resize(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
      std::copy_n(cloud.row(order_[k]).begin(), m_, points_.row(k).begin());
      w_[k] = w[order_[k]];
      wlogw_[k] = wlogw[order_[k]];
      first_[k] = points_(k, 0);
    }
  }

  CenterSums operator()(std::span<const double> q, const std::vector<double>& sigma) const {
    const double reach = kKernelCutoff * sigma[0];
    const auto lo = std::lower_bound(first_.begin(), first_.end(), q[0] - reach) - first_.begin();
    const auto hi = std::upper_bound(first_.begin(), first_.end(), q[0] + reach) - first_.begin();
    double inv[kMaxKdeDims];
    for (std::size_t d = 0; d < m_; ++d) inv[d] = 1.0 / sigma[d];
    CenterSums s;
    for (auto k = lo; k < hi; ++k) {
      const auto p = points_.row(static_cast<std::size_t>(k));
      double z2 = 0.0;
      for (std::size_t d = 0; d < m_; ++d) {
        const double z = (p[d] - q[d]) * inv[d];
        z2 += z * z;
      }
      const double phi = std::exp(-0.5 * z2);
      s.a += w_[k] * phi;
      s.b += wlogw_[k] * phi;
      s.quad += w_[k] * phi * z2;
    }
    return s;
  }

 private:
  std::size_t m_;
  std::vector<std::size_t> order_;
  Matrix points_;
  std::vector<double> w_, wlogw_, first_;
};

}  // namespace

EigEstimate expected_information_gain(const PushForward& pf, const DataSpace& ds, const NoiseModel& noise,
                                      std::size_t m_centers, const EigOptions& options,
                                      double parameter_volume) {
  const std::size_t n = ds.cloud.rows();
  const std::size_t m = ds.dims;
  if (pf.eval_at_samples.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "push-forward and data space come from different designs");
  }
  if (m_centers == 0 || m_centers > n) {
    throw Error(ErrorCode::kInvalidArgument, "m_centers must lie in [1, " + std::to_string(n) + "]");
  }
  noise.check_dims(m);

  std::vector<double> w(n), wlogw(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 1.0 / pf.eval_at_samples[i];
    wlogw[i] = w[i] * std::log(w[i]);
  }

  std::vector<std::vector<double>> sigmas(m_centers);
  for (std::size_t j = 0; j < m_centers; ++j) sigmas[j] = noise.sigma_at(ds.cloud.row(j));

  std::vector<CenterSums> sums(m_centers);
  if (m == 1 && noise.is_fixed()) {
    const std::vector<double> src = ds.cloud.column(0);
    const GaussTransform1d transform(src, sigmas[0][0], {w, wlogw}, true);
    parallel_for(m_centers, options.parallelism, [&](std::size_t j) {
      double s[2];
      double quad = 0.0;
      transform.evaluate(ds.cloud(j, 0), s, &quad);
      sums[j] = {s[0], s[1], quad};
    });
  } else {
    const DirectSums direct(ds.cloud, w, wlogw);
    parallel_for(m_centers, options.parallelism,
                 [&](std::size_t j) { sums[j] = direct(ds.cloud.row(j), sigmas[j]); });
  }

  EigEstimate est;
  est.design_id = pf.design_id;
  est.n_samples = n;
  est.m_centers = m_centers;
  est.per_center.resize(m_centers);
  const double nd = static_cast<double>(n);
  double total = 0.0;
  std::size_t included = 0;
  std::vector<double> mean_sigma(m, 0.0);
  for (std::size_t j = 0; j < m_centers; ++j) {
    InformationGain& g = est.per_center[j];
    g.design_id = pf.design_id;
    const auto row = ds.cloud.row(j);
    g.center.assign(row.begin(), row.end());
    for (std::size_t d = 0; d < m; ++d) mean_sigma[d] += sigmas[j][d];

    double peak = 1.0;
    for (double s : sigmas[j]) peak /= s * std::sqrt(2.0 * std::numbers::pi);
    const CenterSums& s = sums[j];
    g.norm_constant = peak * s.a / nd;
    if (!(g.norm_constant >= kInfeasibleThreshold) || !(s.a > 0.0)) {
      g.feasible = false;
      ++est.n_infeasible;
      continue;
    }
    // (1/N) sum s_i log s_i with s_i = N w_i phi_i / a.
    g.value = (s.b - 0.5 * s.quad) / s.a - std::log(s.a / nd);
    if (options.estimator == KlEstimator::kVolumeScaled) g.value *= parameter_volume;
    if (g.norm_constant < kNormalizedFlagThreshold) ++est.n_normalized;
    total += g.value;
    ++included;
  }
  if (included == 0) {
    throw Error(ErrorCode::kAllCentersInfeasible,
                "every observed-density center was infeasible for design " + std::to_string(pf.design_id));
  }
  est.eig = total / static_cast<double>(included);

  for (std::size_t d = 0; d < m; ++d) {
    mean_sigma[d] /= static_cast<double>(m_centers);
    if (mean_sigma[d] > 0.5 * ds.ranges[d].width()) {
      est.warnings.push_back("mean noise sigma in data dimension " + std::to_string(d) +
                             " exceeds half the data range; information gains may be unreliable");
    }
  }
  return est;
}

EigEstimate expected_information_gain(const SampleSet& samples, const DesignCandidate& design,
                                      const NoiseModel& noise, std::size_t m_centers,
                                      const EigOptions& options) {
  const DataSpace ds = select_design(samples, design);
  noise.check_dims(ds.dims);
  const PushForward pf = fit_push_forward(ds, options.bandwidth, options.floor, design.id, options.parallelism);
  return expected_information_gain(pf, ds, noise, m_centers, options, samples.space().volume());
}

}  // namespace cboed
