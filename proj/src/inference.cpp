#include "cboed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cboed/error.hpp"
#include "cboed/rng.hpp"

namespace cboed {

PushForward fit_push_forward(const DataSpace& dataspace, const BandwidthRule& rule, double floor,
                             std::size_t design_id, Parallelism par) {
  if (!(floor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "push-forward floor must be positive");
  GaussianKde kde = GaussianKde::fit(dataspace.cloud, rule);
  std::vector<double> at = kde.eval_many(dataspace.cloud, par);
  for (double& v : at) v = std::max(v, floor);
  return PushForward{std::move(kde), design_id, floor, std::move(at)};
}

PosteriorRatios ratios_from_observed_values(const PushForward& pf, std::span<const double> obs_values) {
  const std::size_t n = pf.eval_at_samples.size();
  if (obs_values.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "observed values must match the sample count");
  }
  PosteriorRatios out;
  out.ratios.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.ratios[i] = obs_values[i] / pf.eval_at_samples[i];
    sum += out.ratios[i];
  }
  out.norm_constant = n > 0 ? sum / static_cast<double>(n) : 0.0;
  if (!(out.norm_constant >= kInfeasibleThreshold)) {
    throw Error(ErrorCode::kInfeasibleObservation,
                "observed density has no overlap with the data space (C = " +
                    std::to_string(out.norm_constant) + ")");
  }
  out.normalized_flag = out.norm_constant < kNormalizedFlagThreshold;
  return out;
}

PosteriorRatios posterior_ratios(const PushForward& pf, ObservedDensity& obs, const DataSpace& dataspace) {
  if (dataspace.cloud.rows() != pf.eval_at_samples.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "push-forward and data space come from different designs");
  }
  if (obs.dims() != dataspace.dims) {
    throw Error(ErrorCode::kDimensionMismatch, "observed density dimension differs from the design");
  }
  std::vector<double> values(dataspace.cloud.rows());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = gaussian_profile_eval(obs, dataspace.cloud.row(i));
  }
  PosteriorRatios out = ratios_from_observed_values(pf, values);
  obs.norm_constant = out.norm_constant;
  return out;
}

double posterior_density(const PosteriorRatios& ratios, const Prior& prior, const SampleSet& samples,
                         std::size_t index) {
  if (index >= ratios.ratios.size() || index >= samples.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "sample index out of range");
  }
  return prior.density(samples.params().row(index)) * ratios.ratios[index] / ratios.norm_constant;
}

double posterior_density_at(const PushForward& pf, const ObservedDensity& obs, const Prior& prior,
                            std::span<const double> lambda, std::span<const double> q) {
  const double p = prior.density(lambda);
  if (p == 0.0) return 0.0;
  const double push = std::max(pf.kde.eval(q), pf.floor);
  return p * obs.normalized(q) / push;
}

PosteriorSamples rejection_sample(const PosteriorRatios& ratios, std::uint64_t seed) {
  PosteriorSamples out;
  const std::size_t n = ratios.ratios.size();
  if (n == 0) return out;
  const double max_ratio = *std::max_element(ratios.ratios.begin(), ratios.ratios.end());
  if (max_ratio > 0.0) {
    const CounterRng rng(seed, Stream::kRejection);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform(i) < ratios.ratios[i] / max_ratio) out.accepted_indices.push_back(i);
    }
  }
  out.acceptance_rate = static_cast<double>(out.accepted_indices.size()) / static_cast<double>(n);
  return out;
}

double consistency_error(const PosteriorSamples& posterior, const SampleSet& samples,
                         const DesignCandidate& design, const ObservedDensity& obs) {
  const std::size_t k = posterior.accepted_indices.size();
  if (k < kMinAcceptedForConsistency) {
    throw Error(ErrorCode::kTooFewAccepted,
                "consistency check needs at least " + std::to_string(kMinAcceptedForConsistency) +
                    " accepted samples, got " + std::to_string(k));
  }
  const DataSpace ds = select_design(samples, design);
  if (ds.dims > 2) {
    throw Error(ErrorCode::kDimensionCapExceeded, "consistency check supports at most two data dimensions");
  }
  if (obs.dims() != ds.dims) throw Error(ErrorCode::kDimensionMismatch, "observed density dimension differs from the design");

  Matrix accepted(k, ds.dims);
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t i = posterior.accepted_indices[a];
    if (i >= ds.cloud.rows()) throw Error(ErrorCode::kIndexOutOfRange, "accepted index out of range");
    std::copy_n(ds.cloud.row(i).begin(), ds.dims, accepted.row(a).begin());
  }
  const GaussianKde kde = GaussianKde::fit(accepted, BandwidthRule::silverman());

  const std::size_t cells = ds.dims == 1 ? 2000 : 200;
  std::vector<double> step(ds.dims);
  double cell_volume = 1.0;
  for (std::size_t d = 0; d < ds.dims; ++d) {
    step[d] = ds.ranges[d].width() / static_cast<double>(cells);
    cell_volume *= step[d];
  }
  if (!(cell_volume > 0.0)) throw Error(ErrorCode::kDegenerateDimension, "data range has zero width");

  const std::size_t total = ds.dims == 1 ? cells : cells * cells;
  Matrix grid(total, ds.dims);
  for (std::size_t c = 0; c < total; ++c) {
    grid(c, 0) = ds.ranges[0].lo + (static_cast<double>(c % cells) + 0.5) * step[0];
    if (ds.dims == 2) grid(c, 1) = ds.ranges[1].lo + (static_cast<double>(c / cells) + 0.5) * step[1];
  }
  const std::vector<double> fitted = kde.eval_many(grid);
  double l1 = 0.0;
  for (std::size_t c = 0; c < total; ++c) l1 += std::abs(fitted[c] - obs.normalized(grid.row(c)));
  return l1 * cell_volume;
}

}  // namespace cboed
