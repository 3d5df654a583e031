#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cboed/core.hpp"
#include "cboed/density.hpp"

namespace cboed {

// Push-forward values are floored here before division.
inline constexpr double kDefaultPushForwardFloor = 1e-12;
// Below this normalization constant the observation has no usable overlap
// with the data space.
inline constexpr double kInfeasibleThreshold = 1e-6;
// Below this constant the observed density was renormalized over the data
// space in a way worth reporting.
inline constexpr double kNormalizedFlagThreshold = 0.95;

struct PushForward {
  GaussianKde kde;
  std::size_t design_id = 0;
  double floor = kDefaultPushForwardFloor;
  // KDE evaluated at every cloud point, floored.
  std::vector<double> eval_at_samples;
};

PushForward fit_push_forward(const DataSpace& dataspace, const BandwidthRule& rule,
                             double floor = kDefaultPushForwardFloor, std::size_t design_id = 0,
                             Parallelism par = {});

// r_i = obs(Q(lambda_i)) / push(Q(lambda_i)) with the unnormalized profile,
// and C = mean(r), the mass of the profile over the data space.
struct PosteriorRatios {
  std::vector<double> ratios;
  double norm_constant = 0.0;
  bool normalized_flag = false;  // C < kNormalizedFlagThreshold
};

// Computes the ratios, sets obs.norm_constant, and throws
// kInfeasibleObservation when C < kInfeasibleThreshold.
PosteriorRatios posterior_ratios(const PushForward& pf, ObservedDensity& obs,
                                 const DataSpace& dataspace);

// Same, for an arbitrary observed density already evaluated at the cloud.
PosteriorRatios ratios_from_observed_values(const PushForward& pf,
                                            std::span<const double> obs_values);

// prior(lambda_i) * r_i / C.
double posterior_density(const PosteriorRatios& ratios, const Prior& prior,
                         const SampleSet& samples, std::size_t index);

// Posterior at an arbitrary parameter whose QoI `q` the caller has computed.
// Needs obs.norm_constant.
double posterior_density_at(const PushForward& pf, const ObservedDensity& obs,
                            const Prior& prior, std::span<const double> lambda,
                            std::span<const double> q);

struct PosteriorSamples {
  std::vector<std::size_t> accepted_indices;
  double acceptance_rate = 0.0;
};

// Accepts sample i iff eta_i < r_i / max(r), eta_i drawn from the rejection
// stream at index i.
PosteriorSamples rejection_sample(const PosteriorRatios& ratios, std::uint64_t seed);

inline constexpr std::size_t kMinAcceptedForConsistency = 50;

// L1 distance between a KDE of the accepted samples' QoI and the normalized
// observed density, by midpoint quadrature over the data range (m <= 2).
double consistency_error(const PosteriorSamples& posterior, const SampleSet& samples,
                         const DesignCandidate& design, const ObservedDensity& obs);

}  // namespace cboed
