#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cboed/core.hpp"
#include "cboed/density.hpp"
#include "cboed/inference.hpp"

namespace cboed {

class LinearModel;

// Monte Carlo form of the information-gain estimator.
//   kPriorMean:    I = (1/N) sum s_i log s_i, an expectation over prior draws.
//   kVolumeScaled: the same sum scaled by the parameter-space volume. Kept
//                  only so tests can compare the two forms.
enum class KlEstimator { kPriorMean, kVolumeScaled };

const char* to_string(KlEstimator form);

struct InformationGain {
  double value = 0.0;  // nats
  std::size_t design_id = 0;
  std::vector<double> center;
  double norm_constant = 0.0;
  bool feasible = true;
};

// I = (1/N) sum_i s_i log s_i with s_i = r_i / C and 0 log 0 = 0.
double kl_from_ratios(const PosteriorRatios& ratios, KlEstimator form = KlEstimator::kPriorMean,
                      double parameter_volume = 1.0);

// KL divergence of posterior from prior by midpoint quadrature over the
// parameter box, using the exact push-forward of an invertible affine map
// (n = m <= 2) and an observed density normalized over the exact data range.
// Throws kUnsupportedModel for anything else.
double kl_quadrature_oracle(const LinearModel& model, const std::vector<double>& center,
                            const std::vector<double>& sigma);

struct EigOptions {
  BandwidthRule bandwidth = BandwidthRule::silverman();
  double floor = kDefaultPushForwardFloor;
  KlEstimator estimator = KlEstimator::kPriorMean;
  Parallelism parallelism{};
};

struct EigEstimate {
  std::size_t design_id = 0;
  double eig = 0.0;
  std::size_t n_samples = 0;
  std::size_t m_centers = 0;
  std::vector<InformationGain> per_center;
  std::size_t n_infeasible = 0;   // centers excluded with C < kInfeasibleThreshold
  std::size_t n_normalized = 0;   // centers with C < kNormalizedFlagThreshold
  std::vector<std::string> warnings;
};

// Expected information gain of one design: the push-forward is fitted once,
// then one observed density is centered at each of the first m_centers
// push-forward samples and the resulting gains are averaged.
EigEstimate expected_information_gain(const SampleSet& samples, const DesignCandidate& design,
                                      const NoiseModel& noise, std::size_t m_centers,
                                      const EigOptions& options = {});

// Variant reusing an already fitted push-forward.
EigEstimate expected_information_gain(const PushForward& pf, const DataSpace& dataspace,
                                      const NoiseModel& noise, std::size_t m_centers,
                                      const EigOptions& options = {}, double parameter_volume = 1.0);

}  // namespace cboed
