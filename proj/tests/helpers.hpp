#pragma once

#include <cmath>
#include <vector>

#include "cboed/core.hpp"
#include "cboed/models.hpp"
#include "cboed/rng.hpp"

namespace testing {

// Q(lambda) = lambda on [0, 1].
inline cboed::LinearModel identity_model() {
  cboed::Matrix w(1, 1, 1.0);
  return cboed::LinearModel(cboed::ParameterSpace({{0.0, 1.0}}), std::move(w), {0.0}, "identity");
}

inline cboed::SampleSet draw(const cboed::ForwardModel& model, std::size_t n, std::uint64_t seed,
                             cboed::Parallelism par = {}) {
  const cboed::UniformPrior prior(model.space());
  return cboed::evaluate_designs(model, cboed::sample_prior(prior, n, seed), par);
}

inline cboed::Matrix column(const std::vector<double>& v) {
  cboed::Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

// Standard normal draws by Box-Muller on the counter stream.
inline std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  const cboed::CounterRng rng(seed, cboed::Stream::kPrior);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = 1.0 - rng.uniform(2 * i);
    const double u2 = rng.uniform(2 * i + 1);
    out[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  return out;
}

}  // namespace testing
