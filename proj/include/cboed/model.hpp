#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cboed/core.hpp"

namespace cboed {

// A deterministic map from parameters to a fixed list of candidate QoI.
// Implementations are immutable after construction and evaluate() must be
// safe to call concurrently.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual std::string name() const = 0;
  virtual const ParameterSpace& space() const = 0;
  virtual std::size_t qoi_count() const = 0;
  // Sensor coordinates of QoI k, or empty when the QoI has no location.
  virtual std::vector<double> qoi_coords(std::size_t k) const { (void)k; return {}; }
  virtual void evaluate(std::span<const double> lambda, std::span<double> out) const = 0;

  std::size_t param_dims() const { return space().dims(); }

  std::vector<double> evaluate(std::span<const double> lambda) const {
    std::vector<double> out(qoi_count());
    evaluate(lambda, out);
    return out;
  }
};

}  // namespace cboed
