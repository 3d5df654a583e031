#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cboed/matrix.hpp"
#include "cboed/parallel.hpp"

namespace cboed {

class ForwardModel;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Compact box of admissible parameter values.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  // Throws kInvalidArgument unless every bound is finite with lo < hi.
  explicit ParameterSpace(std::vector<Interval> bounds);

  std::size_t dims() const { return bounds_.size(); }
  const std::vector<Interval>& bounds() const { return bounds_; }
  double volume() const;
  bool contains(std::span<const double> lambda) const;

  friend bool operator==(const ParameterSpace&, const ParameterSpace&) = default;

 private:
  std::vector<Interval> bounds_;
};

// A prior is a density paired with a sampler over the same space.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual const ParameterSpace& space() const = 0;
  virtual double density(std::span<const double> lambda) const = 0;
  // Writes the draw with the given index into `out`; a pure function of
  // (seed, index).
  virtual void draw(std::uint64_t seed, std::size_t index, std::span<double> out) const = 0;
};

class UniformPrior final : public Prior {
 public:
  explicit UniformPrior(ParameterSpace space) : space_(std::move(space)) {}

  const ParameterSpace& space() const override { return space_; }
  double density(std::span<const double> lambda) const override;
  void draw(std::uint64_t seed, std::size_t index, std::span<double> out) const override;

 private:
  ParameterSpace space_;
};

// Prior samples plus the cached evaluation of every candidate QoI. This is
// the one expensive artifact of a study and is shared read-only afterwards.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(ParameterSpace space, Matrix params, std::uint64_t seed,
            std::optional<Matrix> qoi = std::nullopt);

  const ParameterSpace& space() const { return space_; }
  const Matrix& params() const { return params_; }
  bool has_qoi() const { return qoi_.has_value(); }
  // Throws kInvalidArgument when the QoI have not been evaluated yet.
  const Matrix& qoi() const;
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return params_.rows(); }

  // The first n samples; the nested subsets used for convergence studies.
  SampleSet head(std::size_t n) const;

 private:
  ParameterSpace space_;
  Matrix params_;
  std::optional<Matrix> qoi_;
  std::uint64_t seed_ = 0;
};

struct DesignCandidate {
  std::size_t id = 0;
  std::vector<std::size_t> qoi_indices;
  // One coordinate tuple per selected QoI (sensor locations); may be empty.
  std::vector<std::vector<double>> coords;
};

// The sample cloud restricted to one design's QoI columns.
struct DataSpace {
  std::size_t dims = 0;
  Matrix cloud;
  std::vector<Interval> ranges;
};

SampleSet sample_prior(const Prior& prior, std::size_t n_samples, std::uint64_t seed);

double prior_density(const Prior& prior, std::span<const double> lambda);

// Fills the QoI matrix. Rows are independent, so evaluation may run
// row-parallel; the result does not depend on the thread count.
SampleSet evaluate_designs(const ForwardModel& model, const SampleSet& samples,
                           Parallelism par = {});

DataSpace select_design(const SampleSet& samples, const DesignCandidate& design);

// Same as select_design but only checks and slices the given column list.
DataSpace select_columns(const Matrix& qoi, std::span<const std::size_t> columns);

}  // namespace cboed
