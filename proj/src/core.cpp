#include "cboed/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cboed/error.hpp"
#include "cboed/model.hpp"
#include "cboed/rng.hpp"

namespace cboed {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDuplicateIndex: return "DuplicateIndex";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateDimension: return "DegenerateDimension";
    case ErrorCode::kDimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorCode::kInfeasibleObservation: return "InfeasibleObservation";
    case ErrorCode::kAllCentersInfeasible: return "AllCentersInfeasible";
    case ErrorCode::kTooFewAccepted: return "TooFewAccepted";
    case ErrorCode::kEmptyDesignSpace: return "EmptyDesignSpace";
    case ErrorCode::kUnsupportedModel: return "UnsupportedModel";
    case ErrorCode::kModelEvaluationFailed: return "ModelEvaluationFailed";
    case ErrorCode::kSolverDidNotConverge: return "SolverDidNotConverge";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

ParameterSpace::ParameterSpace(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw Error(ErrorCode::kInvalidArgument, "parameter space needs at least one dimension");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto& b = bounds_[i];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "parameter bound " + std::to_string(i) + " must be finite with lo < hi");
    }
  }
}

double ParameterSpace::volume() const {
  double v = 1.0;
  for (const auto& b : bounds_) v *= b.width();
  return v;
}

bool ParameterSpace::contains(std::span<const double> lambda) const {
  if (lambda.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] >= bounds_[i].lo && lambda[i] <= bounds_[i].hi)) return false;
  }
  return true;
}

double UniformPrior::density(std::span<const double> lambda) const {
  return space_.contains(lambda) ? 1.0 / space_.volume() : 0.0;
}

void UniformPrior::draw(std::uint64_t seed, std::size_t index, std::span<double> out) const {
  const CounterRng rng(seed, Stream::kPrior);
  const std::size_t n = space_.dims();
  for (std::size_t d = 0; d < n; ++d) {
    const auto& b = space_.bounds()[d];
    out[d] = rng.uniform(index * n + d, b.lo, b.hi);
  }
}

SampleSet::SampleSet(ParameterSpace space, Matrix params, std::uint64_t seed,
                     std::optional<Matrix> qoi)
    : space_(std::move(space)), params_(std::move(params)), qoi_(std::move(qoi)), seed_(seed) {
  if (params_.rows() > 0 && params_.cols() != space_.dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter matrix width does not match the space");
  }
  if (qoi_ && qoi_->rows() != params_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "QoI matrix must have one row per sample");
  }
}

const Matrix& SampleSet::qoi() const {
  if (!qoi_) throw Error(ErrorCode::kInvalidArgument, "sample set has no QoI evaluations");
  return *qoi_;
}

SampleSet SampleSet::head(std::size_t n) const {
  if (n > size()) throw Error(ErrorCode::kInvalidArgument, "subset larger than the sample set");
  std::optional<Matrix> q;
  if (qoi_) q = qoi_->head(n);
  return SampleSet(space_, params_.head(n), seed_, std::move(q));
}

SampleSet sample_prior(const Prior& prior, std::size_t n_samples, std::uint64_t seed) {
  const std::size_t n = prior.space().dims();
  Matrix params(n_samples, n);
  for (std::size_t i = 0; i < n_samples; ++i) prior.draw(seed, i, params.row(i));
  return SampleSet(prior.space(), std::move(params), seed);
}

double prior_density(const Prior& prior, std::span<const double> lambda) {
  return prior.density(lambda);
}

SampleSet evaluate_designs(const ForwardModel& model, const SampleSet& samples, Parallelism par) {
  if (model.param_dims() != samples.space().dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "model and samples have different parameter dimensions");
  }
  const std::size_t rows = samples.size();
  Matrix qoi(rows, model.qoi_count());
  parallel_for(rows, par, [&](std::size_t i) {
    try {
      model.evaluate(samples.params().row(i), qoi.row(i));
    } catch (const Error& e) {
      throw Error(ErrorCode::kModelEvaluationFailed,
                  "model evaluation failed at row " + std::to_string(i) + ": " + e.what());
    }
    for (double v : qoi.row(i)) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kModelEvaluationFailed,
                    "non-finite model output at row " + std::to_string(i));
      }
    }
  });
  return SampleSet(samples.space(), samples.params(), samples.seed(), std::move(qoi));
}

DataSpace select_columns(const Matrix& qoi, std::span<const std::size_t> columns) {
  if (columns.empty()) throw Error(ErrorCode::kInvalidArgument, "design selects no QoI");
  for (std::size_t a = 0; a < columns.size(); ++a) {
    if (columns[a] >= qoi.cols()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "QoI index " + std::to_string(columns[a]) + " out of range");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (columns[a] == columns[b]) {
        throw Error(ErrorCode::kDuplicateIndex,
                    "QoI index " + std::to_string(columns[a]) + " selected twice");
      }
    }
  }
  DataSpace ds;
  ds.dims = columns.size();
  ds.cloud = Matrix(qoi.rows(), ds.dims);
  ds.ranges.assign(ds.dims, Interval{0.0, 0.0});
  for (std::size_t i = 0; i < qoi.rows(); ++i) {
    for (std::size_t d = 0; d < ds.dims; ++d) ds.cloud(i, d) = qoi(i, columns[d]);
  }
  for (std::size_t d = 0; d < ds.dims; ++d) {
    if (qoi.rows() == 0) continue;
    double lo = ds.cloud(0, d), hi = lo;
    for (std::size_t i = 1; i < qoi.rows(); ++i) {
      lo = std::min(lo, ds.cloud(i, d));
      hi = std::max(hi, ds.cloud(i, d));
    }
    ds.ranges[d] = {lo, hi};
  }
  return ds;
}

DataSpace select_design(const SampleSet& samples, const DesignCandidate& design) {
  return select_columns(samples.qoi(), design.qoi_indices);
}

}  // namespace cboed
