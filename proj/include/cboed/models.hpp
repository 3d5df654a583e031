#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cboed/matrix.hpp"
#include "cboed/model.hpp"

namespace cboed {

// lambda1 x1^2 + x2^2 = 1, x1^2 - lambda2 x2^2 = 1 on the positive branch,
// with QoI (x2, x1).
class Nonlinear2x2 final : public ForwardModel {
 public:
  Nonlinear2x2();

  std::string name() const override { return "nonlinear2x2"; }
  const ParameterSpace& space() const override { return space_; }
  std::size_t qoi_count() const override { return 2; }
  void evaluate(std::span<const double> lambda, std::span<double> out) const override;
  using ForwardModel::evaluate;

 private:
  ParameterSpace space_;
};

struct ConvDiffParams {
  std::size_t nx = 25;
  std::size_t ny = 25;
  double diffusion = 0.01;
  std::array<double, 2> velocity{1.0, 1.0};
  std::array<double, 2> source_center{0.5, 0.5};
  double source_width = 0.05;
  Interval amplitude{50.0, 150.0};
};

// Nodal field on an (nx + 1) x (ny + 1) grid over the unit square, stored
// row by row in y.
struct ConvDiffField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[j * (nx + 1) + i]; }
  // Bilinear interpolation; throws kOutOfDomain outside [0, 1]^2.
  double interpolate(double x, double y) const;
};

// Steady -D lap(u) + div(v u) = S with S = exp(-|x - x_src|^2 / (2 h^2)),
// i.e. unit amplitude. Finite differences: central diffusion, first-order
// upwind convection, u = 0 on x = 0 and y = 0, one-sided zero gradient on
// x = 1 and y = 1. Throws kSolverDidNotConverge if the relative residual
// exceeds 1e-10.
ConvDiffField convdiff_unit_solve(const ConvDiffParams& params);

// Single uncertain source amplitude A; QoI k is the concentration at sensor
// k. The model is linear in A, so one solve at A = 1 serves every sample.
class ConvDiffAmplitude final : public ForwardModel {
 public:
  ConvDiffAmplitude(ConvDiffParams params, std::vector<std::array<double, 2>> sensors);

  std::string name() const override { return "convdiff_amplitude"; }
  const ParameterSpace& space() const override { return space_; }
  std::size_t qoi_count() const override { return sensors_.size(); }
  std::vector<double> qoi_coords(std::size_t k) const override;
  void evaluate(std::span<const double> lambda, std::span<double> out) const override;
  using ForwardModel::evaluate;

  const ConvDiffField& unit_field() const { return field_; }
  const std::vector<std::array<double, 2>>& sensors() const { return sensors_; }

  // amplitude * u_1(sensor); throws kOutOfDomain.
  double measure(double amplitude, std::array<double, 2> sensor) const;

  // Linear solves performed in this process.
  static std::uint64_t solve_count();

 private:
  ConvDiffParams params_;
  ParameterSpace space_;
  std::vector<std::array<double, 2>> sensors_;
  ConvDiffField field_;
  std::vector<double> unit_values_;  // u_1 at each sensor
};

// Q(lambda) = W lambda + c on a parameter box.
class LinearModel final : public ForwardModel {
 public:
  LinearModel(ParameterSpace space, Matrix weights, std::vector<double> offset,
              std::string name = "linear");

  std::string name() const override { return name_; }
  const ParameterSpace& space() const override { return space_; }
  std::size_t qoi_count() const override { return weights_.rows(); }
  void evaluate(std::span<const double> lambda, std::span<double> out) const override;
  using ForwardModel::evaluate;

  const Matrix& weights() const { return weights_; }
  const std::vector<double>& offset() const { return offset_; }

 private:
  ParameterSpace space_;
  Matrix weights_;
  std::vector<double> offset_;
  std::string name_;
};

// Lambda = [-1, 1]^n, W with entries uniform on [-1, 1] drawn from the
// weight stream of `weight_seed`, offset c.
LinearModel linear_highdim(std::size_t n = 100, std::size_t k = 1, std::uint64_t weight_seed = 0,
                           std::vector<double> offset = {});

}  // namespace cboed
