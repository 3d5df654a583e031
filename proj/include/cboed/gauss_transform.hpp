#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cboed {

// One-dimensional fast Gauss transform.
//
// Computes G_c(y) = sum_i w_c[i] exp(-(y - x_i)^2 / (2 s^2)) for several
// weight channels c at once. Sources are binned into boxes of width s/sqrt(2);
// each box keeps a truncated Taylor expansion of the kernel about its center,
// and a target only visits boxes within the kernel cutoff. Relative to the sum
// of |w| the truncation error is below 1e-15.
//
// With `quadratic` set, evaluate() also returns
// sum_i w_0[i] exp(-(y - x_i)^2 / (2 s^2)) * (y - x_i)^2 / s^2, computed from
// box-local moments to avoid cancellation.
class GaussTransform1d {
 public:
  GaussTransform1d(std::span<const double> sources, double scale,
                   std::vector<std::vector<double>> channels, bool quadratic = false);

  std::size_t channels() const { return n_channels_; }

  // `sums` must hold channels() values.
  void evaluate(double y, std::span<double> sums, double* quad = nullptr) const;

 private:
  static constexpr std::size_t kOrder = 24;

  struct Box {
    long index;
    double center;
  };

  std::size_t moment_offset(std::size_t box, std::size_t channel) const {
    return (box * n_moment_channels_ + channel) * kOrder;
  }

  double scale_ = 1.0;  // a = s * sqrt(2)
  double origin_ = 0.0;
  double box_width_ = 1.0;
  std::size_t n_channels_ = 0;
  std::size_t n_moment_channels_ = 0;
  bool quadratic_ = false;
  std::vector<Box> boxes_;
  std::vector<double> moments_;
};

}  // namespace cboed
