#include "cboed/gauss_transform.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cboed/density.hpp"
#include "cboed/error.hpp"

namespace cboed {

namespace {

// Targets farther than this many box scales (a = s sqrt 2) from a box
// center are skipped: exp(-6.5^2) < 5e-19, and sources lie within a/4 of
// their center.
constexpr double kReach = 6.5 + 0.25;

}  // namespace

GaussTransform1d::GaussTransform1d(std::span<const double> sources, double scale,
                                   std::vector<std::vector<double>> channels, bool quadratic)
    : n_channels_(channels.size()), quadratic_(quadratic) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument, "Gauss transform scale must be positive");
  }
  if (channels.empty()) throw Error(ErrorCode::kInvalidArgument, "Gauss transform needs a weight channel");
  for (const auto& ch : channels) {
    if (ch.size() != sources.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "weight channel length differs from source count");
    }
  }
  scale_ = scale * std::sqrt(2.0);
  box_width_ = 0.5 * scale_;
  n_moment_channels_ = n_channels_ + (quadratic_ ? 2 : 0);
  if (sources.empty()) return;

  origin_ = *std::min_element(sources.begin(), sources.end());

  // Group sources by box index; std::map keeps boxes ordered.
  std::map<long, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const long k = static_cast<long>(std::floor((sources[i] - origin_) / box_width_));
    members[k].push_back(i);
  }

  boxes_.reserve(members.size());
  moments_.assign(members.size() * n_moment_channels_ * kOrder, 0.0);
  std::vector<double> basis(kOrder);
  for (const auto& [k, idx] : members) {
    const std::size_t b = boxes_.size();
    const double center = origin_ + (static_cast<double>(k) + 0.5) * box_width_;
    boxes_.push_back({k, center});
    for (std::size_t i : idx) {
      const double u = (sources[i] - center) / scale_;
      // basis[p] = exp(-u^2) (2u)^p / p!
      double t = std::exp(-u * u);
      for (std::size_t p = 0; p < kOrder; ++p) {
        basis[p] = t;
        t *= 2.0 * u / static_cast<double>(p + 1);
      }
      for (std::size_t c = 0; c < n_channels_; ++c) {
        const double w = channels[c][i];
        double* m = &moments_[moment_offset(b, c)];
        for (std::size_t p = 0; p < kOrder; ++p) m[p] += w * basis[p];
      }
      if (quadratic_) {
        const double w = channels[0][i];
        double* m1 = &moments_[moment_offset(b, n_channels_)];
        double* m2 = &moments_[moment_offset(b, n_channels_ + 1)];
        for (std::size_t p = 0; p < kOrder; ++p) {
          m1[p] += w * u * basis[p];
          m2[p] += w * u * u * basis[p];
        }
      }
    }
  }
}

void GaussTransform1d::evaluate(double y, std::span<double> sums, double* quad) const {
  std::fill(sums.begin(), sums.end(), 0.0);
  if (quad) *quad = 0.0;
  if (boxes_.empty()) return;

  const long kmin = static_cast<long>(std::floor((y - kReach * scale_ - origin_) / box_width_)) - 1;
  const long kmax = static_cast<long>(std::floor((y + kReach * scale_ - origin_) / box_width_)) + 1;
  auto it = std::lower_bound(boxes_.begin(), boxes_.end(), kmin,
                             [](const Box& box, long k) { return box.index < k; });

  double quad_sum = 0.0;
  for (; it != boxes_.end() && it->index <= kmax; ++it) {
    const std::size_t b = static_cast<std::size_t>(it - boxes_.begin());
    const double v = (y - it->center) / scale_;
    if (std::abs(v) > kReach) continue;
    const double ev = std::exp(-v * v);
    auto horner = [&](std::size_t channel) {
      const double* m = &moments_[moment_offset(b, channel)];
      double acc = m[kOrder - 1];
      for (std::size_t p = kOrder - 1; p-- > 0;) acc = acc * v + m[p];
      return acc;
    };
    double s0 = 0.0;
    for (std::size_t c = 0; c < n_channels_; ++c) {
      const double s = ev * horner(c);
      sums[c] += s;
      if (c == 0) s0 = s;
    }
    if (quadratic_ && quad) {
      // sum w phi (v - u)^2 with u box-local; (y - x)^2 / s^2 = 2 (v - u)^2.
      const double s1 = ev * horner(n_channels_);
      const double s2 = ev * horner(n_channels_ + 1);
      quad_sum += 2.0 * (s2 - 2.0 * v * s1 + v * v * s0);
    }
  }
  if (quad) *quad = quad_sum;
}

}  // namespace cboed
