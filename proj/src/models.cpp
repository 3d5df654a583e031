#include "cboed/models.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <atomic>
#include <cmath>
#include <string>

#include "cboed/error.hpp"
#include "cboed/rng.hpp"

namespace cboed {

namespace {

std::atomic<std::uint64_t> g_solve_count{0};

void require_in_domain(const ParameterSpace& space, std::span<const double> lambda) {
  if (lambda.size() != space.dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector has the wrong dimension");
  }
  if (!space.contains(lambda)) throw Error(ErrorCode::kOutOfDomain, "parameter outside the model domain");
}

}  // namespace

Nonlinear2x2::Nonlinear2x2()
    : space_({{0.79, 0.99}, {1.0 - 4.5 * std::sqrt(0.1), 1.0 + 4.5 * std::sqrt(0.1)}}) {}

void Nonlinear2x2::evaluate(std::span<const double> lambda, std::span<double> out) const {
  require_in_domain(space_, lambda);
  const double l1 = lambda[0];
  const double l2 = lambda[1];
  // Eliminating x1^2 from the two equations.
  const double denom = 1.0 + l1 * l2;
  const double x2_sq = (1.0 - l1) / denom;
  const double x1_sq = (1.0 + l2) / denom;
  out[0] = std::sqrt(x2_sq);
  out[1] = std::sqrt(x1_sq);
}

double ConvDiffField::interpolate(double x, double y) const {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw Error(ErrorCode::kOutOfDomain, "sensor outside the unit square");
  }
  const double fx = x * static_cast<double>(nx);
  const double fy = y * static_cast<double>(ny);
  const std::size_t i0 = std::min(static_cast<std::size_t>(fx), nx - 1);
  const std::size_t j0 = std::min(static_cast<std::size_t>(fy), ny - 1);
  const double tx = fx - static_cast<double>(i0);
  const double ty = fy - static_cast<double>(j0);
  return (1 - tx) * (1 - ty) * at(i0, j0) + tx * (1 - ty) * at(i0 + 1, j0) +
         (1 - tx) * ty * at(i0, j0 + 1) + tx * ty * at(i0 + 1, j0 + 1);
}

ConvDiffField convdiff_unit_solve(const ConvDiffParams& p) {
  if (p.nx < 8 || p.ny < 8) throw Error(ErrorCode::kInvalidArgument, "convection-diffusion grid needs at least 8 cells per side");
  if (!(p.diffusion > 0.0)) throw Error(ErrorCode::kInvalidArgument, "diffusion coefficient must be positive");
  if (!(p.source_width > 0.0)) throw Error(ErrorCode::kInvalidArgument, "source width must be positive");

  const std::size_t cx = p.nx + 1;
  const std::size_t cy = p.ny + 1;
  const std::size_t n = cx * cy;
  const double dx = 1.0 / static_cast<double>(p.nx);
  const double dy = 1.0 / static_cast<double>(p.ny);
  const double vx = p.velocity[0];
  const double vy = p.velocity[1];
  const double two_h2 = 2.0 * p.source_width * p.source_width;
  auto node = [cx](std::size_t i, std::size_t j) { return static_cast<int>(j * cx + i); };

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  for (std::size_t j = 0; j < cy; ++j) {
    for (std::size_t i = 0; i < cx; ++i) {
      const int k = node(i, j);
      if (i == 0 || j == 0) {  // Dirichlet edges
        entries.emplace_back(k, k, 1.0);
        continue;
      }
      const bool right = (i == p.nx);
      const bool top = (j == p.ny);
      if (right && top) {
        entries.emplace_back(k, k, 2.0);
        entries.emplace_back(k, node(i - 1, j), -1.0);
        entries.emplace_back(k, node(i, j - 1), -1.0);
        continue;
      }
      if (right) {  // zero gradient in x
        entries.emplace_back(k, k, 1.0);
        entries.emplace_back(k, node(i - 1, j), -1.0);
        continue;
      }
      if (top) {  // zero gradient in y
        entries.emplace_back(k, k, 1.0);
        entries.emplace_back(k, node(i, j - 1), -1.0);
        continue;
      }

      const double ax = p.diffusion / (dx * dx);
      const double ay = p.diffusion / (dy * dy);
      double diag = 2.0 * ax + 2.0 * ay;
      double west = -ax, east = -ax, south = -ay, north = -ay;
      // Upwind differences for v . grad(u) (v is constant, so div(v u) = v . grad(u)).
      if (vx >= 0.0) { diag += vx / dx; west -= vx / dx; }
      else { diag -= vx / dx; east += vx / dx; }
      if (vy >= 0.0) { diag += vy / dy; south -= vy / dy; }
      else { diag -= vy / dy; north += vy / dy; }

      entries.emplace_back(k, k, diag);
      entries.emplace_back(k, node(i - 1, j), west);
      entries.emplace_back(k, node(i + 1, j), east);
      entries.emplace_back(k, node(i, j - 1), south);
      entries.emplace_back(k, node(i, j + 1), north);

      const double x = static_cast<double>(i) * dx - p.source_center[0];
      const double y = static_cast<double>(j) * dy - p.source_center[1];
      rhs[k] = std::exp(-(x * x + y * y) / two_h2);
    }
  }

  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  g_solve_count.fetch_add(1, std::memory_order_relaxed);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::kSolverDidNotConverge, "sparse LU factorization failed");
  }
  const Eigen::VectorXd u = lu.solve(rhs);
  const double residual = (a * u - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (!(residual <= 1e-10)) {
    throw Error(ErrorCode::kSolverDidNotConverge,
                "linear solve residual " + std::to_string(residual) + " above 1e-10");
  }

  ConvDiffField field;
  field.nx = p.nx;
  field.ny = p.ny;
  field.values.assign(u.data(), u.data() + u.size());
  // The inflow edges are exact; drop LU round-off there.
  for (std::size_t k = 0; k <= p.nx; ++k) field.values[k] = 0.0;
  for (std::size_t k = 0; k <= p.ny; ++k) field.values[k * (p.nx + 1)] = 0.0;
  return field;
}

ConvDiffAmplitude::ConvDiffAmplitude(ConvDiffParams params, std::vector<std::array<double, 2>> sensors)
    : params_(params),
      space_({params.amplitude}),
      sensors_(std::move(sensors)),
      field_(convdiff_unit_solve(params)) {
  unit_values_.reserve(sensors_.size());
  for (const auto& s : sensors_) unit_values_.push_back(field_.interpolate(s[0], s[1]));
}

std::uint64_t ConvDiffAmplitude::solve_count() { return g_solve_count.load(std::memory_order_relaxed); }

std::vector<double> ConvDiffAmplitude::qoi_coords(std::size_t k) const {
  return {sensors_.at(k)[0], sensors_.at(k)[1]};
}

void ConvDiffAmplitude::evaluate(std::span<const double> lambda, std::span<double> out) const {
  require_in_domain(space_, lambda);
  for (std::size_t k = 0; k < unit_values_.size(); ++k) out[k] = lambda[0] * unit_values_[k];
}

double ConvDiffAmplitude::measure(double amplitude, std::array<double, 2> sensor) const {
  const double a[1] = {amplitude};
  require_in_domain(space_, a);
  return amplitude * field_.interpolate(sensor[0], sensor[1]);
}

LinearModel::LinearModel(ParameterSpace space, Matrix weights, std::vector<double> offset, std::string name)
    : space_(std::move(space)), weights_(std::move(weights)), offset_(std::move(offset)), name_(std::move(name)) {
  if (weights_.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "linear model needs at least one QoI");
  if (weights_.cols() != space_.dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "weight matrix width must equal the parameter dimension");
  }
  if (offset_.empty()) offset_.assign(weights_.rows(), 0.0);
  if (offset_.size() != weights_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "offset needs one entry per QoI");
  }
}

void LinearModel::evaluate(std::span<const double> lambda, std::span<double> out) const {
  if (lambda.size() != space_.dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector has the wrong dimension");
  }
  for (std::size_t k = 0; k < weights_.rows(); ++k) {
    double s = offset_[k];
    const auto w = weights_.row(k);
    for (std::size_t j = 0; j < lambda.size(); ++j) s += w[j] * lambda[j];
    out[k] = s;
  }
}

LinearModel linear_highdim(std::size_t n, std::size_t k, std::uint64_t weight_seed, std::vector<double> offset) {
  if (n == 0 || k == 0) throw Error(ErrorCode::kInvalidArgument, "linear_highdim needs n >= 1 and k >= 1");
  const CounterRng rng(weight_seed, Stream::kWeights);
  Matrix w(k, n);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < n; ++c) w(r, c) = rng.uniform(r * n + c, -1.0, 1.0);
  }
  return LinearModel(ParameterSpace(std::vector<Interval>(n, Interval{-1.0, 1.0})), std::move(w),
                     std::move(offset), "linear_highdim");
}

}  // namespace cboed
