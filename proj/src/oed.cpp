#include "cboed/oed.hpp"

#include <algorithm>
#include <string>

#include "cboed/error.hpp"

namespace cboed {

void DesignSpace::validate() const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].id != i) {
      throw Error(ErrorCode::kInvalidArgument, "design ids must run 0..Z-1 in order");
    }
  }
}

namespace {

EigRow evaluate_row(const SampleSet& samples, const DesignCandidate& design, const NoiseModel& noise,
                    std::size_t m_centers, const EigOptions& options) {
  EigRow row;
  row.id = design.id;
  row.qoi_indices = design.qoi_indices;
  for (const auto& c : design.coords) row.coords.insert(row.coords.end(), c.begin(), c.end());
  row.n_samples = samples.size();
  row.m_centers = m_centers;
  try {
    const EigEstimate est = expected_information_gain(samples, design, noise, m_centers, options);
    row.eig = est.eig;
    row.n_infeasible = est.n_infeasible;
    row.n_normalized = est.n_normalized;
    row.warnings = est.warnings;
  } catch (const Error& e) {
    row.ok = false;
    row.status = to_string(e.code());
    row.message = e.what();
    if (e.code() == ErrorCode::kAllCentersInfeasible) row.n_infeasible = m_centers;
  }
  return row;
}

EigReport rank_candidates(const SampleSet& samples, const std::vector<DesignCandidate>& designs,
                          const NoiseModel& noise, std::size_t m_centers, const EigOptions& options) {
  EigReport report;
  report.rows.resize(designs.size());
  const unsigned threads = options.parallelism.resolved();
  if (designs.size() >= threads) {
    EigOptions inner = options;
    inner.parallelism = Parallelism{1};
    parallel_for(designs.size(), options.parallelism, [&](std::size_t i) {
      report.rows[i] = evaluate_row(samples, designs[i], noise, m_centers, inner);
    });
  } else {
    for (std::size_t i = 0; i < designs.size(); ++i) {
      report.rows[i] = evaluate_row(samples, designs[i], noise, m_centers, options);
    }
  }

  std::vector<std::size_t> order(report.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const EigRow& ra = report.rows[a];
    const EigRow& rb = report.rows[b];
    if (ra.ok != rb.ok) return ra.ok;
    if (ra.ok && ra.eig != rb.eig) return ra.eig > rb.eig;
    return ra.id < rb.id;
  });
  for (std::size_t i : order) report.ranking.push_back(report.rows[i].id);
  if (!report.ranking.empty()) report.chosen = report.ranking[0];
  return report;
}

const EigRow* find_row(const EigReport& report, std::size_t id) {
  for (const auto& r : report.rows) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

}  // namespace

EigReport rank_designs(const SampleSet& samples, const DesignSpace& space, const NoiseModel& noise,
                       std::size_t m_centers, const EigOptions& options) {
  if (space.candidates.empty()) throw Error(ErrorCode::kEmptyDesignSpace, "design space is empty");
  space.validate();
  return rank_candidates(samples, space.candidates, noise, m_centers, options);
}

DesignCandidate exhaustive_oed(const EigReport& report, const DesignSpace& space) {
  if (report.ranking.empty()) throw Error(ErrorCode::kEmptyDesignSpace, "report has no designs");
  const EigRow* best = find_row(report, report.ranking[0]);
  if (!best || !best->ok) throw Error(ErrorCode::kEmptyDesignSpace, "no design was evaluated successfully");
  if (best->id >= space.size()) throw Error(ErrorCode::kIndexOutOfRange, "report does not match the design space");
  return space.candidates[best->id];
}

DesignCandidate combine_designs(const DesignSpace& space, const std::vector<std::size_t>& ids,
                                std::size_t new_id) {
  DesignCandidate out;
  out.id = new_id;
  for (std::size_t id : ids) {
    if (id >= space.size()) throw Error(ErrorCode::kIndexOutOfRange, "candidate id out of range");
    const auto& c = space.candidates[id];
    out.qoi_indices.insert(out.qoi_indices.end(), c.qoi_indices.begin(), c.qoi_indices.end());
    out.coords.insert(out.coords.end(), c.coords.begin(), c.coords.end());
  }
  return out;
}

GreedyResult greedy_oed(const SampleSet& samples, const DesignSpace& space, std::size_t k,
                        const NoiseModel& noise, std::size_t m_centers, const EigOptions& options) {
  if (space.candidates.empty()) throw Error(ErrorCode::kEmptyDesignSpace, "design space is empty");
  space.validate();
  if (k == 0 || k > space.size()) {
    throw Error(ErrorCode::kInvalidArgument, "greedy k must lie in [1, " + std::to_string(space.size()) + "]");
  }
  std::size_t max_dim = 0;
  for (const auto& c : space.candidates) max_dim = std::max(max_dim, c.qoi_indices.size());
  if (k * max_dim > kMaxKdeDims) {
    throw Error(ErrorCode::kDimensionCapExceeded,
                "greedy selection of " + std::to_string(k) + " candidates exceeds the " +
                    std::to_string(kMaxKdeDims) + "-dimensional density cap");
  }

  GreedyResult result;
  std::vector<bool> taken(space.size(), false);
  for (std::size_t t = 0; t < k; ++t) {
    std::vector<DesignCandidate> combined;
    for (const auto& c : space.candidates) {
      if (taken[c.id]) continue;
      std::vector<std::size_t> ids = result.chosen;
      ids.push_back(c.id);
      combined.push_back(combine_designs(space, ids, c.id));
    }
    GreedyStep step;
    step.report = rank_candidates(samples, combined, noise, m_centers, options);
    const EigRow* best = find_row(step.report, step.report.chosen);
    if (!best || !best->ok) {
      throw Error(ErrorCode::kEmptyDesignSpace,
                  "no candidate could be evaluated at greedy step " + std::to_string(t + 1));
    }
    step.chosen = best->id;
    step.eig = best->eig;
    taken[step.chosen] = true;
    result.chosen.push_back(step.chosen);
    result.steps.push_back(std::move(step));
  }
  return result;
}

SubsetResult exhaustive_subsets(const SampleSet& samples, const DesignSpace& space, std::size_t k,
                                const NoiseModel& noise, std::size_t m_centers, const EigOptions& options) {
  if (space.candidates.empty()) throw Error(ErrorCode::kEmptyDesignSpace, "design space is empty");
  space.validate();
  const std::size_t z = space.size();
  if (k == 0 || k > z) throw Error(ErrorCode::kInvalidArgument, "subset size must lie in [1, " + std::to_string(z) + "]");

  // C(z, k) with an early exit once past the limit.
  std::size_t count = 1;
  for (std::size_t i = 0; i < k; ++i) {
    count = count * (z - i) / (i + 1);
    if (count > kMaxSubsetCount) {
      throw Error(ErrorCode::kDimensionCapExceeded,
                  "exhaustive search would evaluate more than " + std::to_string(kMaxSubsetCount) +
                      " subsets; use greedy selection");
    }
  }

  SubsetResult result;
  std::vector<DesignCandidate> designs;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    DesignCandidate d = combine_designs(space, idx, designs.size());
    if (d.qoi_indices.size() > kMaxKdeDims) {
      throw Error(ErrorCode::kDimensionCapExceeded, "combined design exceeds the density dimension cap");
    }
    result.subsets.push_back(idx);
    designs.push_back(std::move(d));
    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == z - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  result.report = rank_candidates(samples, designs, noise, m_centers, options);
  return result;
}

}  // namespace cboed
