#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cboed/core.hpp"
#include "cboed/density.hpp"
#include "cboed/information.hpp"

namespace cboed {

// Candidate designs with ids 0..Z-1 in order.
struct DesignSpace {
  std::vector<DesignCandidate> candidates;
  std::string description;

  std::size_t size() const { return candidates.size(); }
  // Throws kInvalidArgument unless ids are dense and in order.
  void validate() const;
};

struct EigRow {
  std::size_t id = 0;
  std::vector<std::size_t> qoi_indices;
  std::vector<double> coords;  // flattened sensor coordinates
  double eig = 0.0;
  std::size_t n_infeasible = 0;
  std::size_t n_normalized = 0;
  std::size_t n_samples = 0;
  std::size_t m_centers = 0;
  bool ok = true;
  std::string status = "ok";   // error name when the design failed
  std::string message;
  std::vector<std::string> warnings;
};

struct EigReport {
  std::vector<EigRow> rows;          // ascending id
  std::vector<std::size_t> ranking;  // eig descending, ties by id; failures last
  std::size_t chosen = 0;            // ranking[0]
};

// Evaluates every candidate. A design that fails keeps its row with the
// error recorded and is ranked after all successful ones.
EigReport rank_designs(const SampleSet& samples, const DesignSpace& space, const NoiseModel& noise,
                       std::size_t m_centers, const EigOptions& options = {});

// The candidate with the highest EIG. Throws kEmptyDesignSpace when no
// design was evaluated successfully.
DesignCandidate exhaustive_oed(const EigReport& report, const DesignSpace& space);

struct GreedyStep {
  std::size_t chosen = 0;     // candidate id appended at this step
  double eig = 0.0;           // EIG of the combined design after the step
  EigReport report;           // row id = candidate id, eig of chosen + candidate
};

struct GreedyResult {
  std::vector<std::size_t> chosen;
  std::vector<GreedyStep> steps;
};

// Builds k sensors one at a time; every step evaluates each unchosen
// candidate joined with the ones already chosen as a single design.
GreedyResult greedy_oed(const SampleSet& samples, const DesignSpace& space, std::size_t k,
                        const NoiseModel& noise, std::size_t m_centers, const EigOptions& options = {});

inline constexpr std::size_t kMaxSubsetCount = 20000;

struct SubsetResult {
  std::vector<std::vector<std::size_t>> subsets;  // candidate ids, row i of the report
  EigReport report;
};

// Enumerates every k-subset of the candidates in lexicographic order and
// ranks the combined designs. Limited to kMaxSubsetCount subsets and a
// combined dimension of kMaxKdeDims.
SubsetResult exhaustive_subsets(const SampleSet& samples, const DesignSpace& space, std::size_t k,
                                const NoiseModel& noise, std::size_t m_centers,
                                const EigOptions& options = {});

// Joins candidates into one design with the given id.
DesignCandidate combine_designs(const DesignSpace& space, const std::vector<std::size_t>& ids,
                                std::size_t new_id);

}  // namespace cboed
