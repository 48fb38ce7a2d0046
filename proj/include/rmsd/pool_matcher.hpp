#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmsd/quality_metrics.hpp"
#include "rmsd/task_model.hpp"

namespace rmsd {

// K parsed teacher responses for one example. Invalid responses stay in the
// pool with quality 0; filtering only changes which responses can be matched.
struct TeacherPool {
  std::string example_id;
  TaskType task = TaskType::kMultipleChoice;
  std::vector<ParsedResponse> responses;
  // Raw quality per response. Absent for open-ended pools.
  std::optional<std::vector<double>> qualities;
  std::optional<double> tau_applied;
  std::vector<std::string> diagnostics;

  std::size_t size() const { return responses.size(); }
  bool scored() const { return qualities.has_value(); }
  // Survives the applied filter (always true when no filter is applied).
  bool kept(std::size_t k) const;
  // q_k if kept, else 0. Requires a scored pool.
  double effective_quality(std::size_t k) const;
  std::vector<double> effective_qualities() const;
};

struct MatchingDistribution {
  std::vector<double> probs;
};

enum class MatchingMode {
  kQualityWeighted,  // p_k proportional to the effective quality
  kUniform,          // p_k uniform over kept responses
};

TeacherPool build_pool(const SupervisionExample& ex, const std::vector<std::string>& raws,
                       const MetricConfig& metrics = {});

// Replaces the pool's qualities with externally supplied scores in [0,1].
// Used to simulate score-based weighting on task families without ground truth.
TeacherPool with_scores(TeacherPool pool, std::vector<double> scores);

// Zeroes the matching weight of responses with q_k < tau. Open-ended pools
// are returned unchanged with a diagnostic.
TeacherPool apply_filter(TeacherPool pool, double tau);

// Throws Error(kDegeneratePool) when a scored pool has no matchable response.
MatchingDistribution matching_distribution(const TeacherPool& pool,
                                           MatchingMode mode = MatchingMode::kQualityWeighted);

// n independent categorical draws with replacement.
std::vector<std::size_t> sample_matches(const MatchingDistribution& dist, std::size_t n,
                                        std::uint64_t seed);

// Highest effective quality, ties to the lowest index; seeded uniform draw
// for unscored pools. Throws Error(kNoValidTarget) if every quality is zero.
std::size_t select_sft_target(const TeacherPool& pool, std::uint64_t seed);

// Fraction of responses with raw quality >= tau.
double retention(const TeacherPool& pool, double tau);

}  // namespace rmsd
