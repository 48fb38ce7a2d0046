#include "rmsd/pool_matcher.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "rmsd/error.hpp"
#include "rmsd/random.hpp"

namespace rmsd {

bool TeacherPool::kept(std::size_t k) const {
  if (!tau_applied || !qualities) return true;
  return (*qualities)[k] >= *tau_applied;
}

double TeacherPool::effective_quality(std::size_t k) const {
  require(qualities.has_value(), "effective_quality: pool '" + example_id + "' is unscored");
  return kept(k) ? (*qualities)[k] : 0.0;
}

std::vector<double> TeacherPool::effective_qualities() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = effective_quality(k);
  return out;
}

TeacherPool build_pool(const SupervisionExample& ex, const std::vector<std::string>& raws,
                       const MetricConfig& metrics) {
  if (raws.empty()) fail(ErrorCode::kInvalidPool, "build_pool: no responses for '" + ex.id + "'");
  TeacherPool pool;
  pool.example_id = ex.id;
  pool.task = ex.task;
  pool.responses.reserve(raws.size());
  for (const auto& raw : raws) pool.responses.push_back(parse_response(raw, ex));
  if (is_closed_ended(ex.task)) {
    std::vector<double> q;
    q.reserve(raws.size());
    for (const auto& r : pool.responses) q.push_back(quality_score(r, ex, metrics));
    pool.qualities = std::move(q);
  }
  return pool;
}

TeacherPool with_scores(TeacherPool pool, std::vector<double> scores) {
  require(scores.size() == pool.size(), "with_scores: one score per response required");
  for (double s : scores) require(s >= 0.0 && s <= 1.0, "with_scores: scores must lie in [0,1]");
  pool.qualities = std::move(scores);
  return pool;
}

TeacherPool apply_filter(TeacherPool pool, double tau) {
  require(tau >= 0.0 && tau <= 1.0, "apply_filter: tau must lie in [0,1]");
  if (!pool.scored()) {
    pool.diagnostics.emplace_back("filter ignored: pool '" + pool.example_id + "' is unscored");
    return pool;
  }
  pool.tau_applied = tau;
  return pool;
}

MatchingDistribution matching_distribution(const TeacherPool& pool, MatchingMode mode) {
  require(pool.size() > 0, "matching_distribution: empty pool");
  const std::size_t k_total = pool.size();
  MatchingDistribution dist;
  dist.probs.assign(k_total, 0.0);
  if (!pool.scored()) {
    std::fill(dist.probs.begin(), dist.probs.end(), 1.0 / static_cast<double>(k_total));
    return dist;
  }
  if (mode == MatchingMode::kUniform) {
    std::size_t n_kept = 0;
    for (std::size_t k = 0; k < k_total; ++k) n_kept += pool.kept(k) ? 1 : 0;
    if (n_kept == 0) {
      fail(ErrorCode::kDegeneratePool,
           "matching_distribution: every response of '" + pool.example_id + "' is filtered");
    }
    for (std::size_t k = 0; k < k_total; ++k) {
      if (pool.kept(k)) dist.probs[k] = 1.0 / static_cast<double>(n_kept);
    }
    return dist;
  }
  const auto q = pool.effective_qualities();
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(total > 0.0)) {
    fail(ErrorCode::kDegeneratePool,
         "matching_distribution: all effective qualities of '" + pool.example_id + "' are zero");
  }
  for (std::size_t k = 0; k < k_total; ++k) dist.probs[k] = q[k] / total;
  return dist;
}

std::vector<std::size_t> sample_matches(const MatchingDistribution& dist, std::size_t n,
                                        std::uint64_t seed) {
  require(!dist.probs.empty(), "sample_matches: empty distribution");
  Rng rng = make_rng(seed);
  const CategoricalSampler draw(dist.probs);
  std::vector<std::size_t> out(n);
  for (auto& m : out) m = draw(rng);
  return out;
}

std::size_t select_sft_target(const TeacherPool& pool, std::uint64_t seed) {
  require(pool.size() > 0, "select_sft_target: empty pool");
  if (!pool.scored()) {
    Rng rng = make_rng(seed);
    return std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
  }
  const auto q = pool.effective_qualities();
  const auto best = std::max_element(q.begin(), q.end());  // first maximum
  if (!(*best > 0.0)) {
    fail(ErrorCode::kNoValidTarget,
         "select_sft_target: no response of '" + pool.example_id + "' has positive quality");
  }
  return static_cast<std::size_t>(best - q.begin());
}

double retention(const TeacherPool& pool, double tau) {
  require(pool.scored(), "retention: pool '" + pool.example_id + "' is unscored");
  const auto& q = *pool.qualities;
  const auto n = std::count_if(q.begin(), q.end(), [tau](double v) { return v >= tau; });
  return static_cast<double>(n) / static_cast<double>(q.size());
}

}  // namespace rmsd
