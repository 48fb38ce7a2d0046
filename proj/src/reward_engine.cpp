#include "rmsd/reward_engine.hpp"

#include <cmath>
#include <string>

#include "rmsd/error.hpp"

namespace rmsd {

void RewardWeights::validate() const {
  for (double v : {alpha, beta, eta, delta}) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorCode::kInvalidWeights, "reward weights must be finite and non-negative");
    }
  }
  const double sum = alpha + beta + eta + delta;
  if (std::abs(sum - 1.0) > 1e-12) {
    fail(ErrorCode::kInvalidWeights,
         "reward weights must sum to 1 (got " + format_double(sum) + ")");
  }
}

double outer_reward(const ParsedResponse& resp) { return resp.outer_valid ? 1.0 : 0.0; }

double task_reward(const ParsedResponse& resp) { return resp.task_valid ? 1.0 : 0.0; }

double content_reward(const ParsedResponse& resp, const SupervisionExample& ex,
                      const MetricConfig& metrics) {
  if (!is_closed_ended(ex.task)) return 0.0;
  return quality_score(resp, ex, metrics);
}

double combine(const RewardWeights& w, double disc, double outer, double task, double content) {
  return w.alpha * disc + w.beta * outer + w.eta * task + w.delta * content;
}

RewardBreakdown composite_reward(double disc_score, const ParsedResponse& resp,
                                 const SupervisionExample& ex, const RewardWeights& w,
                                 const MetricConfig& metrics) {
  w.validate();
  RewardBreakdown out;
  out.disc = disc_score;
  out.outer = outer_reward(resp);
  out.task = task_reward(resp);
  out.content = content_reward(resp, ex, metrics);
  out.composite = combine(w, out.disc, out.outer, out.task, out.content);
  return out;
}

}  // namespace rmsd
