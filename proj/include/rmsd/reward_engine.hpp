#pragma once

#include "rmsd/quality_metrics.hpp"
#include "rmsd/task_model.hpp"

namespace rmsd {

// Weights of the four reward terms. Must be non-negative and sum to one.
struct RewardWeights {
  double alpha = 0.4;  // discriminator
  double beta = 0.1;   // outer format
  double eta = 0.1;    // task format
  double delta = 0.4;  // content

  // Throws Error(kInvalidWeights).
  void validate() const;
};

struct RewardBreakdown {
  double disc = 0.0;
  double outer = 0.0;
  double task = 0.0;
  double content = 0.0;
  double composite = 0.0;
};

double outer_reward(const ParsedResponse& resp);
double task_reward(const ParsedResponse& resp);
// Quality score for closed-ended examples, 0 for open-ended ones.
double content_reward(const ParsedResponse& resp, const SupervisionExample& ex,
                      const MetricConfig& metrics = {});

// disc_score enters the sum as given; callers map raw scorer output through
// a sigmoid first.
RewardBreakdown composite_reward(double disc_score, const ParsedResponse& resp,
                                 const SupervisionExample& ex, const RewardWeights& w,
                                 const MetricConfig& metrics = {});

// The weighted sum itself, for callers that already hold the components.
double combine(const RewardWeights& w, double disc, double outer, double task, double content);

}  // namespace rmsd
