#pragma once

// Two-stage distillation over a synthetic benchmark.
//
// Stage 1 fits the categorical student to one selected teacher response per
// example by gradient descent on cross-entropy. Stage 2 repeats, per example:
// draw N student rollouts, match each to a teacher response, score rollouts
// with the composite reward (sigmoid-mapped discriminator score), update the
// discriminator on the matched pairs, then take one policy-gradient step with
// a KL penalty towards the frozen Stage-1 policy.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmsd/discriminator.hpp"
#include "rmsd/pool_matcher.hpp"
#include "rmsd/reward_engine.hpp"
#include "rmsd/synthetic.hpp"

namespace rmsd {

struct StudentPolicy {
  // One row per example, or a single row used by every example when shared.
  std::vector<std::vector<double>> logits;
  bool shared = false;

  static StudentPolicy uniform(const SimBenchmark& bench, bool shared = false);

  std::vector<double>& row(std::size_t example) { return logits[shared ? 0 : example]; }
  const std::vector<double>& row(std::size_t example) const { return logits[shared ? 0 : example]; }
  std::vector<double> probs(std::size_t example) const;

  bool operator==(const StudentPolicy&) const = default;
};

std::vector<double> softmax(std::span<const double> logits);

enum class Baseline { kGroupMean, kNone };
enum class DiscOptimizer { kSgd, kAdam };
// How a task family's teacher responses are scored for selection and matching.
enum class ScoringStrategy {
  kGroundTruth,  // closed-ended: metric vs ground truth; open-ended: lexical proxy
  kUniform,      // unscored: random SFT target, uniform matching
};

struct TrainConfig {
  std::size_t K = 4;
  std::size_t N = 8;
  double tau = 0.3;
  bool filter = true;
  bool quality_weighting = true;
  RewardWeights weights;
  double gamma = 0.01;
  double lr_sft = 0.5;
  double lr_student = 1.0;
  double lr_disc = 2.0;
  int epochs_stage1 = 3;
  int epochs_stage2 = 60;
  std::uint64_t seed = 0;
  Baseline baseline = Baseline::kGroupMean;
  std::size_t disc_hidden = 0;
  DiscOptimizer disc_optimizer = DiscOptimizer::kSgd;
  ScoringStrategy closed_scoring = ScoringStrategy::kGroundTruth;
  ScoringStrategy open_scoring = ScoringStrategy::kUniform;
  MetricConfig metrics;

  // Throws Error(kConfig).
  void validate() const;
};

// Per-answer data for one example, computed once per run.
struct AnswerTable {
  std::vector<ParsedResponse> parsed;
  std::vector<FeatureVector> features;
  std::vector<double> outer;
  std::vector<double> task;
  std::vector<double> content;
  std::vector<double> success;
};

AnswerTable make_answer_table(const SimExample& sx, const FeatureLayout& layout,
                              const MetricConfig& metrics);

// A teacher pool with what Stage 2 needs precomputed. `degenerate` marks
// pools with no matchable response; they are skipped.
struct PreparedPool {
  TeacherPool pool;
  std::vector<FeatureVector> features;
  std::vector<double> q_match;
  MatchingDistribution dist;
  bool degenerate = false;
};

PreparedPool prepare_pool(TeacherPool pool, const SimExample& sx, const FeatureLayout& layout,
                          const TrainConfig& cfg);

// Teacher pool for example `index` under the configured strategy and filter.
TeacherPool make_pool(const SimBenchmark& bench, std::size_t index, const TrainConfig& cfg);

// Index into the example's answer space of the Stage-1 target, or nullopt
// when the example is excluded (no valid target).
std::optional<std::size_t> sft_target(const TeacherPool& pool, const SimExample& sx,
                                      std::uint64_t seed);

struct SftResult {
  StudentPolicy student;
  std::vector<double> epoch_loss;  // mean NLL before each epoch's step
  std::size_t trained = 0;
  std::size_t excluded = 0;
};

// targets[i] is the answer index to imitate, or nullopt to leave example i out.
SftResult sft_stage(StudentPolicy student, const std::vector<std::optional<std::size_t>>& targets,
                    double lr, int epochs);

// Exact KL(student || ref) for one example.
double kl_penalty(const StudentPolicy& student, const StudentPolicy& ref, std::size_t example);
// Gradient of KL(softmax(logits) || ref_probs) with respect to the logits.
std::vector<double> kl_gradient(std::span<const double> probs, std::span<const double> ref_probs);

// (1/N) sum_i A_i * d log pi(a_i) / d logits, with A_i = r_i - baseline.
std::vector<double> policy_gradient_estimate(std::span<const double> probs,
                                             std::span<const std::size_t> actions,
                                             std::span<const double> rewards, Baseline baseline);

struct RlMetrics {
  bool skipped = false;
  double mean_reward = 0.0;
  double disc_loss = 0.0;
  double kl = 0.0;
};

// One Stage-2 step on example `index`. Updates `student` and `disc` in place.
RlMetrics rl_step(StudentPolicy& student, const StudentPolicy& ref, DiscriminatorParams& disc,
                  AdamState* adam, const PreparedPool& pool, const AnswerTable& answers,
                  std::size_t index, const TrainConfig& cfg, std::uint64_t seed);

struct MetricsRow {
  int step = 0;
  std::string stage;  // "sft" | "rl"
  std::optional<double> mean_reward;
  std::optional<double> disc_loss;
  std::optional<double> kl;
  double accuracy = 0.0;
};

struct TrainedArtifacts {
  StudentPolicy student;
  StudentPolicy reference;
  std::vector<DiscriminatorParams> discriminators;  // one per example
  std::vector<MetricsRow> metrics;
  std::vector<TeacherPool> pools;
  std::size_t sft_excluded = 0;
  std::size_t rl_skipped = 0;  // examples skipped for Stage 2
  double final_accuracy = 0.0;
};

TrainedArtifacts run_pipeline(const SimBenchmark& bench, const TrainConfig& cfg);

// Expected success under the student's own distribution.
double expected_accuracy(const StudentPolicy& student, const SimBenchmark& bench,
                         std::optional<TaskFamily> family = std::nullopt,
                         const MetricConfig& metrics = {});

struct PassAtK {
  std::size_t k = 1;
  double rate = 0.0;
};

// For each closed-ended example, `queries_per_example` queries each draw
// max(k_values) samples from the tempered nucleus distribution; pass@k uses
// the unbiased estimator 1 - C(n-c, k) / C(n, k).
std::vector<PassAtK> pass_at_k_eval(const StudentPolicy& student, const SimBenchmark& bench,
                                    const std::vector<std::size_t>& k_values, double temperature,
                                    double top_p, std::uint64_t seed,
                                    std::size_t queries_per_example = 1);

// 1 - C(n-c, k) / C(n, k)
double pass_at_k_unbiased(std::size_t n, std::size_t c, std::size_t k);

std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace rmsd
