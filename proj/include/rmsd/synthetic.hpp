#pragma once

// Synthetic benchmark over finite answer spaces and a teacher with
// controllable quality, spread and format-violation rate.
//
// Answer spaces:
//   multiple choice   option letters A.. (option_count of them)
//   temporal          [i/g, (j+1)/g] for 0 <= i <= j < g on a g-point grid
//   open-ended        g text variants with a hidden correctness bit each
//
// The teacher's distribution for example e is softmax(c_e * affinity / T)
// truncated to its top-p nucleus, where affinity is the ground-truth metric
// (closed-ended) or the hidden correctness bit (open-ended). c_e is solved
// per example so the teacher's expected quality hits a target drawn from a
// Beta distribution with the configured mean and spread.

#include <cstdint>
#include <string>
#include <vector>

#include "rmsd/quality_metrics.hpp"
#include "rmsd/random.hpp"
#include "rmsd/task_model.hpp"

namespace rmsd {

struct SimExample {
  SupervisionExample ex;
  // Open-ended only: hidden correctness and a lexical-overlap style proxy
  // per answer, both in {0,1}.
  std::vector<double> latent_correct;
  std::vector<double> lexical_proxy;
};

struct SyntheticTeacher {
  std::vector<std::vector<double>> probs;    // per example, over its answer space
  std::vector<double> concentration;         // per example
  std::vector<double> format_violation_rate; // per example
  double temperature = 1.0;
  double top_p = 0.9;
};

struct BenchmarkConfig {
  int n_mcq = 40;
  int n_temporal = 40;
  int n_open = 0;
  int option_count = 4;
  int temporal_grid = 10;
  int open_variants = 6;
  // Teacher quality across questions.
  double mean_quality = 0.75;
  double cross_sigma = 0.2;
  // Temporal questions use their own quality target when >= 0.
  double temporal_mean_quality = 0.45;
  double temporal_cross_sigma = -1.0;
  // A perfect teacher puts all mass on the ground truth (or a correct
  // open-ended variant); the quality targets are then ignored.
  bool perfect_teacher = false;
  double violation_rate = 0.01;
  double temporal_violation_rate = 0.10;
  double temperature = 1.0;
  double top_p = 0.9;
  // Minimum ground-truth segment length, in grid cells.
  int temporal_min_cells = 3;
  // Open-ended simulation.
  double open_correct_fraction = 0.5;
  double paraphrase_rate = 0.6;  // correct variant gets proxy 0
  double copy_rate = 0.6;        // wrong variant gets proxy 1
};

struct SimBenchmark {
  std::vector<SimExample> examples;
  SyntheticTeacher teacher;
};

SimBenchmark make_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed);

// Similarity of each answer to the ground truth (metric) or the hidden
// correctness bit for open-ended examples.
std::vector<double> answer_affinity(const SimExample& sx, const MetricConfig& metrics = {});

// Whether an answer counts as a success for accuracy and pass@k:
// exact match, IoU >= metrics.success_iou, or hidden correctness.
std::vector<double> answer_success(const SimExample& sx, const MetricConfig& metrics = {});

// softmax(logits / temperature), restricted to the smallest top-probability
// prefix whose mass reaches top_p, renormalized. Ties keep index order.
std::vector<double> nucleus(std::span<const double> logits, double temperature, double top_p);

std::vector<double> teacher_distribution(std::span<const double> affinity, double concentration,
                                         double temperature, double top_p);

// Smallest concentration whose teacher distribution reaches expected
// affinity `target`. The nucleus cut makes that curve jump, so the value hit
// can overshoot. Targets below the c = 0 value return 0.
double solve_concentration(std::span<const double> affinity, double target, double temperature,
                           double top_p);

// k independent teacher responses for example `index`. Sample j depends only
// on (seed, j), so a pool of size k is a prefix of any larger pool.
std::vector<std::string> sample_teacher_pool(const SyntheticTeacher& teacher,
                                             const SimBenchmark& bench, std::size_t index,
                                             std::size_t k, std::uint64_t seed);

// Breaks the <answer> envelope of a well-formed response.
std::string corrupt_envelope(const std::string& raw, Rng& rng);

// Teacher corpus for variance analysis. Temporal questions with continuous
// ground-truth segments; each response's IoU is set to
// clamp(mu_e + sampling_sigma * z, 0, 1), with mu_e uniform with spread
// cross_sigma around mean_quality. Exactly round(violation_rate * total)
// responses, chosen at random, have a corrupted envelope.
struct VarianceCorpusConfig {
  int questions = 200;
  int samples_per_question = 4;
  double mean_quality = 0.6;
  double cross_sigma = 0.12;
  double sampling_sigma = 0.10;
  double violation_rate = 0.01;
};

struct CorpusLine {
  std::string example_id;
  std::string source = "teacher";  // "teacher" | "student"
  int sample_index = 0;
  std::string text;
};

struct VarianceCorpus {
  std::vector<SupervisionExample> examples;
  std::vector<CorpusLine> lines;
};

VarianceCorpus make_variance_corpus(const VarianceCorpusConfig& cfg, std::uint64_t seed);

}  // namespace rmsd
