#pragma once

// Scalar response scorer and its quality-weighted pairwise training loss.
//
// The scorer is either linear, s(f) = w.f + b, or has one tanh hidden layer,
// s(f) = v.tanh(W f + c) + b. Parameters flatten in the order
// [W (row-major), c, w|v, b].

#include <cstdint>
#include <span>
#include <vector>

#include "rmsd/task_model.hpp"

namespace rmsd {

using FeatureVector = std::vector<double>;

// Feature layout:
//   0      outer format valid
//   1      task format valid
//   2      thinking span present
//   3      log1p(raw length) / 8
//   4..9   payload alternative one-hot (temporal, box, option, binary, number, text)
//   10..   one-hot position of the payload in the example's answer space
//          (answer_slots entries; all zero when absent or out of range)
struct FeatureLayout {
  std::size_t answer_slots = 0;

  static constexpr std::size_t kBaseFeatures = 10;
  std::size_t dim() const { return kBaseFeatures + answer_slots; }
};

FeatureVector featurize(const ParsedResponse& resp, const SupervisionExample& ex,
                        const FeatureLayout& layout);

struct DiscriminatorParams {
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;      // 0 for the linear scorer
  std::vector<double> hidden_w;    // hidden_dim x feature_dim
  std::vector<double> hidden_b;    // hidden_dim
  std::vector<double> weights;     // hidden_dim, or feature_dim when linear
  double bias = 0.0;

  static DiscriminatorParams linear(std::size_t feature_dim);
  // Hidden weights drawn from N(0, init_scale^2 / feature_dim); output weights zero.
  static DiscriminatorParams with_hidden(std::size_t feature_dim, std::size_t hidden_dim,
                                         std::uint64_t seed, double init_scale = 1.0);

  std::size_t num_params() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  // Throws Error(kContract) on inconsistent shapes or non-finite entries.
  void validate() const;

  bool operator==(const DiscriminatorParams&) const = default;
};

double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

double score(const DiscriminatorParams& params, std::span<const double> f);

// Gradient of score() with respect to the flattened parameters.
std::vector<double> score_gradient(const DiscriminatorParams& params, std::span<const double> f);

// q_match * softplus(-(D(teacher) - D(student)))
double pairwise_loss(const DiscriminatorParams& params, std::span<const double> teacher_f,
                     std::span<const double> student_f, double q_match);

// Analytic gradient of pairwise_loss, flattened like DiscriminatorParams.
std::vector<double> loss_gradient(const DiscriminatorParams& params,
                                  std::span<const double> teacher_f,
                                  std::span<const double> student_f, double q_match);

struct TrainingPair {
  FeatureVector teacher;
  FeatureVector student;
  double q_match = 1.0;
};

double batch_loss(const DiscriminatorParams& params, std::span<const TrainingPair> batch);
std::vector<double> batch_gradient(const DiscriminatorParams& params,
                                   std::span<const TrainingPair> batch);

// One gradient-descent step on the mean batch loss.
DiscriminatorParams update_step(const DiscriminatorParams& params,
                                std::span<const TrainingPair> batch, double lr);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

// Adaptive-moment variant of update_step. A batch whose pairs all carry zero
// weight leaves both parameters and moments untouched.
DiscriminatorParams adam_step(const DiscriminatorParams& params,
                              std::span<const TrainingPair> batch, double lr, AdamState& state);

}  // namespace rmsd
