#include "rmsd/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rmsd/error.hpp"
#include "rmsd/random.hpp"

namespace rmsd {

FeatureVector featurize(const ParsedResponse& resp, const SupervisionExample& ex,
                        const FeatureLayout& layout) {
  FeatureVector f(layout.dim(), 0.0);
  f[0] = resp.outer_valid ? 1.0 : 0.0;
  f[1] = resp.task_valid ? 1.0 : 0.0;
  f[2] = resp.has_think ? 1.0 : 0.0;
  f[3] = std::log1p(static_cast<double>(resp.raw.size())) / 8.0;
  if (resp.payload) {
    f[4 + resp.payload->index()] = 1.0;
    if (layout.answer_slots > 0) {
      const auto it = std::find(ex.answer_space.begin(), ex.answer_space.end(), *resp.payload);
      const auto pos = static_cast<std::size_t>(it - ex.answer_space.begin());
      if (it != ex.answer_space.end() && pos < layout.answer_slots) {
        f[FeatureLayout::kBaseFeatures + pos] = 1.0;
      }
    }
  }
  return f;
}

DiscriminatorParams DiscriminatorParams::linear(std::size_t feature_dim) {
  DiscriminatorParams p;
  p.feature_dim = feature_dim;
  p.weights.assign(feature_dim, 0.0);
  return p;
}

DiscriminatorParams DiscriminatorParams::with_hidden(std::size_t feature_dim,
                                                     std::size_t hidden_dim,
                                                     std::uint64_t seed, double init_scale) {
  require(hidden_dim > 0, "with_hidden: hidden_dim must be positive");
  DiscriminatorParams p;
  p.feature_dim = feature_dim;
  p.hidden_dim = hidden_dim;
  p.hidden_w.resize(hidden_dim * feature_dim);
  p.hidden_b.assign(hidden_dim, 0.0);
  p.weights.assign(hidden_dim, 0.0);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> init(
      0.0, init_scale / std::sqrt(static_cast<double>(std::max<std::size_t>(feature_dim, 1))));
  for (auto& w : p.hidden_w) w = init(rng);
  return p;
}

std::size_t DiscriminatorParams::num_params() const {
  return hidden_w.size() + hidden_b.size() + weights.size() + 1;
}

std::vector<double> DiscriminatorParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_params());
  flat.insert(flat.end(), hidden_w.begin(), hidden_w.end());
  flat.insert(flat.end(), hidden_b.begin(), hidden_b.end());
  flat.insert(flat.end(), weights.begin(), weights.end());
  flat.push_back(bias);
  return flat;
}

void DiscriminatorParams::assign(std::span<const double> flat) {
  require(flat.size() == num_params(), "DiscriminatorParams::assign: size mismatch");
  auto it = flat.begin();
  std::copy_n(it, hidden_w.size(), hidden_w.begin());
  it += static_cast<std::ptrdiff_t>(hidden_w.size());
  std::copy_n(it, hidden_b.size(), hidden_b.begin());
  it += static_cast<std::ptrdiff_t>(hidden_b.size());
  std::copy_n(it, weights.size(), weights.begin());
  it += static_cast<std::ptrdiff_t>(weights.size());
  bias = *it;
}

void DiscriminatorParams::validate() const {
  if (hidden_dim == 0) {
    require(hidden_w.empty() && hidden_b.empty(), "linear scorer carries hidden weights");
    require(weights.size() == feature_dim, "linear scorer weight size != feature_dim");
  } else {
    require(hidden_w.size() == hidden_dim * feature_dim, "hidden weight matrix has wrong size");
    require(hidden_b.size() == hidden_dim, "hidden bias has wrong size");
    require(weights.size() == hidden_dim, "output weight size != hidden_dim");
  }
  for (double v : flatten()) require(std::isfinite(v), "discriminator parameter is not finite");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

namespace {

void check_dim(const DiscriminatorParams& params, std::span<const double> f) {
  require(f.size() == params.feature_dim, "discriminator: feature dimension mismatch");
}

std::vector<double> hidden_activations(const DiscriminatorParams& p, std::span<const double> f) {
  std::vector<double> h(p.hidden_dim);
  for (std::size_t j = 0; j < p.hidden_dim; ++j) {
    double z = p.hidden_b[j];
    const double* row = p.hidden_w.data() + j * p.feature_dim;
    for (std::size_t k = 0; k < p.feature_dim; ++k) z += row[k] * f[k];
    h[j] = std::tanh(z);
  }
  return h;
}

// out += scale * d score / d params
void accumulate_score_gradient(const DiscriminatorParams& p, std::span<const double> f,
                               double scale, std::vector<double>& out) {
  const std::size_t w_off = p.hidden_w.size() + p.hidden_b.size();
  if (p.hidden_dim == 0) {
    for (std::size_t k = 0; k < p.feature_dim; ++k) out[w_off + k] += scale * f[k];
  } else {
    const auto h = hidden_activations(p, f);
    const std::size_t b_off = p.hidden_w.size();
    for (std::size_t j = 0; j < p.hidden_dim; ++j) {
      out[w_off + j] += scale * h[j];
      const double back = scale * p.weights[j] * (1.0 - h[j] * h[j]);
      out[b_off + j] += back;
      double* row = out.data() + j * p.feature_dim;
      for (std::size_t k = 0; k < p.feature_dim; ++k) row[k] += back * f[k];
    }
  }
  out.back() += scale;
}

}  // namespace

double score(const DiscriminatorParams& params, std::span<const double> f) {
  check_dim(params, f);
  double s = params.bias;
  if (params.hidden_dim == 0) {
    for (std::size_t k = 0; k < params.feature_dim; ++k) s += params.weights[k] * f[k];
  } else {
    const auto h = hidden_activations(params, f);
    for (std::size_t j = 0; j < params.hidden_dim; ++j) s += params.weights[j] * h[j];
  }
  return s;
}

std::vector<double> score_gradient(const DiscriminatorParams& params, std::span<const double> f) {
  check_dim(params, f);
  std::vector<double> g(params.num_params(), 0.0);
  accumulate_score_gradient(params, f, 1.0, g);
  return g;
}

double pairwise_loss(const DiscriminatorParams& params, std::span<const double> teacher_f,
                     std::span<const double> student_f, double q_match) {
  require(q_match >= 0.0 && q_match <= 1.0, "pairwise_loss: q_match must lie in [0,1]");
  const double margin = score(params, teacher_f) - score(params, student_f);
  return q_match * softplus(-margin);
}

std::vector<double> loss_gradient(const DiscriminatorParams& params,
                                  std::span<const double> teacher_f,
                                  std::span<const double> student_f, double q_match) {
  require(q_match >= 0.0 && q_match <= 1.0, "loss_gradient: q_match must lie in [0,1]");
  std::vector<double> g(params.num_params(), 0.0);
  if (q_match == 0.0) return g;
  const double margin = score(params, teacher_f) - score(params, student_f);
  // d/dmargin softplus(-margin) = -sigmoid(-margin)
  const double coeff = -q_match * sigmoid(-margin);
  accumulate_score_gradient(params, teacher_f, coeff, g);
  accumulate_score_gradient(params, student_f, -coeff, g);
  return g;
}

double batch_loss(const DiscriminatorParams& params, std::span<const TrainingPair> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& pair : batch) total += pairwise_loss(params, pair.teacher, pair.student, pair.q_match);
  return total / static_cast<double>(batch.size());
}

std::vector<double> batch_gradient(const DiscriminatorParams& params,
                                   std::span<const TrainingPair> batch) {
  std::vector<double> g(params.num_params(), 0.0);
  if (batch.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& pair : batch) {
    if (pair.q_match == 0.0) continue;
    const auto gi = loss_gradient(params, pair.teacher, pair.student, pair.q_match);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += inv_n * gi[i];
  }
  return g;
}

DiscriminatorParams update_step(const DiscriminatorParams& params,
                                std::span<const TrainingPair> batch, double lr) {
  require(lr > 0.0, "update_step: lr must be positive");
  const auto g = batch_gradient(params, batch);
  auto flat = params.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= lr * g[i];
  DiscriminatorParams out = params;
  out.assign(flat);
  return out;
}

DiscriminatorParams adam_step(const DiscriminatorParams& params,
                              std::span<const TrainingPair> batch, double lr, AdamState& state) {
  require(lr > 0.0, "adam_step: lr must be positive");
  const bool any_weight = std::any_of(batch.begin(), batch.end(),
                                      [](const TrainingPair& p) { return p.q_match > 0.0; });
  if (!any_weight) return params;
  const auto g = batch_gradient(params, batch);
  if (state.m.empty()) {
    state.m.assign(g.size(), 0.0);
    state.v.assign(g.size(), 0.0);
  }
  require(state.m.size() == g.size(), "adam_step: optimizer state does not match parameters");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto flat = params.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    flat[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + state.eps);
  }
  DiscriminatorParams out = params;
  out.assign(flat);
  return out;
}

}  // namespace rmsd
