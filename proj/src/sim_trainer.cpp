#include "rmsd/sim_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rmsd/error.hpp"
#include "rmsd/random.hpp"

namespace rmsd {

namespace {

enum Stream : std::uint64_t {
  kTeacherStream = 11,
  kSftStream = 12,
  kDiscInitStream = 13,
  kRlStream = 14,
  kMatchStream = 15,
};

std::size_t max_answer_space(const SimBenchmark& bench) {
  std::size_t m = 0;
  for (const auto& sx : bench.examples) m = std::max(m, sx.ex.answer_space.size());
  return m;
}

std::optional<std::size_t> answer_index(const SimExample& sx, const ParsedResponse& resp) {
  if (!resp.valid() || !resp.payload) return std::nullopt;
  const auto& space = sx.ex.answer_space;
  const auto it = std::find(space.begin(), space.end(), *resp.payload);
  if (it == space.end()) return std::nullopt;
  return static_cast<std::size_t>(it - space.begin());
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

StudentPolicy StudentPolicy::uniform(const SimBenchmark& bench, bool shared) {
  StudentPolicy s;
  s.shared = shared;
  if (shared) {
    require(!bench.examples.empty(), "StudentPolicy: empty benchmark");
    const auto n = bench.examples.front().ex.answer_space.size();
    for (const auto& sx : bench.examples) {
      require(sx.ex.answer_space.size() == n, "shared StudentPolicy needs equal answer spaces");
    }
    s.logits.assign(1, std::vector<double>(n, 0.0));
  } else {
    for (const auto& sx : bench.examples) s.logits.emplace_back(sx.ex.answer_space.size(), 0.0);
  }
  return s;
}

std::vector<double> StudentPolicy::probs(std::size_t example) const { return softmax(row(example)); }

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "train config: " + what);
  };
  check(K >= 1, "K must be >= 1");
  check(N >= 1, "N must be >= 1");
  check(tau >= 0.0 && tau <= 1.0, "tau must lie in [0,1]");
  check(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and >= 0");
  check(lr_sft > 0.0 && lr_student > 0.0 && lr_disc > 0.0, "learning rates must be positive");
  check(epochs_stage1 >= 0 && epochs_stage2 >= 0, "epoch counts must be >= 0");
  check(metrics.eps_rel > 0.0, "eps_rel must be positive");
  check(metrics.success_iou > 0.0 && metrics.success_iou <= 1.0, "success_iou must lie in (0,1]");
  weights.validate();
}

AnswerTable make_answer_table(const SimExample& sx, const FeatureLayout& layout,
                              const MetricConfig& metrics) {
  AnswerTable t;
  const auto& ex = sx.ex;
  t.success = answer_success(sx, metrics);
  for (const auto& a : ex.answer_space) {
    auto parsed = parse_response(render_response(a), ex);
    t.features.push_back(featurize(parsed, ex, layout));
    t.outer.push_back(outer_reward(parsed));
    t.task.push_back(task_reward(parsed));
    t.content.push_back(content_reward(parsed, ex, metrics));
    t.parsed.push_back(std::move(parsed));
  }
  return t;
}

TeacherPool make_pool(const SimBenchmark& bench, std::size_t index, const TrainConfig& cfg) {
  const auto& sx = bench.examples[index];
  const auto raws = sample_teacher_pool(bench.teacher, bench, index, cfg.K,
                                        derive_seed(cfg.seed, {kTeacherStream, index}));
  auto pool = build_pool(sx.ex, raws, cfg.metrics);
  if (is_closed_ended(sx.ex.task)) {
    if (cfg.closed_scoring == ScoringStrategy::kUniform) pool.qualities.reset();
  } else if (cfg.open_scoring == ScoringStrategy::kGroundTruth) {
    std::vector<double> scores;
    for (const auto& r : pool.responses) {
      const auto a = answer_index(sx, r);
      scores.push_back(a ? sx.lexical_proxy[*a] : 0.0);
    }
    pool = with_scores(std::move(pool), std::move(scores));
  }
  if (cfg.filter) pool = apply_filter(std::move(pool), cfg.tau);
  return pool;
}

PreparedPool prepare_pool(TeacherPool pool, const SimExample& sx, const FeatureLayout& layout,
                          const TrainConfig& cfg) {
  PreparedPool out;
  for (const auto& r : pool.responses) out.features.push_back(featurize(r, sx.ex, layout));
  const bool weighted = cfg.quality_weighting && pool.scored();
  for (std::size_t k = 0; k < pool.size(); ++k) {
    out.q_match.push_back(weighted ? pool.effective_quality(k) : 1.0);
  }
  try {
    out.dist = matching_distribution(pool, cfg.quality_weighting ? MatchingMode::kQualityWeighted
                                                                 : MatchingMode::kUniform);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegeneratePool) throw;
    out.degenerate = true;
  }
  out.pool = std::move(pool);
  return out;
}

std::optional<std::size_t> sft_target(const TeacherPool& pool, const SimExample& sx,
                                      std::uint64_t seed) {
  std::size_t k = 0;
  try {
    k = select_sft_target(pool, seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoValidTarget) throw;
    return std::nullopt;
  }
  return answer_index(sx, pool.responses[k]);
}

SftResult sft_stage(StudentPolicy student, const std::vector<std::optional<std::size_t>>& targets,
                    double lr, int epochs) {
  require(lr > 0.0, "sft_stage: lr must be positive");
  SftResult res;
  for (const auto& t : targets) (t ? res.trained : res.excluded) += 1;
  for (int e = 0; e < epochs; ++e) {
    std::vector<std::vector<double>> grad(student.logits.size());
    std::vector<double> count(student.logits.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!targets[i]) continue;
      const auto p = student.probs(i);
      const std::size_t target = *targets[i];
      require(target < p.size(), "sft_stage: target outside the answer space");
      loss -= std::log(p[target]);
      const std::size_t r = student.shared ? 0 : i;
      if (grad[r].empty()) grad[r].assign(p.size(), 0.0);
      for (std::size_t j = 0; j < p.size(); ++j) grad[r][j] += p[j] - (j == target ? 1.0 : 0.0);
      count[r] += 1.0;
    }
    res.epoch_loss.push_back(res.trained > 0 ? loss / static_cast<double>(res.trained) : 0.0);
    for (std::size_t r = 0; r < grad.size(); ++r) {
      if (count[r] == 0.0) continue;
      for (std::size_t j = 0; j < grad[r].size(); ++j) {
        student.logits[r][j] -= lr * grad[r][j] / count[r];
      }
    }
  }
  res.student = std::move(student);
  return res;
}

double kl_penalty(const StudentPolicy& student, const StudentPolicy& ref, std::size_t example) {
  const auto p = student.probs(example);
  const auto q = ref.probs(example);
  require(p.size() == q.size(), "kl_penalty: answer spaces differ");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) kl += p[j] * (std::log(p[j]) - std::log(q[j]));
  }
  return std::max(kl, 0.0);
}

std::vector<double> kl_gradient(std::span<const double> probs, std::span<const double> ref_probs) {
  require(probs.size() == ref_probs.size(), "kl_gradient: size mismatch");
  double kl = 0.0;
  std::vector<double> log_ratio(probs.size(), 0.0);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] > 0.0) {
      log_ratio[j] = std::log(probs[j]) - std::log(ref_probs[j]);
      kl += probs[j] * log_ratio[j];
    }
  }
  std::vector<double> g(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) g[j] = probs[j] * (log_ratio[j] - kl);
  return g;
}

std::vector<double> policy_gradient_estimate(std::span<const double> probs,
                                             std::span<const std::size_t> actions,
                                             std::span<const double> rewards, Baseline baseline) {
  require(actions.size() == rewards.size() && !actions.empty(),
          "policy_gradient_estimate: need one reward per action");
  const double n = static_cast<double>(actions.size());
  const double b =
      baseline == Baseline::kGroupMean ? std::accumulate(rewards.begin(), rewards.end(), 0.0) / n : 0.0;
  std::vector<double> g(probs.size(), 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double adv = (rewards[i] - b) / n;
    if (adv == 0.0) continue;
    for (std::size_t j = 0; j < probs.size(); ++j) g[j] -= adv * probs[j];
    g[actions[i]] += adv;
  }
  return g;
}

RlMetrics rl_step(StudentPolicy& student, const StudentPolicy& ref, DiscriminatorParams& disc,
                  AdamState* adam, const PreparedPool& pool, const AnswerTable& answers,
                  std::size_t index, const TrainConfig& cfg, std::uint64_t seed) {
  RlMetrics m;
  if (pool.degenerate) {
    m.skipped = true;
    return m;
  }
  const auto probs = student.probs(index);
  Rng rng = make_rng(derive_seed(seed, {0}));
  const CategoricalSampler draw(probs);
  std::vector<std::size_t> actions(cfg.N);
  for (auto& a : actions) a = draw(rng);
  const auto matches = sample_matches(pool.dist, cfg.N, derive_seed(seed, {kMatchStream}));

  std::vector<double> rewards(cfg.N);
  std::vector<TrainingPair> pairs;
  pairs.reserve(cfg.N);
  for (std::size_t i = 0; i < cfg.N; ++i) {
    const auto a = actions[i];
    const double d = sigmoid(score(disc, answers.features[a]));
    rewards[i] = combine(cfg.weights, d, answers.outer[a], answers.task[a], answers.content[a]);
    pairs.push_back({pool.features[matches[i]], answers.features[a], pool.q_match[matches[i]]});
  }
  m.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(cfg.N);

  // Rewards above use the pre-update discriminator; the discriminator moves first.
  m.disc_loss = batch_loss(disc, pairs);
  disc = adam ? adam_step(disc, pairs, cfg.lr_disc, *adam) : update_step(disc, pairs, cfg.lr_disc);

  const auto pg = policy_gradient_estimate(probs, actions, rewards, cfg.baseline);
  const auto kg = kl_gradient(probs, ref.probs(index));
  auto& row = student.row(index);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] += cfg.lr_student * (pg[j] - cfg.gamma * kg[j]);
  m.kl = kl_penalty(student, ref, index);
  return m;
}

double expected_accuracy(const StudentPolicy& student, const SimBenchmark& bench,
                         std::optional<TaskFamily> family, const MetricConfig& metrics) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < bench.examples.size(); ++i) {
    const auto& sx = bench.examples[i];
    if (family && rmsd::family(sx.ex.task) != *family) continue;
    const auto p = student.probs(i);
    const auto s = answer_success(sx, metrics);
    total += std::inner_product(p.begin(), p.end(), s.begin(), 0.0);
    ++n;
  }
  return n > 0 ? total / static_cast<double>(n) : 0.0;
}

TrainedArtifacts run_pipeline(const SimBenchmark& bench, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = bench.examples.size();
  require(n > 0, "run_pipeline: empty benchmark");
  const FeatureLayout layout{max_answer_space(bench)};

  TrainedArtifacts art;
  std::vector<AnswerTable> tables;
  std::vector<PreparedPool> prepared;
  std::vector<std::optional<std::size_t>> targets;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sx = bench.examples[i];
    tables.push_back(make_answer_table(sx, layout, cfg.metrics));
    auto pool = make_pool(bench, i, cfg);
    targets.push_back(sft_target(pool, sx, derive_seed(cfg.seed, {kSftStream, i})));
    art.pools.push_back(pool);
    prepared.push_back(prepare_pool(std::move(pool), sx, layout, cfg));
  }

  StudentPolicy student = StudentPolicy::uniform(bench);
  int step = 0;
  for (int e = 0; e < cfg.epochs_stage1; ++e) {
    auto res = sft_stage(std::move(student), targets, cfg.lr_sft, 1);
    student = std::move(res.student);
    art.metrics.push_back({++step, "sft", std::nullopt, std::nullopt, std::nullopt,
                           expected_accuracy(student, bench, std::nullopt, cfg.metrics)});
  }
  art.sft_excluded = static_cast<std::size_t>(
      std::count_if(targets.begin(), targets.end(), [](const auto& t) { return !t.has_value(); }));
  art.reference = student;

  for (std::size_t i = 0; i < n; ++i) {
    art.discriminators.push_back(
        cfg.disc_hidden == 0
            ? DiscriminatorParams::linear(layout.dim())
            : DiscriminatorParams::with_hidden(layout.dim(), cfg.disc_hidden,
                                               derive_seed(cfg.seed, {kDiscInitStream, i})));
  }
  std::vector<AdamState> adam(cfg.disc_optimizer == DiscOptimizer::kAdam ? n : 0);
  art.rl_skipped = static_cast<std::size_t>(std::count_if(
      prepared.begin(), prepared.end(), [](const PreparedPool& p) { return p.degenerate; }));

  for (int e = 0; e < cfg.epochs_stage2; ++e) {
    double reward = 0.0, loss = 0.0, kl = 0.0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto m = rl_step(student, art.reference, art.discriminators[i],
                             adam.empty() ? nullptr : &adam[i], prepared[i], tables[i], i, cfg,
                             derive_seed(cfg.seed, {kRlStream, static_cast<std::uint64_t>(e), i}));
      if (m.skipped) continue;
      reward += m.mean_reward;
      loss += m.disc_loss;
      kl += m.kl;
      ++active;
    }
    const double denom = active > 0 ? static_cast<double>(active) : 1.0;
    art.metrics.push_back({++step, "rl", reward / denom, loss / denom, kl / denom,
                           expected_accuracy(student, bench, std::nullopt, cfg.metrics)});
  }
  art.final_accuracy = expected_accuracy(student, bench, std::nullopt, cfg.metrics);
  art.student = std::move(student);
  return art;
}

double pass_at_k_unbiased(std::size_t n, std::size_t c, std::size_t k) {
  require(k >= 1 && k <= n && c <= n, "pass_at_k_unbiased: need 1 <= k <= n and c <= n");
  if (n - c < k) return 1.0;
  double fail_prob = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i) {
    fail_prob *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  }
  return 1.0 - fail_prob;
}

std::vector<PassAtK> pass_at_k_eval(const StudentPolicy& student, const SimBenchmark& bench,
                                    const std::vector<std::size_t>& k_values, double temperature,
                                    double top_p, std::uint64_t seed,
                                    std::size_t queries_per_example) {
  require(!k_values.empty(), "pass_at_k_eval: no k values");
  require(queries_per_example >= 1, "pass_at_k_eval: queries_per_example must be >= 1");
  const std::size_t n_samples = *std::max_element(k_values.begin(), k_values.end());
  std::vector<double> sums(k_values.size(), 0.0);
  std::size_t queries = 0;
  for (std::size_t i = 0; i < bench.examples.size(); ++i) {
    const auto& sx = bench.examples[i];
    if (!is_closed_ended(sx.ex.task)) continue;
    const auto dist = nucleus(student.row(i), temperature, top_p);
    const auto success = answer_success(sx);
    const CategoricalSampler draw(dist);
    for (std::size_t q = 0; q < queries_per_example; ++q) {
      Rng rng = make_rng(derive_seed(seed, {i, q}));
      std::size_t c = 0;
      for (std::size_t s = 0; s < n_samples; ++s) c += success[draw(rng)] > 0.5 ? 1 : 0;
      for (std::size_t j = 0; j < k_values.size(); ++j) {
        sums[j] += pass_at_k_unbiased(n_samples, c, k_values[j]);
      }
      ++queries;
    }
  }
  require(queries > 0, "pass_at_k_eval: benchmark has no closed-ended examples");
  std::vector<PassAtK> curve;
  for (std::size_t j = 0; j < k_values.size(); ++j) {
    curve.push_back({k_values[j], sums[j] / static_cast<double>(queries)});
  }
  std::sort(curve.begin(), curve.end(), [](const PassAtK& a, const PassAtK& b) { return a.k < b.k; });
  return curve;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "step,stage,mean_reward,disc_loss,kl,accuracy\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    os << r.step << ',' << r.stage << ',' << opt(r.mean_reward) << ',' << opt(r.disc_loss) << ','
       << opt(r.kl) << ',' << format_double(r.accuracy) << '\n';
  }
  return os.str();
}

}  // namespace rmsd
