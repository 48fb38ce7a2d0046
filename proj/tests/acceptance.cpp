// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails. Tolerances and budgets are pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rmsd/discriminator.hpp"
#include "rmsd/error.hpp"
#include "rmsd/harness.hpp"
#include "rmsd/pool_matcher.hpp"
#include "rmsd/quality_metrics.hpp"
#include "rmsd/reward_engine.hpp"
#include "rmsd/sim_trainer.hpp"

using namespace rmsd;

namespace {

constexpr int kMetricInstances = 10000;
constexpr double kMetricTol = 1e-9;
constexpr double kEditTol = 1e-6;
constexpr double kMetricBudgetSec = 10.0;

constexpr int kFuzzStrings = 10000;

constexpr int kMatchPools = 100;
constexpr std::size_t kMatchDraws = 100000;
constexpr double kMatchTol = 0.01;
constexpr double kMatchBudgetSec = 30.0;

constexpr int kRewardTuples = 1000;
constexpr double kRewardTol = 1e-12;

constexpr int kGradInstances = 1000;
constexpr double kGradRelTol = 1e-5;

constexpr std::size_t kPgRollouts = 10000;
constexpr std::size_t kPgGroup = 8;
constexpr double kPgRelTol = 0.05;
constexpr int kKlSeeds = 10;
constexpr double kPolicyBudgetSec = 300.0;

constexpr int kAblationSeeds = 20;
constexpr double kAblationAlpha = 0.05;
constexpr double kAblationBudgetSec = 900.0;

constexpr double kPassTol = 0.01;
constexpr double kPassGapPoints = 2.0;

constexpr double kVarianceRelTol = 0.10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<std::uint64_t>(i));
  return s;
}

// ---- 1 ----
Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double e_t = 0, e_s = 0, e_e = 0;
  int eps_mismatch = 0;
  for (int i = 0; i < kMetricInstances; ++i) {
    double a0 = u(rng) * 100, a1 = u(rng) * 100, b0 = u(rng) * 100, b1 = u(rng) * 100;
    if (i % 10 == 0) b0 = a0;  // shared endpoints
    if (a0 > a1) std::swap(a0, a1);
    if (b0 > b1) std::swap(b0, b1);
    e_t = std::max(e_t, std::fabs(temporal_iou({a0, a1}, {b0, b1}) - oracle::temporal_iou(a0, a1, b0, b1)));

    double x[4], y[4];
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    const SpatialBox A{std::min(x[0], x[1]), std::min(y[0], y[1]), std::max(x[0], x[1]), std::max(y[0], y[1])};
    const SpatialBox B{std::min(x[2], x[3]), std::min(y[2], y[3]), std::max(x[2], x[3]), std::max(y[2], y[3])};
    e_s = std::max(e_s, std::fabs(spatial_iou(A, B) - oracle::spatial_iou(A, B)));

    const double gt = (u(rng) - 0.5) * 40.0, pred = gt + (u(rng) - 0.5) * 3.0;
    if (epsilon_accuracy({pred}, {gt}, 0.05) != oracle::epsilon_accuracy(pred, gt, 0.05)) ++eps_mismatch;

    const auto s = oracle::random_string(rng, 12), t = oracle::random_string(rng, 12);
    e_e = std::max(e_e, std::fabs(ocr_similarity({s}, {t}) - oracle::edit_similarity(s, t)));
  }
  const double secs = seconds_since(t0);
  const bool ok = e_t <= kMetricTol && e_s <= kMetricTol && eps_mismatch == 0 && e_e <= kEditTol &&
                  secs < kMetricBudgetSec;
  return {ok, "temporal " + fmt("%.1e", e_t) + ", spatial " + fmt("%.1e", e_s) + ", epsilon mismatches " +
                  std::to_string(eps_mismatch) + ", edit " + fmt("%.1e", e_e) + ", " + fmt("%.2f", secs) + " s"};
}

// ---- 2 ----
Outcome validity_gate() {
  std::mt19937_64 rng(202);
  const SupervisionExample examples[] = {
      {"t", TaskType::kTemporalGrounding, "", TemporalSegment{1, 4}, 0, {}},
      {"s", TaskType::kSpatialGrounding, "", SpatialBox{.1, .1, .5, .5}, 0, {}},
      {"m", TaskType::kMultipleChoice, "", OptionLetter{'B'}, 4, {}},
      {"b", TaskType::kBinaryQA, "", Binary{false}, 0, {}},
      {"n", TaskType::kNumerical, "", Number{1.0}, 0, {}},
      {"o", TaskType::kOCR, "", Text{"no"}, 0, {}},
  };
  std::size_t invalid = 0, violations = 0;
  for (int i = 0; i < kFuzzStrings; ++i) {
    const auto raw = oracle::fuzz_response(rng);
    for (const auto& ex : examples) {
      const auto r = parse_response(raw, ex);
      if (r.outer_valid && r.task_valid) continue;
      ++invalid;
      if (quality_score(r, ex) != 0.0) ++violations;
    }
  }
  return {violations == 0 && invalid > 0,
          std::to_string(invalid) + " invalid (string, task) cases, " + std::to_string(violations) + " nonzero"};
}

// ---- 3 ----
Outcome matching_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SupervisionExample ex{"m", TaskType::kMultipleChoice, "", OptionLetter{'A'}, 4, {}};
  double worst = 0.0;
  std::size_t filtered_draws = 0, pools = 0;
  while (pools < static_cast<std::size_t>(kMatchPools)) {
    const std::size_t K = 1 + rng() % 8;
    std::vector<double> q(K);
    for (auto& v : q) v = u(rng);
    const double tau = u(rng) * 0.5;
    const auto pool = apply_filter(with_scores(build_pool(ex, std::vector<std::string>(K, "<answer>A</answer>")), q), tau);
    const auto eff = pool.effective_qualities();
    double sum = 0.0;
    for (double v : eff) sum += v;
    if (sum == 0.0) continue;  // degenerate pools are rejected upstream
    const auto dist = matching_distribution(pool);
    std::vector<double> freq(K, 0.0);
    for (auto k : sample_matches(dist, kMatchDraws, 1000 + pools)) freq[k] += 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      worst = std::max(worst, std::fabs(freq[k] / static_cast<double>(kMatchDraws) - eff[k] / sum));
      if (eff[k] == 0.0) filtered_draws += static_cast<std::size_t>(freq[k]);
    }
    ++pools;
  }
  const double secs = seconds_since(t0);
  return {worst < kMatchTol && filtered_draws == 0 && secs < kMatchBudgetSec,
          "max deviation " + fmt("%.4f", worst) + ", draws of filtered entries " + std::to_string(filtered_draws) +
              ", " + fmt("%.2f", secs) + " s"};
}

// ---- 4 ----
Outcome reward_exactness() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SupervisionExample ex{"t", TaskType::kTemporalGrounding, "", TemporalSegment{2, 6}, 0, {}};
  double worst = 0.0;
  for (int i = 0; i < kRewardTuples; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), s = a + b + c + d;
    RewardWeights w{a / s, b / s, c / s, 0.0};
    w.delta = 1.0 - w.alpha - w.beta - w.eta;
    if (w.delta < 0.0) w.delta = 0.0, w.eta = 1.0 - w.alpha - w.beta;
    const double s0 = u(rng) * 8, s1 = s0 + u(rng) * 4;
    std::string raw = "<answer><t>" + format_double(s0) + "</t> <t>" + format_double(s1) + "</t></answer>";
    if (rng() % 3 == 0) raw = oracle::fuzz_response(rng);
    const auto resp = parse_response(raw, ex);
    const double disc = u(rng);
    const auto r = composite_reward(disc, resp, ex, w);
    const double outer = resp.outer_valid ? 1.0 : 0.0, task = resp.task_valid ? 1.0 : 0.0;
    const double content = resp.valid() ? oracle::temporal_iou(std::get<TemporalSegment>(*resp.payload).start,
                                                               std::get<TemporalSegment>(*resp.payload).end, 2, 6)
                                        : 0.0;
    const double hand = w.alpha * disc + w.beta * outer + w.eta * task + w.delta * content;
    worst = std::max(worst, std::fabs(r.composite - hand));
  }
  int rejected = 0;
  const RewardWeights bad[] = {{0.4, 0.1, 0.1, 0.5}, {0.5, 0.1, 0.1, 0.4}, {-0.2, 0.4, 0.4, 0.4}, {0.4, 0.1, 0.1, 0.3}};
  const auto resp = parse_response("<answer><t>2</t> <t>6</t></answer>", ex);
  for (const auto& w : bad) {
    try {
      composite_reward(0.5, resp, ex, w);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidWeights) ++rejected;
    }
  }
  return {worst <= kRewardTol && rejected == 4,
          "max error " + fmt("%.1e", worst) + ", rejected " + std::to_string(rejected) + "/4 bad weight sets"};
}

// ---- 5 ----
Outcome discriminator_gradients() {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst[2] = {0.0, 0.0};
  bool zero_ok = true;
  for (int hidden_case = 0; hidden_case < 2; ++hidden_case) {
    for (int i = 0; i < kGradInstances; ++i) {
      const std::size_t dim = 2 + rng() % 10;
      const std::size_t hidden = hidden_case ? 1 + rng() % 6 : 0;
      auto p = hidden ? DiscriminatorParams::with_hidden(dim, hidden, rng()) : DiscriminatorParams::linear(dim);
      auto flat = p.flatten();
      for (auto& v : flat) v = 0.7 * n(rng);
      p.assign(flat);
      FeatureVector t(dim), s(dim);
      for (auto& v : t) v = n(rng);
      for (auto& v : s) v = n(rng);
      const double q = u(rng);
      const auto g = loss_gradient(p, t, s, q);
      double num = 0.0, den = 0.0;
      const double h = 1e-5;
      for (std::size_t k = 0; k < flat.size(); ++k) {
        auto fp = flat, fm = flat;
        fp[k] += h;
        fm[k] -= h;
        auto pp = p, pm = p;
        pp.assign(fp);
        pm.assign(fm);
        const double fd = (pairwise_loss(pp, t, s, q) - pairwise_loss(pm, t, s, q)) / (2 * h);
        num += (g[k] - fd) * (g[k] - fd);
        den += g[k] * g[k] + fd * fd;
      }
      if (den > 0.0) worst[hidden_case] = std::max(worst[hidden_case], std::sqrt(num / den));

      const std::vector<TrainingPair> gated{{t, s, 0.0}};
      if (!(update_step(p, gated, 1.0) == p)) zero_ok = false;
      AdamState st;
      if (!(adam_step(p, gated, 1.0, st) == p)) zero_ok = false;
    }
  }
  return {worst[0] < kGradRelTol && worst[1] < kGradRelTol && zero_ok,
          "linear rel err " + fmt("%.1e", worst[0]) + ", hidden rel err " + fmt("%.1e", worst[1]) +
              ", q=0 update " + (zero_ok ? "zero" : "NONZERO")};
}

// ---- 6 ----
BenchmarkConfig two_option_benchmark() {
  BenchmarkConfig bc;
  bc.n_mcq = 20;
  bc.n_temporal = 0;
  bc.option_count = 2;
  return bc;
}

Outcome policy_update() {
  const auto t0 = std::chrono::steady_clock::now();

  // (a) expected update on one 2-option example with rewards from the real
  // composite reward under a fixed discriminator.
  const auto bench = make_benchmark(two_option_benchmark(), 606);
  const auto& sx = bench.examples[0];
  TrainConfig cfg;
  const FeatureLayout layout{2};
  const auto table = make_answer_table(sx, layout, cfg.metrics);
  auto disc = DiscriminatorParams::linear(layout.dim());
  disc.weights[FeatureLayout::kBaseFeatures + 0] = 1.5;
  disc.weights[FeatureLayout::kBaseFeatures + 1] = -0.5;
  std::vector<double> r;
  for (std::size_t a = 0; a < 2; ++a) {
    r.push_back(composite_reward(sigmoid(score(disc, table.features[a])), table.parsed[a], sx.ex, cfg.weights).composite);
  }
  StudentPolicy student;
  student.logits = {{0.3, -0.2}};
  StudentPolicy ref;
  ref.logits = {{-0.4, 0.1}};
  const auto p = student.probs(0), pref = ref.probs(0);
  const auto kl_g = kl_gradient(p, pref);

  auto exact = oracle::enumerate_group_mean_estimator(p, r, kPgGroup);
  for (std::size_t j = 0; j < 2; ++j) exact[j] -= cfg.gamma * kl_g[j];

  const CategoricalSampler draw(p);
  Rng rng = make_rng(6060);
  std::vector<double> mean(2, 0.0);
  const std::size_t groups = kPgRollouts / kPgGroup;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::size_t> actions;
    std::vector<double> rewards;
    for (std::size_t i = 0; i < kPgGroup; ++i) {
      actions.push_back(draw(rng));
      rewards.push_back(r[actions.back()]);
    }
    const auto est = policy_gradient_estimate(p, actions, rewards, Baseline::kGroupMean);
    for (std::size_t j = 0; j < 2; ++j) mean[j] += (est[j] - cfg.gamma * kl_g[j]) / static_cast<double>(groups);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    num += (mean[j] - exact[j]) * (mean[j] - exact[j]);
    den += exact[j] * exact[j];
  }
  const double rel = std::sqrt(num / den);

  // (b) final KL to the Stage-1 policy across gamma.
  const std::vector<double> gammas{0.0, 0.01, 0.1, 1.0};
  std::vector<double> kl(gammas.size(), 0.0);
  for (int s = 0; s < kKlSeeds; ++s) {
    const auto b = make_benchmark(two_option_benchmark(), 1000 + static_cast<std::uint64_t>(s));
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      TrainConfig c;
      c.gamma = gammas[gi];
      c.seed = static_cast<std::uint64_t>(s);
      const auto art = run_pipeline(b, c);
      double total = 0.0;
      for (std::size_t i = 0; i < b.examples.size(); ++i) total += kl_penalty(art.student, art.reference, i);
      kl[gi] += total / static_cast<double>(b.examples.size()) / kKlSeeds;
    }
  }
  bool monotone = true;
  for (std::size_t i = 1; i < kl.size(); ++i) monotone = monotone && kl[i] <= kl[i - 1];
  const double secs = seconds_since(t0);
  std::string kls;
  for (std::size_t i = 0; i < kl.size(); ++i) kls += (i ? " " : "") + fmt("%.4f", kl[i]);
  return {rel < kPgRelTol && monotone && secs < kPolicyBudgetSec,
          "(a) rel err " + fmt("%.4f", rel) + "; (b) KL over gamma {0,.01,.1,1}: " + kls + ", " +
              fmt("%.1f", secs) + " s"};
}

// ---- 7 ----
Outcome ablation_ordering(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_ablation(cfg, standard_settings(cfg.train.K), seed_range(kAblationSeeds));
  const auto& r = rep.results;
  const double A = r[0].mean, B = r[1].mean, C = r[2].mean, D = r[3].mean;
  const double pval = rep.test ? rep.test->p_value : 1.0;
  const double secs = seconds_since(t0);
  return {D >= C && C >= B && B >= A && D > A && pval < kAblationAlpha && secs < kAblationBudgetSec,
          "A " + fmt("%.4f", A) + ", B " + fmt("%.4f", B) + ", C " + fmt("%.4f", C) + ", D " + fmt("%.4f", D) +
              ", p(A vs D) " + fmt("%.4f", pval) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- 8 ----
Outcome tau_sensitivity(const RunConfig& cfg) {
  const auto rep = run_sensitivity(cfg, {}, {0.0, 0.2, 0.3, 0.5}, seed_range(kAblationSeeds));
  const auto& t = rep.tau_rows;
  bool monotone = true;
  for (std::size_t i = 1; i < t.size(); ++i) monotone = monotone && *t[i].retention <= *t[i - 1].retention;
  const double mid = std::max(t[1].mean_acc, t[2].mean_acc);
  const bool inverted_u = mid >= t[0].mean_acc && mid >= t[3].mean_acc;
  std::string detail;
  for (const auto& row : t) {
    detail += "tau " + fmt("%.1f", row.value) + ": ret " + fmt("%.3f", *row.retention) + " acc " +
              fmt("%.4f", row.mean_acc) + "; ";
  }
  return {monotone && *t[0].retention == 1.0 && inverted_u, detail.substr(0, detail.size() - 2)};
}

// ---- 9 ----
Outcome passk(const RunConfig& cfg) {
  BenchmarkConfig bc;
  bc.n_mcq = 40;
  bc.n_temporal = 0;
  const auto bench = make_benchmark(bc, 909);
  const auto uni = pass_at_k_eval(StudentPolicy::uniform(bench), bench, {1, 4}, 1.0, 1.0, 9, 250);
  const double oracle4 = 1.0 - std::pow(0.75, 4);
  const bool closed_form = std::fabs(uni[0].rate - 0.25) <= kPassTol && std::fabs(uni[1].rate - oracle4) <= kPassTol;

  auto c = cfg;
  c.harness.passk_k = {1, 2, 4, 8, 16, 32, 64, 128};
  const auto curves = run_passk(c, seed_range(kAblationSeeds));
  bool monotone = true;
  for (const auto& cv : curves) {
    for (std::size_t i = 1; i < cv.points.size(); ++i) monotone = monotone && cv.points[i].rate >= cv.points[i - 1].rate;
  }
  const auto& A = curves[1].points;
  const auto& D = curves[2].points;
  const double gap128 = 100.0 * std::fabs(D.back().rate - A.back().rate);
  return {closed_form && monotone && D.front().rate > A.front().rate && gap128 < kPassGapPoints,
          "uniform pass@1 " + fmt("%.4f", uni[0].rate) + ", pass@4 " + fmt("%.4f", uni[1].rate) + " (oracle " +
              fmt("%.4f", oracle4) + "); pass@1 A " + fmt("%.4f", A.front().rate) + " D " + fmt("%.4f", D.front().rate) +
              "; pass@128 gap " + fmt("%.2f", gap128) + " points"};
}

// ---- 10 ----
Outcome variance_recovery() {
  VarianceCorpusConfig vc;
  vc.questions = 200;
  vc.samples_per_question = 4;
  vc.violation_rate = 0.01;
  vc.sampling_sigma = 0.10;
  const auto corpus = make_variance_corpus(vc, 0);
  const auto r = analyze_variance(corpus.examples, corpus.lines);
  const double viol = r.overall.violation_rate;
  const double sig = r.overall.sampling_sigma.value_or(0.0);
  const double ev = std::fabs(viol - 0.01) / 0.01, es = std::fabs(sig - 0.10) / 0.10;
  return {ev <= kVarianceRelTol && es <= kVarianceRelTol,
          "violation rate " + fmt("%.4f", viol) + " (rel err " + fmt("%.3f", ev) + "), sampling sigma " +
              fmt("%.4f", sig) + " (rel err " + fmt("%.3f", es) + ")"};
}

// ---- 11 ----
Outcome determinism(const RunConfig& cfg) {
  auto once = [&] {
    std::string out;
    const auto bench = make_benchmark(cfg.benchmark, 1111);
    auto tc = cfg.train;
    tc.seed = 11;
    out += metrics_csv(run_pipeline(bench, tc).metrics);
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    out += render_report(to_report(run_ablation(cfg, standard_settings(cfg.train.K), seeds)), "csv");
    out += render_report(to_report(run_sensitivity(cfg, {2, 4}, {0.0, 0.3}, seeds)), "json");
    out += render_report(to_report(run_passk(cfg, {1})), "csv");
    const auto corpus = make_variance_corpus(cfg.variance, 5);
    out += render_report(to_report(analyze_variance(corpus.examples, corpus.lines)), "json");
    return out;
  };
  const auto a = once();
  const auto b = once();
  return {a == b && !a.empty(), std::to_string(a.size()) + " bytes compared, " + (a == b ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  const RunConfig cfg;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "metric oracles", metric_oracles},
      {2, "validity gate", validity_gate},
      {3, "matching fidelity", matching_fidelity},
      {4, "composite reward exactness", reward_exactness},
      {5, "discriminator gradients", discriminator_gradients},
      {6, "policy update and KL anchoring", policy_update},
      {7, "ablation ordering", [&] { return ablation_ordering(cfg); }},
      {8, "tau sensitivity", [&] { return tau_sensitivity(cfg); }},
      {9, "pass@k", [&] { return passk(cfg); }},
      {10, "variance recovery", variance_recovery},
      {11, "determinism", [&] { return determinism(cfg); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
