#include "rmsd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "rmsd/error.hpp"

namespace rmsd {

namespace {

enum Stream : std::uint64_t {
  kExampleStream = 1,
  kTargetStream = 2,
  kOpenStream = 3,
  kCorpusStream = 4,
  kViolationStream = 5,
};

std::string make_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%04d", prefix, i);
  return buf;
}

double sample_beta(double mean, double sd, Rng& rng) {
  const double k = mean * (1.0 - mean) / (sd * sd) - 1.0;
  require(k > 0.0, "benchmark: cross_sigma too large for the requested mean quality");
  std::gamma_distribution<double> ga(mean * k, 1.0);
  std::gamma_distribution<double> gb((1.0 - mean) * k, 1.0);
  const double a = ga(rng);
  const double b = gb(rng);
  return a / (a + b);
}

std::vector<AnswerPayload> temporal_space(int grid) {
  std::vector<AnswerPayload> space;
  const double g = static_cast<double>(grid);
  for (int i = 0; i < grid; ++i) {
    for (int j = i; j < grid; ++j) {
      space.emplace_back(TemporalSegment{i / g, (j + 1) / g});
    }
  }
  return space;
}

double expected(std::span<const double> p, std::span<const double> v) {
  return std::inner_product(p.begin(), p.end(), v.begin(), 0.0);
}

}  // namespace

std::vector<double> nucleus(std::span<const double> logits, double temperature, double top_p) {
  require(temperature > 0.0, "nucleus: temperature must be positive");
  require(top_p > 0.0 && top_p <= 1.0, "nucleus: top_p must lie in (0,1]");
  const std::size_t n = logits.size();
  std::vector<double> p(n);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp((logits[i] - mx) / temperature);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  if (top_p >= 1.0) return p;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::vector<double> out(n, 0.0);
  double cum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    out[order[r]] = p[order[r]];
    cum += p[order[r]];
    if (cum >= top_p) break;
  }
  for (auto& v : out) v /= cum;
  return out;
}

std::vector<double> teacher_distribution(std::span<const double> affinity, double concentration,
                                         double temperature, double top_p) {
  std::vector<double> logits(affinity.size());
  for (std::size_t a = 0; a < affinity.size(); ++a) logits[a] = concentration * affinity[a];
  return nucleus(logits, temperature, top_p);
}

double solve_concentration(std::span<const double> affinity, double target, double temperature,
                           double top_p) {
  auto quality = [&](double c) {
    return expected(teacher_distribution(affinity, c, temperature, top_p), affinity);
  };
  if (quality(0.0) >= target) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (quality(hi) < target && hi < 1e4) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (quality(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

std::vector<double> answer_affinity(const SimExample& sx, const MetricConfig& metrics) {
  const auto& ex = sx.ex;
  if (!is_closed_ended(ex.task)) return sx.latent_correct;
  std::vector<double> aff;
  aff.reserve(ex.answer_space.size());
  for (const auto& a : ex.answer_space) aff.push_back(task_metric(ex.task, a, *ex.ground_truth, metrics));
  return aff;
}

std::vector<double> answer_success(const SimExample& sx, const MetricConfig& metrics) {
  auto s = answer_affinity(sx, metrics);
  if (sx.ex.task == TaskType::kTemporalGrounding || sx.ex.task == TaskType::kSpatialGrounding) {
    for (auto& v : s) v = v >= metrics.success_iou ? 1.0 : 0.0;
  }
  return s;
}

SimBenchmark make_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed) {
  require(cfg.option_count >= 2 && cfg.option_count <= 26, "benchmark: option_count out of range");
  require(cfg.temporal_grid >= 2, "benchmark: temporal_grid must be >= 2");
  require(cfg.temporal_min_cells >= 1 && cfg.temporal_min_cells <= cfg.temporal_grid,
          "benchmark: temporal_min_cells out of range");
  require(cfg.open_variants >= 2, "benchmark: open_variants must be >= 2");
  SimBenchmark bench;
  Rng rng = make_rng(derive_seed(seed, {kExampleStream}));

  for (int i = 0; i < cfg.n_mcq; ++i) {
    SimExample sx;
    sx.ex.id = make_id("mcq", i);
    sx.ex.task = TaskType::kMultipleChoice;
    sx.ex.question = "synthetic multiple-choice question";
    sx.ex.option_count = cfg.option_count;
    for (int o = 0; o < cfg.option_count; ++o) {
      sx.ex.answer_space.emplace_back(OptionLetter{static_cast<char>('A' + o)});
    }
    const auto gt = std::uniform_int_distribution<int>(0, cfg.option_count - 1)(rng);
    sx.ex.ground_truth = sx.ex.answer_space[static_cast<std::size_t>(gt)];
    bench.examples.push_back(std::move(sx));
  }
  const auto tspace = temporal_space(cfg.temporal_grid);
  for (int i = 0; i < cfg.n_temporal; ++i) {
    SimExample sx;
    sx.ex.id = make_id("tg", i);
    sx.ex.task = TaskType::kTemporalGrounding;
    sx.ex.question = "synthetic temporal grounding question";
    sx.ex.answer_space = tspace;
    std::vector<std::size_t> eligible;
    const double min_len = cfg.temporal_min_cells / static_cast<double>(cfg.temporal_grid) - 1e-12;
    for (std::size_t a = 0; a < tspace.size(); ++a) {
      const auto& s = std::get<TemporalSegment>(tspace[a]);
      if (s.end - s.start >= min_len) eligible.push_back(a);
    }
    const auto pick = std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng);
    sx.ex.ground_truth = tspace[eligible[pick]];
    bench.examples.push_back(std::move(sx));
  }
  Rng open_rng = make_rng(derive_seed(seed, {kOpenStream}));
  for (int i = 0; i < cfg.n_open; ++i) {
    SimExample sx;
    sx.ex.id = make_id("oe", i);
    sx.ex.task = TaskType::kOpenEnded;
    sx.ex.question = "synthetic open-ended description request";
    const auto n = static_cast<std::size_t>(cfg.open_variants);
    for (std::size_t v = 0; v < n; ++v) {
      sx.ex.answer_space.emplace_back(Text{"description variant " + std::to_string(v)});
    }
    sx.latent_correct.assign(n, 0.0);
    for (auto& c : sx.latent_correct) c = uniform01(open_rng) < cfg.open_correct_fraction ? 1.0 : 0.0;
    // At least one correct and one wrong variant.
    sx.latent_correct[0] = 1.0;
    sx.latent_correct[n - 1] = 0.0;
    std::shuffle(sx.latent_correct.begin(), sx.latent_correct.end(), open_rng);
    sx.lexical_proxy.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      const double u = uniform01(open_rng);
      sx.lexical_proxy[v] = sx.latent_correct[v] > 0.5 ? (u < cfg.paraphrase_rate ? 0.0 : 1.0)
                                                       : (u < cfg.copy_rate ? 1.0 : 0.0);
    }
    bench.examples.push_back(std::move(sx));
  }

  auto& t = bench.teacher;
  t.temperature = cfg.temperature;
  t.top_p = cfg.top_p;
  Rng target_rng = make_rng(derive_seed(seed, {kTargetStream}));
  for (const auto& sx : bench.examples) {
    const auto aff = answer_affinity(sx);
    if (cfg.perfect_teacher) {
      std::vector<double> p(aff.size(), 0.0);
      p[static_cast<std::size_t>(std::max_element(aff.begin(), aff.end()) - aff.begin())] = 1.0;
      t.probs.push_back(std::move(p));
      t.concentration.push_back(INFINITY);
    } else {
      const bool temporal = sx.ex.task == TaskType::kTemporalGrounding;
      const double mean = temporal && cfg.temporal_mean_quality >= 0.0 ? cfg.temporal_mean_quality
                                                                        : cfg.mean_quality;
      const double sigma = temporal && cfg.temporal_cross_sigma >= 0.0 ? cfg.temporal_cross_sigma
                                                                        : cfg.cross_sigma;
      const double target = sample_beta(mean, sigma, target_rng);
      const double c = solve_concentration(aff, target, cfg.temperature, cfg.top_p);
      t.probs.push_back(teacher_distribution(aff, c, cfg.temperature, cfg.top_p));
      t.concentration.push_back(c);
    }
    t.format_violation_rate.push_back(sx.ex.task == TaskType::kTemporalGrounding
                                          ? cfg.temporal_violation_rate
                                          : cfg.violation_rate);
  }
  for (const auto& sx : bench.examples) validate_example(sx.ex);
  return bench;
}

std::string corrupt_envelope(const std::string& raw, Rng& rng) {
  const auto open = raw.find("<answer>");
  const auto close = raw.find("</answer>");
  require(open != std::string::npos && close != std::string::npos,
          "corrupt_envelope: response has no answer span");
  const std::string content = raw.substr(open + 8, close - open - 8);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return "<answer>" + content;                       // unclosed
    case 1: return content;                                    // no tags
    case 2: return raw + raw;                                  // two answer spans
    default: return "<think>" + raw;                           // unclosed thinking span
  }
}

std::vector<std::string> sample_teacher_pool(const SyntheticTeacher& teacher,
                                             const SimBenchmark& bench, std::size_t index,
                                             std::size_t k, std::uint64_t seed) {
  require(k >= 1, "sample_teacher_pool: k must be >= 1");
  require(index < bench.examples.size() && index < teacher.probs.size(),
          "sample_teacher_pool: example index out of range");
  const auto& ex = bench.examples[index].ex;
  const CategoricalSampler draw(teacher.probs[index]);
  const double rate = teacher.format_violation_rate[index];
  std::vector<std::string> raws;
  raws.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Rng rng = make_rng(derive_seed(seed, {j}));
    const bool violate = uniform01(rng) < rate;
    auto raw = render_response(ex.answer_space[draw(rng)]);
    if (violate) raw = corrupt_envelope(raw, rng);
    raws.push_back(std::move(raw));
  }
  return raws;
}

VarianceCorpus make_variance_corpus(const VarianceCorpusConfig& cfg, std::uint64_t seed) {
  require(cfg.questions >= 1 && cfg.samples_per_question >= 1, "variance corpus: empty shape");
  require(cfg.violation_rate >= 0.0 && cfg.violation_rate <= 1.0,
          "variance corpus: violation_rate must lie in [0,1]");
  VarianceCorpus out;
  Rng rng = make_rng(derive_seed(seed, {kCorpusStream}));
  std::normal_distribution<double> z(0.0, 1.0);
  const double half_width = std::sqrt(3.0) * cfg.cross_sigma;
  std::uniform_real_distribution<double> mu_dist(cfg.mean_quality - half_width,
                                                 cfg.mean_quality + half_width);
  std::uniform_real_distribution<double> start_dist(10.0, 50.0);
  std::uniform_real_distribution<double> len_dist(10.0, 40.0);
  for (int qi = 0; qi < cfg.questions; ++qi) {
    SupervisionExample ex;
    ex.id = make_id("q", qi);
    ex.task = TaskType::kTemporalGrounding;
    ex.question = "when does the event happen?";
    const double a = std::round(start_dist(rng) * 100.0) / 100.0;
    const double len = std::round(len_dist(rng) * 100.0) / 100.0;
    ex.ground_truth = TemporalSegment{a, a + len};
    const double mu = mu_dist(rng);
    for (int s = 0; s < cfg.samples_per_question; ++s) {
      const double q = std::clamp(mu + cfg.sampling_sigma * z(rng), 0.0, 1.0);
      double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      TemporalSegment pred;
      if (q > 0.0) {
        // Equal-length shift by d gives IoU (len - d) / (len + d).
        const double d = len * (1.0 - q) / (1.0 + q);
        if (a - d < 0.0) sign = 1.0;
        pred = {a + sign * d, a + len + sign * d};
      } else {
        pred = {a + len + 1.0, a + 2.0 * len + 1.0};
      }
      out.lines.push_back({ex.id, "teacher", s, render_response(pred)});
    }
    out.examples.push_back(std::move(ex));
  }
  const auto total = out.lines.size();
  const auto n_bad = static_cast<std::size_t>(std::llround(cfg.violation_rate * static_cast<double>(total)));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  Rng vrng = make_rng(derive_seed(seed, {kViolationStream}));
  std::shuffle(idx.begin(), idx.end(), vrng);
  for (std::size_t i = 0; i < n_bad; ++i) {
    auto& line = out.lines[idx[i]];
    line.text = corrupt_envelope(line.text, vrng);
  }
  return out;
}

}  // namespace rmsd
