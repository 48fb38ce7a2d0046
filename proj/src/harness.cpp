#include "rmsd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rmsd/error.hpp"
#include "rmsd/random.hpp"

namespace rmsd {

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

constexpr double kQuantiles[] = {0.1, 0.25, 0.5, 0.75, 0.9};

// Per-question valid qualities for one group of questions.
struct GroupData {
  std::string name;
  std::size_t questions = 0;
  std::size_t responses = 0;
  std::size_t violations = 0;
  std::vector<std::vector<double>> per_question;  // valid qualities
};

QualityStats summarize(const GroupData& g) {
  QualityStats s;
  s.group = g.name;
  s.questions = g.questions;
  s.responses = g.responses;
  s.valid = g.responses - g.violations;
  s.violation_rate =
      g.responses > 0 ? static_cast<double>(g.violations) / static_cast<double>(g.responses) : 0.0;

  std::vector<double> all;
  std::vector<double> means;
  double ss_within = 0.0, df_within = 0.0, inv_n = 0.0;
  std::vector<double> sds;
  for (const auto& q : g.per_question) {
    if (q.empty()) continue;
    all.insert(all.end(), q.begin(), q.end());
    means.push_back(mean_of(q));
    inv_n += 1.0 / static_cast<double>(q.size());
    if (q.size() >= 2) {
      const double sd = sample_std(q);
      sds.push_back(sd);
      ss_within += sd * sd * static_cast<double>(q.size() - 1);
      df_within += static_cast<double>(q.size() - 1);
    }
  }
  if (all.empty()) return s;
  std::sort(all.begin(), all.end());
  s.mean = mean_of(all);
  s.min = all.front();
  s.max = all.back();
  for (double p : kQuantiles) s.quantiles.emplace_back(p, quantile_sorted(all, p));
  if (df_within > 0.0) {
    s.sampling_sigma = std::sqrt(ss_within / df_within);
    s.sampling_sigma_mean_sd = mean_of(sds);
  }
  if (means.size() >= 2) {
    const double sd = sample_std(means);
    s.cross_sigma = sd;
    if (s.sampling_sigma) {
      const double pooled = *s.sampling_sigma * *s.sampling_sigma;
      const double share = pooled * inv_n / static_cast<double>(means.size());
      s.between_sigma = std::sqrt(std::max(0.0, sd * sd - share));
    }
  }
  return s;
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), "quantile_sorted: empty data");
  require(p >= 0.0 && p <= 1.0, "quantile_sorted: p must lie in [0,1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

VarianceReport analyze_variance(const std::vector<SupervisionExample>& examples,
                                const std::vector<CorpusLine>& corpus,
                                const MetricConfig& metrics) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < examples.size(); ++i) index[examples[i].id] = i;

  // Per example: valid qualities, response count, violations.
  std::vector<std::vector<double>> valid_q(examples.size());
  std::vector<std::size_t> n_resp(examples.size(), 0), n_bad(examples.size(), 0);
  for (const auto& line : corpus) {
    if (line.source != "teacher") continue;
    const auto it = index.find(line.example_id);
    if (it == index.end()) {
      fail(ErrorCode::kParse, "analyze_variance: unknown example id '" + line.example_id + "'");
    }
    const auto& ex = examples[it->second];
    const auto parsed = parse_response(line.text, ex);
    ++n_resp[it->second];
    if (!parsed.valid()) {
      ++n_bad[it->second];
      continue;
    }
    if (is_closed_ended(ex.task) && ex.ground_truth) {
      valid_q[it->second].push_back(quality_score(parsed, ex, metrics));
    }
  }

  VarianceReport report;
  GroupData overall;
  overall.name = "overall";
  std::size_t thin = 0;
  for (TaskType t : kAllTaskTypes) {
    GroupData g;
    g.name = std::string(task_name(t));
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].task != t || n_resp[i] == 0) continue;
      ++g.questions;
      g.responses += n_resp[i];
      g.violations += n_bad[i];
      g.per_question.push_back(valid_q[i]);
      if (is_closed_ended(t) && valid_q[i].size() < 2) ++thin;
    }
    if (g.questions == 0) continue;
    overall.questions += g.questions;
    overall.responses += g.responses;
    overall.violations += g.violations;
    overall.per_question.insert(overall.per_question.end(), g.per_question.begin(),
                                g.per_question.end());
    report.per_task.push_back(summarize(g));
  }
  report.overall = summarize(overall);
  if (thin > 0) {
    report.diagnostics.push_back(std::to_string(thin) +
                                 " closed-ended question(s) have fewer than 2 valid samples and "
                                 "do not enter within-question statistics");
  }
  if (!report.overall.sampling_sigma) {
    report.diagnostics.push_back("within-question statistics unavailable: no question has 2 "
                                 "valid samples");
  }
  return report;
}

// ---- ablation ----

std::vector<AblationSetting> standard_settings(std::size_t K) {
  return {{"A", 1, false, false}, {"B", K, false, false}, {"C", K, true, false}, {"D", K, true, true}};
}

namespace {

TrainConfig apply_setting(TrainConfig c, const AblationSetting& s, std::uint64_t seed) {
  c.K = s.K;
  c.filter = s.filter;
  c.quality_weighting = s.weight;
  c.seed = seed;
  return c;
}

SimBenchmark bench_for(const RunConfig& cfg, std::uint64_t seed) {
  return make_benchmark(cfg.benchmark, cfg.harness.benchmark_seed_base + seed);
}

}  // namespace

double permutation_test(const std::vector<double>& diffs, int permutations, std::uint64_t seed) {
  require(!diffs.empty(), "permutation_test: no differences");
  require(permutations >= 1, "permutation_test: permutations must be >= 1");
  const double n = static_cast<double>(diffs.size());
  const double observed = std::abs(std::accumulate(diffs.begin(), diffs.end(), 0.0) / n);
  // Guards against rounding making the identity permutation look smaller.
  const double tol = 1e-12 * std::max(1.0, observed);
  Rng rng = make_rng(seed);
  int count = 0;
  for (int p = 0; p < permutations; ++p) {
    double s = 0.0;
    for (double d : diffs) s += (rng() >> 63) ? d : -d;
    if (std::abs(s / n) >= observed - tol) ++count;
  }
  return (count + 1.0) / (permutations + 1.0);
}

AblationReport run_ablation(const RunConfig& cfg, const std::vector<AblationSetting>& settings,
                            const std::vector<std::uint64_t>& seeds) {
  require(!settings.empty(), "run_ablation: no settings");
  require(!seeds.empty(), "run_ablation: no seeds");
  AblationReport report;
  for (const auto& s : settings) {
    AblationResult r;
    r.setting = s;
    r.seeds = seeds;
    report.results.push_back(std::move(r));
  }
  for (auto seed : seeds) {
    const auto bench = bench_for(cfg, seed);
    for (auto& r : report.results) {
      r.accuracy.push_back(run_pipeline(bench, apply_setting(cfg.train, r.setting, seed)).final_accuracy);
    }
  }
  for (auto& r : report.results) {
    r.mean = mean_of(r.accuracy);
    r.std = sample_std(r.accuracy);
  }
  auto find = [&](const char* label) -> const AblationResult* {
    for (const auto& r : report.results) {
      if (r.setting.label == label) return &r;
    }
    return nullptr;
  };
  const auto* a = find("A");
  const auto* d = find("D");
  if (a && d && seeds.size() >= 2) {
    std::vector<double> diffs;
    for (std::size_t i = 0; i < seeds.size(); ++i) diffs.push_back(d->accuracy[i] - a->accuracy[i]);
    PairedTest t;
    t.first = "A";
    t.second = "D";
    t.mean_diff = mean_of(diffs);
    t.permutations = cfg.harness.permutations;
    t.p_value = permutation_test(diffs, t.permutations, derive_seed(seeds.front(), {0x7e57}));
    report.test = t;
  }
  return report;
}

// ---- sensitivity ----

double pooled_retention(const std::vector<TeacherPool>& pools, double tau) {
  std::size_t total = 0, kept = 0;
  for (const auto& p : pools) {
    if (!p.scored()) continue;
    for (double q : *p.qualities) {
      ++total;
      kept += q >= tau ? 1 : 0;
    }
  }
  return total > 0 ? static_cast<double>(kept) / static_cast<double>(total) : 1.0;
}

SensitivityReport run_sensitivity(const RunConfig& cfg, const std::vector<std::size_t>& k_grid,
                                  const std::vector<double>& tau_grid,
                                  const std::vector<std::uint64_t>& seeds) {
  require(!k_grid.empty() || !tau_grid.empty(), "run_sensitivity: both grids are empty");
  require(!seeds.empty(), "run_sensitivity: no seeds");
  const std::size_t nk = k_grid.size(), nt = tau_grid.size();
  std::vector<std::vector<double>> k_acc(nk), t_acc(nt), t_ret(nt);
  std::vector<double> k_skip(nk, 0.0), t_skip(nt, 0.0);
  for (auto seed : seeds) {
    const auto bench = bench_for(cfg, seed);
    for (std::size_t i = 0; i < nk; ++i) {
      auto c = cfg.train;
      c.K = k_grid[i];
      c.filter = c.quality_weighting = true;
      c.seed = seed;
      const auto art = run_pipeline(bench, c);
      k_acc[i].push_back(art.final_accuracy);
      k_skip[i] += static_cast<double>(art.rl_skipped);
    }
    for (std::size_t i = 0; i < nt; ++i) {
      auto c = cfg.train;
      c.tau = tau_grid[i];
      c.filter = c.quality_weighting = true;
      c.seed = seed;
      const auto art = run_pipeline(bench, c);
      t_acc[i].push_back(art.final_accuracy);
      t_ret[i].push_back(pooled_retention(art.pools, tau_grid[i]));
      t_skip[i] += static_cast<double>(art.rl_skipped);
    }
  }
  const double ns = static_cast<double>(seeds.size());
  SensitivityReport r;
  for (std::size_t i = 0; i < nk; ++i) {
    r.k_rows.push_back({"K", static_cast<double>(k_grid[i]), mean_of(k_acc[i]), sample_std(k_acc[i]),
                        std::nullopt, k_skip[i] / ns});
  }
  for (std::size_t i = 0; i < nt; ++i) {
    r.tau_rows.push_back({"tau", tau_grid[i], mean_of(t_acc[i]), sample_std(t_acc[i]),
                          mean_of(t_ret[i]), t_skip[i] / ns});
  }
  return r;
}

// ---- task-adaptive ----

AdaptiveReport run_task_adaptive_check(const RunConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds) {
  require(!seeds.empty(), "run_task_adaptive_check: no seeds");
  if (cfg.benchmark.n_open <= 0 || cfg.benchmark.n_mcq + cfg.benchmark.n_temporal <= 0) {
    fail(ErrorCode::kConfig, "adaptive check needs both closed- and open-ended examples");
  }
  // Examples are independent (per-example student rows and discriminators),
  // so one run covers both families: scored everywhere, then uniform everywhere.
  std::vector<double> closed_gt, closed_uni, open_proxy, open_uni;
  for (auto seed : seeds) {
    const auto bench = bench_for(cfg, seed);
    auto scored = cfg.train;
    scored.seed = seed;
    scored.closed_scoring = ScoringStrategy::kGroundTruth;
    scored.open_scoring = ScoringStrategy::kGroundTruth;
    auto uniform = scored;
    uniform.closed_scoring = ScoringStrategy::kUniform;
    uniform.open_scoring = ScoringStrategy::kUniform;
    const auto a = run_pipeline(bench, scored);
    const auto b = run_pipeline(bench, uniform);
    const auto& m = cfg.train.metrics;
    closed_gt.push_back(expected_accuracy(a.student, bench, TaskFamily::kClosedEnded, m));
    open_proxy.push_back(expected_accuracy(a.student, bench, TaskFamily::kOpenEnded, m));
    closed_uni.push_back(expected_accuracy(b.student, bench, TaskFamily::kClosedEnded, m));
    open_uni.push_back(expected_accuracy(b.student, bench, TaskFamily::kOpenEnded, m));
  }
  AdaptiveReport r;
  auto cell = [](TaskFamily f, ScoringStrategy s, const std::vector<double>& v) {
    return AdaptiveCell{f, s, mean_of(v), sample_std(v)};
  };
  r.cells = {cell(TaskFamily::kClosedEnded, ScoringStrategy::kGroundTruth, closed_gt),
             cell(TaskFamily::kClosedEnded, ScoringStrategy::kUniform, closed_uni),
             cell(TaskFamily::kOpenEnded, ScoringStrategy::kGroundTruth, open_proxy),
             cell(TaskFamily::kOpenEnded, ScoringStrategy::kUniform, open_uni)};
  r.closed_prefers_scoring = r.cells[0].mean_acc >= r.cells[1].mean_acc;
  r.open_prefers_uniform = r.cells[3].mean_acc >= r.cells[2].mean_acc;
  return r;
}

// ---- pass@k ----

std::vector<PassKCurve> run_passk(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  require(!seeds.empty(), "run_passk: no seeds");
  const auto& h = cfg.harness;
  const auto settings = standard_settings(cfg.train.K);
  std::vector<PassKCurve> curves{{"uniform", {}}, {"A", {}}, {"D", {}}};
  for (auto& c : curves) {
    for (auto k : h.passk_k) c.points.push_back({k, 0.0});
  }
  for (auto seed : seeds) {
    const auto bench = bench_for(cfg, seed);
    const auto eval_seed = derive_seed(seed, {0x9a55});
    auto add = [&](PassKCurve& curve, const StudentPolicy& s) {
      const auto pts = pass_at_k_eval(s, bench, h.passk_k, h.passk_temperature, h.passk_top_p,
                                      eval_seed, h.passk_queries);
      for (std::size_t i = 0; i < pts.size(); ++i) curve.points[i].rate += pts[i].rate;
    };
    add(curves[0], StudentPolicy::uniform(bench));
    add(curves[1], run_pipeline(bench, apply_setting(cfg.train, settings[0], seed)).student);
    add(curves[2], run_pipeline(bench, apply_setting(cfg.train, settings[3], seed)).student);
  }
  for (auto& c : curves) {
    for (auto& p : c.points) p.rate /= static_cast<double>(seeds.size());
  }
  return curves;
}

// ---- reports ----

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const char* strategy_name(TaskFamily f, ScoringStrategy s) {
  if (s == ScoringStrategy::kUniform) return "uniform";
  return f == TaskFamily::kClosedEnded ? "ground_truth" : "proxy";
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) return format_double(v.get<double>());
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

Report to_report(const VarianceReport& r) {
  Report rep;
  rep.kind = "variance";
  rep.columns = {"group",        "questions",     "responses",      "valid",
                 "violation_rate", "mean",        "min",            "max",
                 "cross_sigma",  "between_sigma", "sampling_sigma", "sampling_sigma_mean_sd",
                 "q10",          "q25",           "q50",            "q75",
                 "q90"};
  rep.key_column = "group";
  auto row = [](const QualityStats& s) {
    std::vector<json> v{s.group,           s.questions,          s.responses,        s.valid,
                        s.violation_rate,  opt(s.mean),          opt(s.min),         opt(s.max),
                        opt(s.cross_sigma), opt(s.between_sigma), opt(s.sampling_sigma),
                        opt(s.sampling_sigma_mean_sd)};
    for (std::size_t i = 0; i < std::size(kQuantiles); ++i) {
      v.push_back(i < s.quantiles.size() ? json(s.quantiles[i].second) : json(nullptr));
    }
    return v;
  };
  for (const auto& s : r.per_task) rep.rows.push_back(row(s));
  if (!r.per_task.empty()) rep.rows.push_back(row(r.overall));
  rep.meta["diagnostics"] = r.diagnostics;
  return rep;
}

Report to_report(const AblationReport& r) {
  Report rep;
  rep.kind = "ablation";
  rep.columns = {"setting", "K", "filter", "weight", "mean_acc", "std_acc"};
  for (const auto& x : r.results) {
    rep.rows.push_back({x.setting.label, x.setting.K, x.setting.filter, x.setting.weight, x.mean, x.std});
  }
  if (!r.results.empty()) rep.meta["seeds"] = r.results.front().seeds.size();
  if (r.test) {
    rep.meta["test"] = r.test->first + "_vs_" + r.test->second;
    rep.meta["mean_diff"] = r.test->mean_diff;
    rep.meta["p_value"] = r.test->p_value;
    rep.meta["permutations"] = r.test->permutations;
  }
  return rep;
}

Report to_report(const SensitivityReport& r) {
  Report rep;
  rep.kind = "sensitivity";
  rep.columns = {"param", "value", "mean_acc", "std_acc", "retention", "mean_skipped"};
  for (const auto* rows : {&r.k_rows, &r.tau_rows}) {
    for (const auto& x : *rows) {
      rep.rows.push_back({x.param, x.value, x.mean_acc, x.std_acc, opt(x.retention), x.mean_skipped});
    }
  }
  return rep;
}

Report to_report(const AdaptiveReport& r) {
  Report rep;
  rep.kind = "adaptive";
  rep.columns = {"family", "strategy", "mean_acc", "std_acc"};
  for (const auto& c : r.cells) {
    rep.rows.push_back({c.family == TaskFamily::kClosedEnded ? "closed" : "open",
                        strategy_name(c.family, c.strategy), c.mean_acc, c.std_acc});
  }
  rep.meta["closed_prefers_scoring"] = r.closed_prefers_scoring;
  rep.meta["open_prefers_uniform"] = r.open_prefers_uniform;
  return rep;
}

Report to_report(const std::vector<PassKCurve>& curves) {
  Report rep;
  rep.kind = "passk";
  rep.columns = {"student", "k", "pass_rate"};
  for (const auto& c : curves) {
    for (const auto& p : c.points) rep.rows.push_back({c.label, p.k, p.rate});
  }
  return rep;
}

Report to_report(const std::vector<MetricsRow>& rows) {
  Report rep;
  rep.kind = "metrics";
  rep.columns = {"step", "stage", "mean_reward", "disc_loss", "kl", "accuracy"};
  for (const auto& m : rows) {
    rep.rows.push_back({m.step, m.stage, opt(m.mean_reward), opt(m.disc_loss), opt(m.kl), m.accuracy});
  }
  return rep;
}

std::string render_report(const Report& report, const std::string& format) {
  if (report.rows.empty()) fail(ErrorCode::kEmptyReport, "report '" + report.kind + "' has no rows");
  const std::string schema = report.kind + "/" + std::to_string(report.version);
  if (format == "csv") {
    std::string out = "#schema," + schema + "\n";
    for (const auto& [k, v] : report.meta.items()) {
      if (v.is_array()) {
        for (const auto& x : v) out += "#" + k + "," + csv_cell(x) + "\n";
      } else {
        out += "#" + k + "," + csv_cell(v) + "\n";
      }
    }
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
      out += (i ? "," : "") + report.columns[i];
    }
    out += "\n";
    for (const auto& row : report.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
      out += "\n";
    }
    return out;
  }
  if (format == "json") {
    using ojson = nlohmann::ordered_json;
    auto conv = [](const json& v) { return ojson::parse(v.dump()); };
    ojson j;
    j["schema"] = schema;
    j["meta"] = conv(report.meta);
    auto object_of = [&](const std::vector<json>& row, const std::string* skip) {
      ojson o = ojson::object();
      for (std::size_t i = 0; i < row.size() && i < report.columns.size(); ++i) {
        if (skip && report.columns[i] == *skip) continue;
        o[report.columns[i]] = conv(row[i]);
      }
      return o;
    };
    if (report.key_column) {
      const auto it = std::find(report.columns.begin(), report.columns.end(), *report.key_column);
      require(it != report.columns.end(), "render_report: key column not among columns");
      const auto key = static_cast<std::size_t>(it - report.columns.begin());
      ojson keyed = ojson::object();
      for (const auto& row : report.rows) {
        keyed[row[key].get<std::string>()] = object_of(row, &*report.key_column);
      }
      j["results"] = std::move(keyed);
    } else {
      ojson rows = ojson::array();
      for (const auto& row : report.rows) rows.push_back(object_of(row, nullptr));
      j["results"] = std::move(rows);
    }
    return j.dump(2) + "\n";
  }
  fail(ErrorCode::kConfig, "unknown report format '" + format + "' (expected csv or json)");
}

void emit_report(const Report& report, const std::string& format, const std::string& path) {
  write_text(path, render_report(report, format));
}

}  // namespace rmsd
