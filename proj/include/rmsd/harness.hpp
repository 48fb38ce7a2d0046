#pragma once

// Experiment surface: teacher-variance statistics, ablation and sensitivity
// sweeps over the synthetic benchmark, and report emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmsd/io.hpp"
#include "rmsd/sim_trainer.hpp"
#include "rmsd/synthetic.hpp"

namespace rmsd {

// ---- teacher variance ----

struct QualityStats {
  std::string group;  // task name or "overall"
  std::size_t questions = 0;
  std::size_t responses = 0;
  std::size_t valid = 0;
  double violation_rate = 0.0;
  // Over format-valid responses only; absent when the group has no scored
  // valid response (open-ended tasks, or everything malformed).
  std::optional<double> mean;
  std::optional<double> min;
  std::optional<double> max;
  // Sample std of per-question mean quality.
  std::optional<double> cross_sigma;
  // cross_sigma with the sampling share of the per-question means removed:
  // sqrt(max(0, var(means) - pooled_var * mean(1/n_i))).
  std::optional<double> between_sigma;
  // sqrt of the df-weighted mean within-question variance; needs at least
  // one question with two valid samples.
  std::optional<double> sampling_sigma;
  // Plain mean of per-question sample stds (biased low for small samples).
  std::optional<double> sampling_sigma_mean_sd;
  std::vector<std::pair<double, double>> quantiles;  // (p, value)
};

struct VarianceReport {
  std::vector<QualityStats> per_task;  // in task-type order, present tasks only
  QualityStats overall;
  std::vector<std::string> diagnostics;
};

// Teacher lines only; student lines are ignored. Lines naming unknown
// examples throw Error(kParse).
VarianceReport analyze_variance(const std::vector<SupervisionExample>& examples,
                                const std::vector<CorpusLine>& corpus,
                                const MetricConfig& metrics = {});

// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

// ---- ablation ----

struct AblationSetting {
  std::string label;
  std::size_t K = 4;
  bool filter = true;
  bool weight = true;
};

// A (K=1), B (K), C (+filter), D (+weighting).
std::vector<AblationSetting> standard_settings(std::size_t K = 4);

struct AblationResult {
  AblationSetting setting;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracy;  // per seed
  double mean = 0.0;
  double std = 0.0;  // sample std; 0 for one seed
};

struct PairedTest {
  std::string first;
  std::string second;
  double mean_diff = 0.0;  // second - first
  double p_value = 1.0;
  int permutations = 0;
};

struct AblationReport {
  std::vector<AblationResult> results;
  std::optional<PairedTest> test;  // A vs D when both ran, with >= 2 seeds
};

// Benchmark for seed s is make_benchmark(cfg.benchmark, benchmark_seed_base + s);
// training uses seed s.
AblationReport run_ablation(const RunConfig& cfg, const std::vector<AblationSetting>& settings,
                            const std::vector<std::uint64_t>& seeds);

// Two-sided paired sign-flip test on `diffs`: p = (1 + #{|mean*| >= |mean|}) / (1 + P).
double permutation_test(const std::vector<double>& diffs, int permutations, std::uint64_t seed);

// ---- sensitivity ----

struct SensitivityRow {
  std::string param;  // "K" | "tau"
  double value = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  std::optional<double> retention;  // tau rows
  double mean_skipped = 0.0;        // pools skipped for Stage 2
};

struct SensitivityReport {
  std::vector<SensitivityRow> k_rows;
  std::vector<SensitivityRow> tau_rows;
};

// Full method (filter and weighting on). The K table keeps cfg.train.tau;
// the tau table keeps cfg.train.K. Either grid may be empty, not both.
SensitivityReport run_sensitivity(const RunConfig& cfg, const std::vector<std::size_t>& k_grid,
                                  const std::vector<double>& tau_grid,
                                  const std::vector<std::uint64_t>& seeds);

// Fraction of scored teacher samples with raw quality >= tau.
double pooled_retention(const std::vector<TeacherPool>& pools, double tau);

// ---- task-adaptive scoring ----

struct AdaptiveCell {
  TaskFamily family = TaskFamily::kClosedEnded;
  ScoringStrategy strategy = ScoringStrategy::kGroundTruth;  // proxy for open-ended
  double mean_acc = 0.0;
  double std_acc = 0.0;
};

struct AdaptiveReport {
  std::vector<AdaptiveCell> cells;  // closed/GT, closed/uniform, open/proxy, open/uniform
  bool closed_prefers_scoring = false;  // GT >= uniform
  bool open_prefers_uniform = false;    // uniform >= proxy
};

// Throws Error(kConfig) unless the benchmark has both task families.
AdaptiveReport run_task_adaptive_check(const RunConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds);

// ---- pass@k ----

struct PassKCurve {
  std::string label;
  std::vector<PassAtK> points;  // mean over seeds
};

// Curves for settings A and D plus the untrained uniform student.
std::vector<PassKCurve> run_passk(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds);

// ---- reports ----

struct Report {
  std::string kind;  // e.g. "ablation"
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  nlohmann::json meta = nlohmann::json::object();
  // When set, JSON output is an object keyed by this column instead of a row list.
  std::optional<std::string> key_column;
};

Report to_report(const VarianceReport& r);
Report to_report(const AblationReport& r);
Report to_report(const SensitivityReport& r);
Report to_report(const AdaptiveReport& r);
Report to_report(const std::vector<PassKCurve>& curves);
Report to_report(const std::vector<MetricsRow>& rows);

// "csv" or "json". CSV starts with a "#schema,<kind>/<version>" row, then
// "#<key>,<value>" meta rows, then the header. Throws Error(kEmptyReport)
// without rows and Error(kConfig) for an unknown format.
std::string render_report(const Report& report, const std::string& format);
void emit_report(const Report& report, const std::string& format, const std::string& path);

}  // namespace rmsd
