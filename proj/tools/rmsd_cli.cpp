// rmsd: command-line front end for the distillation simulator and harness.
//
// Exit codes: 0 ok, 1 other failure, 2 configuration or usage error,
// 3 degenerate data (empty or fully filtered pools).

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rmsd/error.hpp"
#include "rmsd/harness.hpp"
#include "rmsd/io.hpp"

namespace fs = std::filesystem;
using namespace rmsd;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  int seeds = 0;  // 0: take harness.seeds from the config
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "Run config (JSON); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Base seed");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

void add_report_opts(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seeds", c.seeds, "Number of seeds (overrides the config)")
      ->check(CLI::PositiveNumber);
}

RunConfig load(const Common& c) { return c.config.empty() ? RunConfig{} : load_run_config(c.config); }

std::vector<std::uint64_t> seed_list(const Common& c, const RunConfig& cfg) {
  const int n = c.seeds > 0 ? c.seeds : cfg.harness.seeds;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n; ++i) seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidWeights:
      return 2;
    case ErrorCode::kInvalidPool:
    case ErrorCode::kDegeneratePool:
    case ErrorCode::kNoValidTarget:
    case ErrorCode::kEmptyReport:
      return 3;
    default:
      return 1;
  }
}

// Teacher responses grouped by example id, ordered by sample index.
std::map<std::string, std::vector<std::string>> group_responses(const std::vector<CorpusLine>& lines) {
  std::map<std::string, std::vector<std::pair<int, std::string>>> tmp;
  for (const auto& l : lines) {
    if (l.source == "teacher") tmp[l.example_id].emplace_back(l.sample_index, l.text);
  }
  std::map<std::string, std::vector<std::string>> out;
  for (auto& [id, v] : tmp) {
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [idx, text] : v) out[id].push_back(std::move(text));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quality-aware multi-teacher distillation simulator and experiment harness"};
  app.require_subcommand(1);

  Common c;
  std::string examples_path, responses_path, dump_dir, setting = "D";
  std::size_t pool_k = 4;
  double pool_tau = 0.3;
  bool no_filter = false;

  auto* analyze = app.add_subcommand("analyze", "Teacher quality variance statistics");
  add_common(analyze, c);
  analyze->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  analyze->add_option("--examples", examples_path, "Examples JSONL")->check(CLI::ExistingFile);
  analyze->add_option("--responses", responses_path, "Response corpus JSONL")->check(CLI::ExistingFile);
  analyze->add_option("--dump-corpus", dump_dir,
                      "Write the synthetic corpus (examples.jsonl, responses.jsonl) here");

  auto* ablate = app.add_subcommand("ablate", "Settings A-D over seeds");
  add_common(ablate, c);
  add_report_opts(ablate, c);

  auto* sweep = app.add_subcommand("sweep", "K and tau sensitivity tables");
  add_common(sweep, c);
  add_report_opts(sweep, c);

  auto* adaptive = app.add_subcommand("adaptive", "Scoring strategy by task family");
  add_common(adaptive, c);
  add_report_opts(adaptive, c);

  auto* passk = app.add_subcommand("passk", "pass@k curves for settings A and D");
  add_common(passk, c);
  add_report_opts(passk, c);

  auto* pool = app.add_subcommand("pool", "Teacher pool tools");
  pool->require_subcommand(1);
  auto* pool_build = pool->add_subcommand("build", "Score, filter and cache teacher pools");
  add_common(pool_build, c);
  pool_build->add_option("--examples", examples_path, "Examples JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  pool_build->add_option("--responses", responses_path, "Response corpus JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  pool_build->add_option("--k", pool_k, "Responses per pool (first k by sample index)")
      ->check(CLI::PositiveNumber);
  pool_build->add_option("--tau", pool_tau, "Quality threshold")->check(CLI::Range(0.0, 1.0));
  pool_build->add_flag("--no-filter", no_filter, "Keep every response matchable");

  auto* train = app.add_subcommand("train", "Run the two-stage pipeline on one benchmark");
  add_common(train, c);
  train->add_option("--setting", setting, "Ablation setting (A-D); D is the full method")
      ->check(CLI::IsMember({"A", "B", "C", "D"}));

  auto* config = app.add_subcommand("config", "Write the resolved run config as JSON");
  add_common(config, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig cfg = load(c);

    if (analyze->parsed()) {
      std::vector<SupervisionExample> examples;
      std::vector<CorpusLine> lines;
      if (!examples_path.empty() || !responses_path.empty()) {
        if (examples_path.empty() || responses_path.empty()) {
          fail(ErrorCode::kConfig, "analyze: --examples and --responses go together");
        }
        examples = read_examples(examples_path);
        lines = read_corpus(responses_path);
      } else {
        auto corpus = make_variance_corpus(cfg.variance, c.seed);
        examples = std::move(corpus.examples);
        lines = std::move(corpus.lines);
      }
      if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        write_examples((fs::path(dump_dir) / "examples.jsonl").string(), examples);
        write_corpus((fs::path(dump_dir) / "responses.jsonl").string(), lines);
      }
      const auto report = analyze_variance(examples, lines, cfg.train.metrics);
      for (const auto& d : report.diagnostics) std::cerr << "note: " << d << "\n";
      emit_report(to_report(report), c.format, c.out);
    } else if (ablate->parsed()) {
      const auto r = run_ablation(cfg, standard_settings(cfg.train.K), seed_list(c, cfg));
      emit_report(to_report(r), c.format, c.out);
    } else if (sweep->parsed()) {
      const auto r = run_sensitivity(cfg, cfg.harness.k_grid, cfg.harness.tau_grid, seed_list(c, cfg));
      emit_report(to_report(r), c.format, c.out);
    } else if (adaptive->parsed()) {
      const auto r = run_task_adaptive_check(cfg, seed_list(c, cfg));
      emit_report(to_report(r), c.format, c.out);
    } else if (passk->parsed()) {
      const auto r = run_passk(cfg, seed_list(c, cfg));
      emit_report(to_report(r), c.format, c.out);
    } else if (pool_build->parsed()) {
      const auto examples = read_examples(examples_path);
      const auto grouped = group_responses(read_corpus(responses_path));
      std::vector<TeacherPool> pools;
      std::size_t degenerate = 0;
      for (const auto& ex : examples) {
        const auto it = grouped.find(ex.id);
        std::vector<std::string> raws;
        if (it != grouped.end()) {
          raws.assign(it->second.begin(),
                      it->second.begin() + static_cast<std::ptrdiff_t>(std::min(pool_k, it->second.size())));
        }
        auto p = build_pool(ex, raws, cfg.train.metrics);
        if (!no_filter) p = apply_filter(std::move(p), pool_tau);
        if (p.scored()) {
          const auto q = p.effective_qualities();
          if (std::none_of(q.begin(), q.end(), [](double v) { return v > 0.0; })) ++degenerate;
        }
        pools.push_back(std::move(p));
      }
      write_pools(c.out, pools);
      if (degenerate > 0) {
        std::cerr << "note: " << degenerate << " of " << pools.size()
                  << " pool(s) have no matchable response and will be skipped in training\n";
      }
    } else if (train->parsed()) {
      AblationSetting s;
      for (const auto& x : standard_settings(cfg.train.K)) {
        if (x.label == setting) s = x;
      }
      auto tc = cfg.train;
      tc.K = s.K;
      tc.filter = s.filter;
      tc.quality_weighting = s.weight;
      tc.seed = c.seed;
      const auto bench = make_benchmark(cfg.benchmark, cfg.harness.benchmark_seed_base + c.seed);
      const auto art = run_pipeline(bench, tc);
      const fs::path dir(c.out);
      fs::create_directories(dir);
      write_text((dir / "metrics.csv").string(), metrics_csv(art.metrics));
      write_text((dir / "student.json").string(), student_to_json(art.student).dump() + "\n");
      write_text((dir / "reference.json").string(), student_to_json(art.reference).dump() + "\n");
      json discs = json::array();
      for (const auto& d : art.discriminators) discs.push_back(discriminator_to_json(d));
      write_text((dir / "discriminators.json").string(), discs.dump() + "\n");
      write_pools((dir / "pools.jsonl").string(), art.pools);
      RunConfig resolved = cfg;
      resolved.train = tc;
      write_text((dir / "config.json").string(), run_config_to_json(resolved).dump(2) + "\n");
      std::cout << "final_accuracy," << format_double(art.final_accuracy) << "\n"
                << "sft_excluded," << art.sft_excluded << "\n"
                << "rl_skipped," << art.rl_skipped << "\n";
    } else if (config->parsed()) {
      write_text(c.out, run_config_to_json(cfg).dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
