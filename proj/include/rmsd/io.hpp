#pragma once

// File formats.
//
//   examples     JSONL  {id, task, question, ground_truth?, option_count?}
//   responses    JSONL  {example_id, source, sample_index, text}
//   pool cache   JSONL  {example_id, task, tau_applied, responses:[{text, outer_valid,
//                        task_valid, q}]}
//   checkpoints  JSON   discriminator params / student logits
//   run config   JSON   {train:{...}, benchmark:{...}, metrics:{...}, harness:{...}}
//
// Ground truth uses the task's natural JSON shape: [start, end] for temporal,
// [x1, y1, x2, y2] for spatial, "B" for multiple choice, "yes"/"no" for
// binary, a number for numerical and a string for OCR.
//
// Read errors throw Error(kParse) with the file and line; missing or
// unwritable files throw Error(kIo).

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmsd/discriminator.hpp"
#include "rmsd/pool_matcher.hpp"
#include "rmsd/sim_trainer.hpp"
#include "rmsd/synthetic.hpp"
#include "rmsd/task_model.hpp"

namespace rmsd {

using json = nlohmann::json;

json payload_to_json(const AnswerPayload& p);
AnswerPayload payload_from_json(const json& j, TaskType task);

json example_to_json(const SupervisionExample& ex);
SupervisionExample example_from_json(const json& j);

std::vector<SupervisionExample> read_examples(const std::string& path);
void write_examples(const std::string& path, const std::vector<SupervisionExample>& examples);

std::vector<CorpusLine> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<CorpusLine>& lines);

// Pools are re-parsed against their examples on read; stored qualities win
// over recomputed ones so externally scored pools round-trip.
void write_pools(const std::string& path, const std::vector<TeacherPool>& pools);
std::vector<TeacherPool> read_pools(const std::string& path,
                                    const std::vector<SupervisionExample>& examples);

json discriminator_to_json(const DiscriminatorParams& p);
DiscriminatorParams discriminator_from_json(const json& j);
json student_to_json(const StudentPolicy& s);
StudentPolicy student_from_json(const json& j);

struct HarnessConfig {
  int seeds = 20;
  std::uint64_t benchmark_seed_base = 1000;
  std::vector<std::size_t> k_grid{2, 4, 8};
  std::vector<double> tau_grid{0.0, 0.2, 0.3, 0.5};
  std::vector<std::size_t> passk_k{1, 2, 4, 8, 16, 32, 64, 128};
  double passk_temperature = 1.0;
  double passk_top_p = 0.9;
  std::size_t passk_queries = 4;
  int permutations = 10000;
};

struct RunConfig {
  TrainConfig train;
  BenchmarkConfig benchmark;
  VarianceCorpusConfig variance;
  HarnessConfig harness;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
// Throws Error(kConfig).
RunConfig run_config_from_json(const json& j);
json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace rmsd
