#include "rmsd/io.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rmsd/error.hpp"

namespace rmsd {

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  fail(ErrorCode::kParse, where + ": " + what);
}

template <class F>
void for_each_line(const std::string& path, F&& f) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      parse_fail(where, e.what());
    }
    try {
      f(j, where);
    } catch (const json::exception& e) {
      parse_fail(where, e.what());
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with(where)) throw;
      parse_fail(where, e.what());
    }
  }
}

void write_lines(const std::string& path, const std::vector<json>& rows) {
  std::string text;
  for (const auto& r : rows) {
    text += r.dump();
    text += '\n';
  }
  write_text(path, text);
}

std::string letter_string(char c) { return std::string(1, c); }

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

json payload_to_json(const AnswerPayload& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TemporalSegment>) return json::array({v.start, v.end});
        else if constexpr (std::is_same_v<T, SpatialBox>) return json::array({v.x1, v.y1, v.x2, v.y2});
        else if constexpr (std::is_same_v<T, OptionLetter>) return letter_string(v.letter);
        else if constexpr (std::is_same_v<T, Binary>) return v.value ? "yes" : "no";
        else if constexpr (std::is_same_v<T, Number>) return v.value;
        else return v.value;
      },
      p);
}

AnswerPayload payload_from_json(const json& j, TaskType task) {
  auto numbers = [&](std::size_t n) {
    if (!j.is_array() || j.size() != n) {
      fail(ErrorCode::kParse, "ground truth for " + std::string(task_name(task)) + " needs " +
                                  std::to_string(n) + " numbers");
    }
    std::vector<double> v;
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
  };
  switch (task) {
    case TaskType::kTemporalGrounding: {
      const auto v = numbers(2);
      return TemporalSegment{v[0], v[1]};
    }
    case TaskType::kSpatialGrounding: {
      const auto v = numbers(4);
      return SpatialBox{v[0], v[1], v[2], v[3]};
    }
    case TaskType::kMultipleChoice: {
      const auto s = j.get<std::string>();
      if (s.size() != 1 || !std::isalpha(static_cast<unsigned char>(s[0]))) {
        fail(ErrorCode::kParse, "multiple-choice ground truth must be one letter, got '" + s + "'");
      }
      return OptionLetter{static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])))};
    }
    case TaskType::kBinaryQA: {
      if (j.is_boolean()) return Binary{j.get<bool>()};
      auto s = j.get<std::string>();
      for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (s != "yes" && s != "no") fail(ErrorCode::kParse, "binary ground truth must be yes/no");
      return Binary{s == "yes"};
    }
    case TaskType::kNumerical:
      return Number{j.get<double>()};
    case TaskType::kOCR:
    case TaskType::kOpenEnded:
      return Text{j.get<std::string>()};
  }
  fail(ErrorCode::kParse, "unknown task");
}

json example_to_json(const SupervisionExample& ex) {
  json j;
  j["id"] = ex.id;
  j["task"] = std::string(task_name(ex.task));
  j["question"] = ex.question;
  if (ex.ground_truth) j["ground_truth"] = payload_to_json(*ex.ground_truth);
  if (ex.option_count > 0) j["option_count"] = ex.option_count;
  if (!ex.answer_space.empty()) {
    json space = json::array();
    for (const auto& a : ex.answer_space) space.push_back(payload_to_json(a));
    j["answer_space"] = std::move(space);
  }
  return j;
}

SupervisionExample example_from_json(const json& j) {
  SupervisionExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.task = task_from_name(j.at("task").get<std::string>());
  ex.question = j.value("question", std::string{});
  if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
    ex.ground_truth = payload_from_json(j.at("ground_truth"), ex.task);
  }
  ex.option_count = j.value("option_count", 0);
  if (j.contains("answer_space")) {
    for (const auto& a : j.at("answer_space")) ex.answer_space.push_back(payload_from_json(a, ex.task));
  }
  try {
    validate_example(ex);
  } catch (const Error& e) {
    fail(ErrorCode::kParse, e.what());
  }
  return ex;
}

std::vector<SupervisionExample> read_examples(const std::string& path) {
  std::vector<SupervisionExample> out;
  std::set<std::string> ids;
  for_each_line(path, [&](const json& j, const std::string& where) {
    auto ex = example_from_json(j);
    if (!ids.insert(ex.id).second) parse_fail(where, "duplicate example id '" + ex.id + "'");
    out.push_back(std::move(ex));
  });
  return out;
}

void write_examples(const std::string& path, const std::vector<SupervisionExample>& examples) {
  std::vector<json> rows;
  for (const auto& ex : examples) rows.push_back(example_to_json(ex));
  write_lines(path, rows);
}

std::vector<CorpusLine> read_corpus(const std::string& path) {
  std::vector<CorpusLine> out;
  for_each_line(path, [&](const json& j, const std::string& where) {
    CorpusLine line;
    line.example_id = j.at("example_id").get<std::string>();
    line.source = j.value("source", std::string("teacher"));
    if (line.source != "teacher" && line.source != "student") {
      parse_fail(where, "source must be 'teacher' or 'student'");
    }
    line.sample_index = j.value("sample_index", 0);
    line.text = j.at("text").get<std::string>();
    out.push_back(std::move(line));
  });
  return out;
}

void write_corpus(const std::string& path, const std::vector<CorpusLine>& lines) {
  std::vector<json> rows;
  for (const auto& l : lines) {
    rows.push_back({{"example_id", l.example_id},
                    {"source", l.source},
                    {"sample_index", l.sample_index},
                    {"text", l.text}});
  }
  write_lines(path, rows);
}

void write_pools(const std::string& path, const std::vector<TeacherPool>& pools) {
  std::vector<json> rows;
  for (const auto& pool : pools) {
    json responses = json::array();
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const auto& r = pool.responses[k];
      json q = pool.scored() ? json((*pool.qualities)[k]) : json(nullptr);
      responses.push_back({{"text", r.raw},
                           {"outer_valid", r.outer_valid},
                           {"task_valid", r.task_valid},
                           {"q", q}});
    }
    rows.push_back({{"example_id", pool.example_id},
                    {"task", std::string(task_name(pool.task))},
                    {"tau_applied", pool.tau_applied ? json(*pool.tau_applied) : json(nullptr)},
                    {"responses", std::move(responses)}});
  }
  write_lines(path, rows);
}

std::vector<TeacherPool> read_pools(const std::string& path,
                                    const std::vector<SupervisionExample>& examples) {
  std::map<std::string, const SupervisionExample*> by_id;
  for (const auto& ex : examples) by_id[ex.id] = &ex;
  std::vector<TeacherPool> out;
  for_each_line(path, [&](const json& j, const std::string& where) {
    TeacherPool pool;
    pool.example_id = j.at("example_id").get<std::string>();
    const auto it = by_id.find(pool.example_id);
    if (it == by_id.end()) parse_fail(where, "unknown example id '" + pool.example_id + "'");
    const auto& ex = *it->second;
    pool.task = task_from_name(j.at("task").get<std::string>());
    if (pool.task != ex.task) parse_fail(where, "task does not match the example");
    const auto& rs = j.at("responses");
    if (!rs.is_array() || rs.empty()) parse_fail(where, "pool has no responses");
    std::vector<double> q;
    bool any_null = false;
    for (const auto& r : rs) {
      pool.responses.push_back(parse_response(r.at("text").get<std::string>(), ex));
      const auto& qj = r.at("q");
      if (qj.is_null()) {
        any_null = true;
      } else {
        const double v = qj.get<double>();
        if (!(v >= 0.0 && v <= 1.0)) parse_fail(where, "quality outside [0,1]");
        q.push_back(v);
      }
    }
    if (!q.empty() && any_null) parse_fail(where, "pool mixes scored and unscored responses");
    if (!any_null) pool.qualities = std::move(q);
    if (j.contains("tau_applied") && !j.at("tau_applied").is_null()) {
      pool.tau_applied = j.at("tau_applied").get<double>();
    }
    out.push_back(std::move(pool));
  });
  return out;
}

json discriminator_to_json(const DiscriminatorParams& p) {
  return {{"feature_dim", p.feature_dim}, {"hidden_dim", p.hidden_dim}, {"hidden_w", p.hidden_w},
          {"hidden_b", p.hidden_b},       {"weights", p.weights},       {"bias", p.bias}};
}

DiscriminatorParams discriminator_from_json(const json& j) {
  DiscriminatorParams p;
  try {
    p.feature_dim = j.at("feature_dim").get<std::size_t>();
    p.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    p.hidden_w = j.at("hidden_w").get<std::vector<double>>();
    p.hidden_b = j.at("hidden_b").get<std::vector<double>>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<double>();
    p.validate();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("discriminator checkpoint: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kParse, std::string("discriminator checkpoint: ") + e.what());
  }
  return p;
}

json student_to_json(const StudentPolicy& s) {
  return {{"shared", s.shared}, {"logits", s.logits}};
}

StudentPolicy student_from_json(const json& j) {
  StudentPolicy s;
  try {
    s.shared = j.at("shared").get<bool>();
    s.logits = j.at("logits").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("student checkpoint: ") + e.what());
  }
  if (s.logits.empty() || (s.shared && s.logits.size() != 1)) {
    fail(ErrorCode::kParse, "student checkpoint: bad logits shape");
  }
  return s;
}

// ---- run config ----

namespace {

// Reads known keys from one object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorCode::kConfig, name_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::kConfig, name_ + "." + key + " has the wrong type");
    }
  }

  template <class E>
  void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (!present) return;
    for (const auto& [n, v] : names) {
      if (s == n) {
        out = v;
        return;
      }
    }
    fail(ErrorCode::kConfig, name_ + "." + key + ": unknown value '" + s + "'");
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail(ErrorCode::kConfig, name_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

constexpr std::pair<const char*, Baseline> kBaselines[] = {{"group_mean", Baseline::kGroupMean},
                                                           {"none", Baseline::kNone}};
constexpr std::pair<const char*, DiscOptimizer> kOptimizers[] = {{"sgd", DiscOptimizer::kSgd},
                                                                 {"adam", DiscOptimizer::kAdam}};
constexpr std::pair<const char*, ScoringStrategy> kScorings[] = {
    {"ground_truth", ScoringStrategy::kGroundTruth}, {"uniform", ScoringStrategy::kUniform}};
constexpr std::pair<const char*, OcrMode> kOcrModes[] = {{"edit", OcrMode::kEdit},
                                                         {"exact", OcrMode::kExact}};

template <class E, std::size_t N>
std::string name_of(const std::pair<const char*, E> (&names)[N], E v) {
  for (const auto& [n, x] : names) {
    if (x == v) return n;
  }
  return "?";
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  Section root(j, "config");

  if (const json* t = root.child("train")) {
    Section s(*t, "train");
    auto& c = cfg.train;
    s.get("K", c.K);
    s.get("N", c.N);
    s.get("tau", c.tau);
    s.get("filter", c.filter);
    s.get("quality_weighting", c.quality_weighting);
    s.get("gamma", c.gamma);
    s.get("lr_sft", c.lr_sft);
    s.get("lr_student", c.lr_student);
    s.get("lr_disc", c.lr_disc);
    s.get("epochs_stage1", c.epochs_stage1);
    s.get("epochs_stage2", c.epochs_stage2);
    s.get("disc_hidden", c.disc_hidden);
    s.get_enum("baseline", c.baseline, {kBaselines[0], kBaselines[1]});
    s.get_enum("disc_optimizer", c.disc_optimizer, {kOptimizers[0], kOptimizers[1]});
    s.get_enum("closed_scoring", c.closed_scoring, {kScorings[0], kScorings[1]});
    s.get_enum("open_scoring", c.open_scoring, {kScorings[0], kScorings[1]});
    if (const json* w = s.child("weights")) {
      Section ws(*w, "train.weights");
      ws.get("alpha", c.weights.alpha);
      ws.get("beta", c.weights.beta);
      ws.get("eta", c.weights.eta);
      ws.get("delta", c.weights.delta);
      ws.done();
    }
    s.done();
  }

  if (const json* m = root.child("metrics")) {
    Section s(*m, "metrics");
    s.get("eps_rel", cfg.train.metrics.eps_rel);
    s.get("success_iou", cfg.train.metrics.success_iou);
    s.get_enum("ocr_mode", cfg.train.metrics.ocr_mode, {kOcrModes[0], kOcrModes[1]});
    s.done();
  }

  if (const json* b = root.child("benchmark")) {
    Section s(*b, "benchmark");
    auto& c = cfg.benchmark;
    s.get("n_mcq", c.n_mcq);
    s.get("n_temporal", c.n_temporal);
    s.get("n_open", c.n_open);
    s.get("option_count", c.option_count);
    s.get("temporal_grid", c.temporal_grid);
    s.get("open_variants", c.open_variants);
    s.get("mean_quality", c.mean_quality);
    s.get("cross_sigma", c.cross_sigma);
    s.get("temporal_mean_quality", c.temporal_mean_quality);
    s.get("temporal_cross_sigma", c.temporal_cross_sigma);
    s.get("perfect_teacher", c.perfect_teacher);
    s.get("violation_rate", c.violation_rate);
    s.get("temporal_violation_rate", c.temporal_violation_rate);
    s.get("temperature", c.temperature);
    s.get("top_p", c.top_p);
    s.get("temporal_min_cells", c.temporal_min_cells);
    s.get("open_correct_fraction", c.open_correct_fraction);
    s.get("paraphrase_rate", c.paraphrase_rate);
    s.get("copy_rate", c.copy_rate);
    s.done();
    auto check = [](bool ok, const std::string& what) {
      if (!ok) fail(ErrorCode::kConfig, "benchmark: " + what);
    };
    check(c.n_mcq >= 0 && c.n_temporal >= 0 && c.n_open >= 0, "example counts must be >= 0");
    check(c.n_mcq + c.n_temporal + c.n_open > 0, "benchmark is empty");
    check(c.option_count >= 2 && c.option_count <= 26, "option_count must lie in [2,26]");
    check(c.temporal_grid >= 2, "temporal_grid must be >= 2");
    check(c.temporal_min_cells >= 1 && c.temporal_min_cells <= c.temporal_grid,
          "temporal_min_cells out of range");
    check(c.open_variants >= 2, "open_variants must be >= 2");
    check(c.temperature > 0.0, "temperature must be positive");
    check(c.top_p > 0.0 && c.top_p <= 1.0, "top_p must lie in (0,1]");
    for (double r : {c.violation_rate, c.temporal_violation_rate, c.open_correct_fraction,
                     c.paraphrase_rate, c.copy_rate}) {
      check(r >= 0.0 && r <= 1.0, "rates must lie in [0,1]");
    }
  }

  if (const json* v = root.child("variance")) {
    Section s(*v, "variance");
    auto& c = cfg.variance;
    s.get("questions", c.questions);
    s.get("samples_per_question", c.samples_per_question);
    s.get("mean_quality", c.mean_quality);
    s.get("cross_sigma", c.cross_sigma);
    s.get("sampling_sigma", c.sampling_sigma);
    s.get("violation_rate", c.violation_rate);
    s.done();
    if (c.questions < 1 || c.samples_per_question < 1) {
      fail(ErrorCode::kConfig, "variance: questions and samples_per_question must be >= 1");
    }
  }

  if (const json* h = root.child("harness")) {
    Section s(*h, "harness");
    auto& c = cfg.harness;
    s.get("seeds", c.seeds);
    s.get("benchmark_seed_base", c.benchmark_seed_base);
    s.get("k_grid", c.k_grid);
    s.get("tau_grid", c.tau_grid);
    s.get("passk_k", c.passk_k);
    s.get("passk_temperature", c.passk_temperature);
    s.get("passk_top_p", c.passk_top_p);
    s.get("passk_queries", c.passk_queries);
    s.get("permutations", c.permutations);
    s.done();
    if (c.seeds < 1) fail(ErrorCode::kConfig, "harness: seeds must be >= 1");
    if (c.k_grid.empty() || c.tau_grid.empty() || c.passk_k.empty()) {
      fail(ErrorCode::kConfig, "harness: grids must be non-empty");
    }
    if (c.permutations < 1) fail(ErrorCode::kConfig, "harness: permutations must be >= 1");
  }
  root.done();
  cfg.train.validate();
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  const auto& t = cfg.train;
  const auto& b = cfg.benchmark;
  const auto& v = cfg.variance;
  const auto& h = cfg.harness;
  json j;
  j["train"] = {{"K", t.K},
                {"N", t.N},
                {"tau", t.tau},
                {"filter", t.filter},
                {"quality_weighting", t.quality_weighting},
                {"weights",
                 {{"alpha", t.weights.alpha},
                  {"beta", t.weights.beta},
                  {"eta", t.weights.eta},
                  {"delta", t.weights.delta}}},
                {"gamma", t.gamma},
                {"lr_sft", t.lr_sft},
                {"lr_student", t.lr_student},
                {"lr_disc", t.lr_disc},
                {"epochs_stage1", t.epochs_stage1},
                {"epochs_stage2", t.epochs_stage2},
                {"disc_hidden", t.disc_hidden},
                {"baseline", name_of(kBaselines, t.baseline)},
                {"disc_optimizer", name_of(kOptimizers, t.disc_optimizer)},
                {"closed_scoring", name_of(kScorings, t.closed_scoring)},
                {"open_scoring", name_of(kScorings, t.open_scoring)}};
  j["metrics"] = {{"eps_rel", t.metrics.eps_rel},
                  {"success_iou", t.metrics.success_iou},
                  {"ocr_mode", name_of(kOcrModes, t.metrics.ocr_mode)}};
  j["benchmark"] = {{"n_mcq", b.n_mcq},
                    {"n_temporal", b.n_temporal},
                    {"n_open", b.n_open},
                    {"option_count", b.option_count},
                    {"temporal_grid", b.temporal_grid},
                    {"open_variants", b.open_variants},
                    {"mean_quality", b.mean_quality},
                    {"cross_sigma", b.cross_sigma},
                    {"temporal_mean_quality", b.temporal_mean_quality},
                    {"temporal_cross_sigma", b.temporal_cross_sigma},
                    {"perfect_teacher", b.perfect_teacher},
                    {"violation_rate", b.violation_rate},
                    {"temporal_violation_rate", b.temporal_violation_rate},
                    {"temperature", b.temperature},
                    {"top_p", b.top_p},
                    {"temporal_min_cells", b.temporal_min_cells},
                    {"open_correct_fraction", b.open_correct_fraction},
                    {"paraphrase_rate", b.paraphrase_rate},
                    {"copy_rate", b.copy_rate}};
  j["variance"] = {{"questions", v.questions},
                   {"samples_per_question", v.samples_per_question},
                   {"mean_quality", v.mean_quality},
                   {"cross_sigma", v.cross_sigma},
                   {"sampling_sigma", v.sampling_sigma},
                   {"violation_rate", v.violation_rate}};
  j["harness"] = {{"seeds", h.seeds},
                  {"benchmark_seed_base", h.benchmark_seed_base},
                  {"k_grid", h.k_grid},
                  {"tau_grid", h.tau_grid},
                  {"passk_k", h.passk_k},
                  {"passk_temperature", h.passk_temperature},
                  {"passk_top_p", h.passk_top_p},
                  {"passk_queries", h.passk_queries},
                  {"permutations", h.permutations}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  const auto text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, path + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace rmsd
