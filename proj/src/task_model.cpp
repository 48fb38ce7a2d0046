#include "rmsd/task_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "rmsd/error.hpp"

namespace rmsd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kContract: return "ContractViolation";
    case ErrorCode::kInvalidPool: return "InvalidPool";
    case ErrorCode::kDegeneratePool: return "DegeneratePool";
    case ErrorCode::kNoValidTarget: return "NoValidTarget";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kEmptyReport: return "EmptyReport";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
  }
  return "Unknown";
}

namespace {

constexpr std::array<std::string_view, 7> kTaskNames = {
    "temporal_grounding", "spatial_grounding", "multiple_choice", "binary_qa",
    "numerical",          "ocr",               "open_ended",
};

constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kTimeOpen = "<t>";
constexpr std::string_view kTimeClose = "</t>";

std::vector<std::size_t> find_all(std::string_view hay, std::string_view needle) {
  std::vector<std::size_t> out;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    out.push_back(pos);
  }
  return out;
}

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// Full-token finite real; a leading '+' is accepted.
std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

struct Envelope {
  bool valid = false;
  bool has_think = false;
  std::string_view content;
};

Envelope read_envelope(std::string_view raw) {
  Envelope env;
  const auto opens = find_all(raw, kAnswerOpen);
  const auto closes = find_all(raw, kAnswerClose);
  if (opens.size() != 1 || closes.size() != 1) return env;
  const auto a_open = opens.front();
  const auto a_close = closes.front();
  if (a_close < a_open + kAnswerOpen.size()) return env;

  const auto t_opens = find_all(raw, kThinkOpen);
  const auto t_closes = find_all(raw, kThinkClose);
  if (!t_opens.empty() || !t_closes.empty()) {
    if (t_opens.size() != 1 || t_closes.size() != 1) return env;
    const auto t_open = t_opens.front();
    const auto t_close = t_closes.front();
    if (t_close < t_open + kThinkOpen.size()) return env;
    if (t_close + kThinkClose.size() > a_open) return env;
    env.has_think = true;
  }
  env.valid = true;
  const auto begin = a_open + kAnswerOpen.size();
  env.content = raw.substr(begin, a_close - begin);
  return env;
}

// Reads "<t>x</t>" at the front of s, advancing s past it.
std::optional<double> take_timestamp(std::string_view& s) {
  s = trim(s);
  if (s.substr(0, kTimeOpen.size()) != kTimeOpen) return std::nullopt;
  s.remove_prefix(kTimeOpen.size());
  const auto close = s.find(kTimeClose);
  if (close == std::string_view::npos) return std::nullopt;
  auto v = parse_real(s.substr(0, close));
  s.remove_prefix(close + kTimeClose.size());
  return v;
}

struct TaskParse {
  bool valid = false;
  std::optional<AnswerPayload> payload;
  std::vector<std::string> diagnostics;
};

TaskParse parse_temporal(std::string_view content) {
  TaskParse out;
  auto rest = content;
  auto start = take_timestamp(rest);
  if (!start) return out;
  rest = trim(rest);
  for (std::string_view sep : {"to", "-", ","}) {
    if (rest.substr(0, sep.size()) == sep) {
      rest.remove_prefix(sep.size());
      break;
    }
  }
  auto end = take_timestamp(rest);
  if (!end || !trim(rest).empty()) return out;
  if (*start < 0.0 || *end < *start) {
    out.diagnostics.emplace_back("temporal segment rejected: start < 0 or end < start");
    return out;
  }
  out.valid = true;
  out.payload = TemporalSegment{*start, *end};
  return out;
}

TaskParse parse_spatial(std::string_view content) {
  TaskParse out;
  auto s = trim(content);
  if (s.size() >= 2 && ((s.front() == '[' && s.back() == ']') ||
                        (s.front() == '(' && s.back() == ')'))) {
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> vals;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (is_space(s[i]) || s[i] == ',')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j]) && s[j] != ',') ++j;
    auto v = parse_real(s.substr(i, j - i));
    if (!v) return out;
    vals.push_back(*v);
    i = j;
  }
  if (vals.size() != 4) return out;
  if (vals[0] > vals[2] || vals[1] > vals[3]) {
    out.diagnostics.emplace_back("spatial box rejected: reversed corners");
    return out;
  }
  bool clamped = false;
  for (double& v : vals) {
    const double c = std::clamp(v, 0.0, 1.0);
    clamped |= c != v;
    v = c;
  }
  if (clamped) out.diagnostics.emplace_back("spatial box clamped to [0,1]");
  out.valid = true;
  out.payload = SpatialBox{vals[0], vals[1], vals[2], vals[3]};
  return out;
}

TaskParse parse_option(std::string_view content, int option_count) {
  TaskParse out;
  auto s = trim(content);
  if (s.size() >= 3 && s.front() == '(' && s.back() == ')') {
    s = s.substr(1, s.size() - 2);
  } else if (s.size() == 2 && (s.back() == '.' || s.back() == ')')) {
    s.remove_suffix(1);
  }
  if (s.size() != 1 || !std::isalpha(static_cast<unsigned char>(s[0]))) {
    return out;
  }
  const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  if (option_count > 0 && letter - 'A' >= option_count) {
    out.diagnostics.emplace_back("option letter outside the declared option set");
    return out;
  }
  out.valid = true;
  out.payload = OptionLetter{letter};
  return out;
}

TaskParse parse_task_content(std::string_view content, TaskType task,
                             const ParseOptions& opts) {
  switch (task) {
    case TaskType::kTemporalGrounding:
      return parse_temporal(content);
    case TaskType::kSpatialGrounding:
      return parse_spatial(content);
    case TaskType::kMultipleChoice:
      return parse_option(content, opts.option_count);
    case TaskType::kBinaryQA: {
      const auto word = lower(trim(content));
      if (word == "yes") return {true, Binary{true}, {}};
      if (word == "no") return {true, Binary{false}, {}};
      return {};
    }
    case TaskType::kNumerical: {
      if (auto v = parse_real(content)) return {true, Number{*v}, {}};
      return {};
    }
    case TaskType::kOCR:
    case TaskType::kOpenEnded: {
      const auto t = trim(content);
      if (t.empty()) return {};
      return {true, Text{std::string(t)}, {}};
    }
  }
  return {};
}

}  // namespace

std::string_view task_name(TaskType t) {
  return kTaskNames[static_cast<std::size_t>(t)];
}

TaskType task_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
    if (kTaskNames[i] == name) return static_cast<TaskType>(i);
  }
  fail(ErrorCode::kParse, "unknown task type: " + std::string(name));
}

std::size_t payload_index_for(TaskType t) {
  switch (t) {
    case TaskType::kTemporalGrounding: return 0;
    case TaskType::kSpatialGrounding: return 1;
    case TaskType::kMultipleChoice: return 2;
    case TaskType::kBinaryQA: return 3;
    case TaskType::kNumerical: return 4;
    case TaskType::kOCR:
    case TaskType::kOpenEnded: return 5;
  }
  return 5;
}

void validate_example(const SupervisionExample& ex) {
  if (is_closed_ended(ex.task)) {
    require(ex.ground_truth.has_value(),
            "closed-ended example '" + ex.id + "' has no ground truth");
    require(ex.ground_truth->index() == payload_index_for(ex.task),
            "ground truth of '" + ex.id + "' does not match its task type");
    if (!ex.answer_space.empty()) {
      const bool contains =
          std::find(ex.answer_space.begin(), ex.answer_space.end(),
                    *ex.ground_truth) != ex.answer_space.end();
      require(contains, "answer space of '" + ex.id + "' lacks the ground truth");
    }
  } else {
    require(!ex.ground_truth.has_value(),
            "open-ended example '" + ex.id + "' must not carry a ground truth");
  }
  if (ex.task == TaskType::kMultipleChoice) {
    require(ex.option_count >= 1 && ex.option_count <= 26,
            "multiple-choice example '" + ex.id + "' needs 1..26 options");
    const char letter = std::get<OptionLetter>(*ex.ground_truth).letter;
    require(letter >= 'A' && letter < 'A' + ex.option_count,
            "ground truth of '" + ex.id + "' is not one of its options");
  }
  if (ex.task == TaskType::kTemporalGrounding) {
    const auto& seg = std::get<TemporalSegment>(*ex.ground_truth);
    require(std::isfinite(seg.start) && std::isfinite(seg.end) && seg.start <= seg.end,
            "ground-truth segment of '" + ex.id + "' is reversed or not finite");
  }
  if (ex.task == TaskType::kSpatialGrounding) {
    const auto& b = std::get<SpatialBox>(*ex.ground_truth);
    require(std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) && std::isfinite(b.y2) &&
                b.x1 <= b.x2 && b.y1 <= b.y2,
            "ground-truth box of '" + ex.id + "' is reversed or not finite");
  }
  for (const auto& a : ex.answer_space) {
    require(a.index() == payload_index_for(ex.task),
            "answer space of '" + ex.id + "' mixes payload kinds");
  }
}

bool validate_outer(std::string_view raw) { return read_envelope(raw).valid; }

bool validate_task_format(std::string_view raw, TaskType task,
                          const ParseOptions& opts) {
  const auto env = read_envelope(raw);
  return env.valid && parse_task_content(env.content, task, opts).valid;
}

ParsedResponse parse_response(std::string_view raw, TaskType task,
                              const ParseOptions& opts) {
  ParsedResponse out;
  out.raw = std::string(raw);
  const auto env = read_envelope(raw);
  out.outer_valid = env.valid;
  out.has_think = env.has_think;
  if (!env.valid) return out;
  auto tp = parse_task_content(env.content, task, opts);
  out.task_valid = tp.valid;
  out.diagnostics = std::move(tp.diagnostics);
  if (tp.valid) out.payload = std::move(tp.payload);
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string render_answer_content(const AnswerPayload& p) {
  struct Visitor {
    std::string operator()(const TemporalSegment& s) const {
      return "<t>" + format_double(s.start) + "</t> <t>" + format_double(s.end) + "</t>";
    }
    std::string operator()(const SpatialBox& b) const {
      return "[" + format_double(b.x1) + ", " + format_double(b.y1) + ", " +
             format_double(b.x2) + ", " + format_double(b.y2) + "]";
    }
    std::string operator()(const OptionLetter& o) const { return std::string(1, o.letter); }
    std::string operator()(const Binary& b) const { return b.value ? "yes" : "no"; }
    std::string operator()(const Number& n) const { return format_double(n.value); }
    std::string operator()(const Text& t) const { return t.value; }
  };
  return std::visit(Visitor{}, p);
}

std::string render_response(const AnswerPayload& p, std::string_view thinking) {
  std::string out;
  if (!thinking.empty()) {
    out += kThinkOpen;
    out += thinking;
    out += kThinkClose;
  }
  out += kAnswerOpen;
  out += render_answer_content(p);
  out += kAnswerClose;
  return out;
}

}  // namespace rmsd
