#pragma once

// Task taxonomy, answer payloads and the response parser.
//
// A response is a raw string. The outer envelope is one <answer>...</answer>
// span, optionally preceded by one <think>...</think> span. The content of
// the answer span is then checked against a per-task grammar:
//
//   temporal   <t>START</t> [to|-|,] <t>END</t>      0 <= START <= END
//   spatial    [x1, y1, x2, y2]  (brackets optional)  x1 <= x2, y1 <= y2
//   mcq        A | (A) | A.                           one letter
//   binary     yes | no                               case-insensitive
//   numerical  one finite real
//   ocr/open   any non-empty text
//
// All functions here are pure.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rmsd {

enum class TaskType : std::uint8_t {
  kTemporalGrounding,
  kSpatialGrounding,
  kMultipleChoice,
  kBinaryQA,
  kNumerical,
  kOCR,
  kOpenEnded,
};

enum class TaskFamily : std::uint8_t { kClosedEnded, kOpenEnded };

inline constexpr TaskType kAllTaskTypes[] = {
    TaskType::kTemporalGrounding, TaskType::kSpatialGrounding,
    TaskType::kMultipleChoice,    TaskType::kBinaryQA,
    TaskType::kNumerical,         TaskType::kOCR,
    TaskType::kOpenEnded,
};

constexpr TaskFamily family(TaskType t) {
  return t == TaskType::kOpenEnded ? TaskFamily::kOpenEnded
                                   : TaskFamily::kClosedEnded;
}
constexpr bool is_closed_ended(TaskType t) {
  return family(t) == TaskFamily::kClosedEnded;
}

std::string_view task_name(TaskType t);
// Throws Error(kParse) on an unknown name.
TaskType task_from_name(std::string_view name);

struct TemporalSegment {
  double start = 0.0;  // seconds
  double end = 0.0;
  bool operator==(const TemporalSegment&) const = default;
};

// Normalized coordinates in [0,1].
struct SpatialBox {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  bool operator==(const SpatialBox&) const = default;
};

struct OptionLetter {
  char letter = 'A';  // always uppercase once parsed
  bool operator==(const OptionLetter&) const = default;
};

struct Binary {
  bool value = false;
  bool operator==(const Binary&) const = default;
};

struct Number {
  double value = 0.0;
  bool operator==(const Number&) const = default;
};

struct Text {
  std::string value;
  bool operator==(const Text&) const = default;
};

using AnswerPayload =
    std::variant<TemporalSegment, SpatialBox, OptionLetter, Binary, Number, Text>;

// The payload alternative a task's grammar produces.
std::size_t payload_index_for(TaskType t);

struct SupervisionExample {
  std::string id;
  TaskType task = TaskType::kMultipleChoice;
  std::string question;
  std::optional<AnswerPayload> ground_truth;  // absent for open-ended
  int option_count = 0;                       // multiple choice only
  std::vector<AnswerPayload> answer_space;    // simulator use; may be empty
};

// Throws Error(kContract) when the example breaks its invariants.
void validate_example(const SupervisionExample& ex);

struct ParsedResponse {
  std::string raw;
  bool outer_valid = false;
  bool task_valid = false;
  std::optional<AnswerPayload> payload;
  bool has_think = false;
  // Non-fatal notes, e.g. box coordinates clamped into [0,1].
  std::vector<std::string> diagnostics;

  bool valid() const { return outer_valid && task_valid; }
  bool operator==(const ParsedResponse&) const = default;
};

struct ParseOptions {
  // When > 0, multiple-choice letters beyond this many options are rejected.
  int option_count = 0;
};

bool validate_outer(std::string_view raw);
bool validate_task_format(std::string_view raw, TaskType task,
                          const ParseOptions& opts = {});
ParsedResponse parse_response(std::string_view raw, TaskType task,
                              const ParseOptions& opts = {});
inline ParsedResponse parse_response(std::string_view raw,
                                     const SupervisionExample& ex) {
  return parse_response(raw, ex.task, ParseOptions{ex.option_count});
}

// Canonical rendering; parse_response(render(p), t).payload == p for every
// well-formed payload of the task's alternative.
std::string render_answer_content(const AnswerPayload& p);
std::string render_response(const AnswerPayload& p,
                            std::string_view thinking = {});

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace rmsd
