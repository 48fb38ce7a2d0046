#include <gtest/gtest.h>

#include <random>

#include "rmsd/error.hpp"
#include "rmsd/task_model.hpp"

using namespace rmsd;

TEST(TaskType, Families) {
  for (TaskType t : kAllTaskTypes) {
    EXPECT_EQ(family(t) == TaskFamily::kOpenEnded, t == TaskType::kOpenEnded);
    EXPECT_EQ(task_from_name(task_name(t)), t);
  }
  EXPECT_THROW(task_from_name("video_captioning"), Error);
}

TEST(ValidateOuter, Examples) {
  EXPECT_TRUE(validate_outer("<answer>B</answer>"));
  EXPECT_FALSE(validate_outer("no tags at all"));
  EXPECT_FALSE(validate_outer("<answer>B"));
}

TEST(ValidateOuter, EnvelopeRules) {
  EXPECT_TRUE(validate_outer("<think>hmm</think><answer>B</answer>"));
  EXPECT_TRUE(validate_outer("  prose <answer>B</answer> trailing"));
  EXPECT_FALSE(validate_outer("<answer>B</answer><answer>C</answer>"));
  EXPECT_FALSE(validate_outer("<answer>B</answer><think>late</think>"));
  EXPECT_FALSE(validate_outer("<think>unclosed<answer>B</answer>"));
  EXPECT_FALSE(validate_outer("<think>a</think><think>b</think><answer>B</answer>"));
  EXPECT_FALSE(validate_outer("</answer>B<answer>"));
  EXPECT_FALSE(validate_outer(""));
}

TEST(ValidateTaskFormat, Examples) {
  EXPECT_TRUE(validate_task_format("<answer><t>1.0</t> <t>4.5</t></answer>", TaskType::kTemporalGrounding));
  EXPECT_FALSE(validate_task_format("<answer>maybe</answer>", TaskType::kBinaryQA));
  EXPECT_FALSE(validate_task_format("<answer><t>4.5</t></answer>", TaskType::kTemporalGrounding));
}

TEST(ValidateTaskFormat, Grammars) {
  EXPECT_TRUE(validate_task_format("<answer><t>1</t> to <t>2</t></answer>", TaskType::kTemporalGrounding));
  EXPECT_FALSE(validate_task_format("<answer><t>-1</t> <t>2</t></answer>", TaskType::kTemporalGrounding));
  EXPECT_TRUE(validate_task_format("<answer>[0.1, 0.2, 0.3, 0.4]</answer>", TaskType::kSpatialGrounding));
  EXPECT_FALSE(validate_task_format("<answer>[0.1, 0.2, 0.3]</answer>", TaskType::kSpatialGrounding));
  EXPECT_FALSE(validate_task_format("<answer>[0.5, 0.2, 0.3, 0.4]</answer>", TaskType::kSpatialGrounding));
  EXPECT_TRUE(validate_task_format("<answer>(b)</answer>", TaskType::kMultipleChoice));
  EXPECT_FALSE(validate_task_format("<answer>AB</answer>", TaskType::kMultipleChoice));
  EXPECT_FALSE(validate_task_format("<answer>E</answer>", TaskType::kMultipleChoice, {4}));
  EXPECT_TRUE(validate_task_format("<answer> YES </answer>", TaskType::kBinaryQA));
  EXPECT_TRUE(validate_task_format("<answer>-3.5e2</answer>", TaskType::kNumerical));
  EXPECT_FALSE(validate_task_format("<answer>nan</answer>", TaskType::kNumerical));
  EXPECT_FALSE(validate_task_format("<answer>3 apples</answer>", TaskType::kNumerical));
  EXPECT_FALSE(validate_task_format("<answer>   </answer>", TaskType::kOCR));
  EXPECT_TRUE(validate_task_format("<answer>STOP</answer>", TaskType::kOCR));
  EXPECT_FALSE(validate_task_format("C", TaskType::kMultipleChoice));  // no envelope
}

TEST(ParseResponse, Examples) {
  const auto mcq = parse_response("<answer>C</answer>", TaskType::kMultipleChoice);
  EXPECT_TRUE(mcq.outer_valid);
  EXPECT_TRUE(mcq.task_valid);
  ASSERT_TRUE(mcq.payload);
  EXPECT_EQ(std::get<OptionLetter>(*mcq.payload).letter, 'C');

  const auto garbage = parse_response("garbage", TaskType::kNumerical);
  EXPECT_FALSE(garbage.outer_valid);
  EXPECT_FALSE(garbage.task_valid);
  EXPECT_FALSE(garbage.payload);

  const auto reversed =
      parse_response("<answer><t>5.0</t> <t>2.0</t></answer>", TaskType::kTemporalGrounding);
  EXPECT_TRUE(reversed.outer_valid);
  EXPECT_FALSE(reversed.task_valid);
  EXPECT_FALSE(reversed.payload);
}

TEST(ParseResponse, SpatialClampIsValidWithDiagnostic) {
  const auto r = parse_response("<answer>[-0.1, 0.2, 1.3, 0.4]</answer>", TaskType::kSpatialGrounding);
  ASSERT_TRUE(r.valid());
  EXPECT_EQ(std::get<SpatialBox>(*r.payload), (SpatialBox{0.0, 0.2, 1.0, 0.4}));
  EXPECT_FALSE(r.diagnostics.empty());
}

TEST(ParseResponse, ThinkFlag) {
  EXPECT_TRUE(parse_response("<think>x</think><answer>yes</answer>", TaskType::kBinaryQA).has_think);
  EXPECT_FALSE(parse_response("<answer>yes</answer>", TaskType::kBinaryQA).has_think);
}

namespace {

std::vector<std::pair<TaskType, AnswerPayload>> payload_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> wide(-1e6, 1e6);
  std::vector<std::pair<TaskType, AnswerPayload>> out;
  const std::string alphabet = "abcXYZ 019-_.,:;!?";
  for (std::size_t i = 0; i < n; ++i) {
    switch (i % 6) {
      case 0: {
        double a = u(rng) * 300, b = u(rng) * 300;
        if (a > b) std::swap(a, b);
        out.emplace_back(TaskType::kTemporalGrounding, TemporalSegment{a, b});
        break;
      }
      case 1: {
        double x1 = u(rng), x2 = u(rng), y1 = u(rng), y2 = u(rng);
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        out.emplace_back(TaskType::kSpatialGrounding, SpatialBox{x1, y1, x2, y2});
        break;
      }
      case 2:
        out.emplace_back(TaskType::kMultipleChoice,
                         OptionLetter{static_cast<char>('A' + rng() % 26)});
        break;
      case 3:
        out.emplace_back(TaskType::kBinaryQA, Binary{(rng() & 1) != 0});
        break;
      case 4:
        out.emplace_back(TaskType::kNumerical, Number{wide(rng)});
        break;
      default: {
        std::string s(1 + rng() % 12, 'a');
        for (auto& c : s) c = alphabet[rng() % alphabet.size()];
        s.front() = 'q';  // canonical text has no surrounding blanks
        s.back() = 'z';
        out.emplace_back(TaskType::kOCR, Text{s});
      }
    }
  }
  return out;
}

}  // namespace

TEST(ParseResponse, RoundTripProperty) {
  for (const auto& [task, p] : payload_corpus(3000, 7)) {
    for (std::string_view think : {std::string_view{}, std::string_view{"reasoning"}}) {
      const auto raw = render_response(p, think);
      const auto r = parse_response(raw, task);
      ASSERT_TRUE(r.valid()) << raw;
      ASSERT_EQ(*r.payload, p) << raw;
      EXPECT_EQ(r.has_think, !think.empty());
    }
  }
}

TEST(ParseResponse, FuzzInvariants) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces = {"<answer>", "</answer>", "<think>", "</think>", "<t>", "</t>",
                                           "1.5", "B", "yes", "[0.1,0.2,0.3,0.4]", " ", "to", "x", "<", ">"};
  for (int i = 0; i < 5000; ++i) {
    std::string raw;
    const int n = static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) raw += pieces[rng() % pieces.size()];
    for (TaskType t : kAllTaskTypes) {
      const auto r = parse_response(raw, t);
      if (r.task_valid) EXPECT_TRUE(r.outer_valid) << raw;
      EXPECT_EQ(r.payload.has_value(), r.outer_valid && r.task_valid) << raw;
      EXPECT_EQ(r.outer_valid, validate_outer(raw));
      EXPECT_EQ(r.task_valid, validate_task_format(raw, t));
      EXPECT_EQ(r, parse_response(raw, t));  // deterministic
    }
  }
}

TEST(SupervisionExample, Validation) {
  SupervisionExample ok{"e1", TaskType::kMultipleChoice, "q", OptionLetter{'B'}, 4, {}};
  EXPECT_NO_THROW(validate_example(ok));

  SupervisionExample no_gt = ok;
  no_gt.ground_truth.reset();
  EXPECT_THROW(validate_example(no_gt), Error);

  SupervisionExample open{"e2", TaskType::kOpenEnded, "q", Text{"x"}, 0, {}};
  EXPECT_THROW(validate_example(open), Error);
  open.ground_truth.reset();
  EXPECT_NO_THROW(validate_example(open));

  SupervisionExample space = ok;
  space.answer_space = {OptionLetter{'A'}, OptionLetter{'C'}};
  EXPECT_THROW(validate_example(space), Error);  // ground truth missing from the space
  space.answer_space.push_back(OptionLetter{'B'});
  EXPECT_NO_THROW(validate_example(space));
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 2.5}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}
