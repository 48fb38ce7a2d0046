#include "rmsd/quality_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "rmsd/error.hpp"

namespace rmsd {

namespace {

std::string canonical_text(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

double temporal_iou(const TemporalSegment& a, const TemporalSegment& b) {
  require(a.start <= a.end && b.start <= b.end, "temporal_iou: segment with end < start");
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = (a.end - a.start) + (b.end - b.start) - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double spatial_iou(const SpatialBox& a, const SpatialBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

int exact_match(const AnswerPayload& pred, const AnswerPayload& gt) {
  require(pred.index() == gt.index(), "exact_match: payload kinds differ");
  if (const auto* p = std::get_if<OptionLetter>(&pred)) {
    const auto& g = std::get<OptionLetter>(gt);
    return std::toupper(static_cast<unsigned char>(p->letter)) ==
                   std::toupper(static_cast<unsigned char>(g.letter))
               ? 1
               : 0;
  }
  if (const auto* p = std::get_if<Text>(&pred)) {
    return canonical_text(p->value) == canonical_text(std::get<Text>(gt).value) ? 1 : 0;
  }
  return pred == gt ? 1 : 0;
}

int epsilon_accuracy(const Number& pred, const Number& gt, double eps_rel) {
  require(eps_rel > 0.0, "epsilon_accuracy: eps_rel must be positive");
  const double tol = eps_rel * std::max(std::abs(gt.value), 1.0);
  return std::abs(pred.value - gt.value) <= tol ? 1 : 0;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

double ocr_similarity(const Text& pred, const Text& gt) {
  const auto a = canonical_text(pred.value);
  const auto b = canonical_text(gt.value);
  const std::size_t len = std::max(a.size(), b.size());
  if (len == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(len);
}

double task_metric(TaskType task, const AnswerPayload& pred,
                   const AnswerPayload& gt, const MetricConfig& cfg) {
  switch (task) {
    case TaskType::kTemporalGrounding:
      return temporal_iou(std::get<TemporalSegment>(pred), std::get<TemporalSegment>(gt));
    case TaskType::kSpatialGrounding:
      return spatial_iou(std::get<SpatialBox>(pred), std::get<SpatialBox>(gt));
    case TaskType::kMultipleChoice:
    case TaskType::kBinaryQA:
      return exact_match(pred, gt);
    case TaskType::kNumerical:
      return epsilon_accuracy(std::get<Number>(pred), std::get<Number>(gt), cfg.eps_rel);
    case TaskType::kOCR:
      return cfg.ocr_mode == OcrMode::kExact
                 ? exact_match(pred, gt)
                 : ocr_similarity(std::get<Text>(pred), std::get<Text>(gt));
    case TaskType::kOpenEnded:
      break;
  }
  fail(ErrorCode::kContract, "task_metric: open-ended tasks have no ground-truth metric");
}

double quality_score(const ParsedResponse& resp, const SupervisionExample& ex,
                     const MetricConfig& cfg) {
  require(is_closed_ended(ex.task), "quality_score: undefined for open-ended task '" + ex.id + "'");
  require(ex.ground_truth.has_value(), "quality_score: example '" + ex.id + "' lacks ground truth");
  if (!resp.valid() || !resp.payload) return 0.0;
  if (resp.payload->index() != ex.ground_truth->index()) return 0.0;
  return task_metric(ex.task, *resp.payload, *ex.ground_truth, cfg);
}

}  // namespace rmsd
