#pragma once

#include <string_view>

#include "rmsd/task_model.hpp"

namespace rmsd {

enum class OcrMode { kEdit, kExact };

struct MetricConfig {
  // |pred - gt| <= eps_rel * max(|gt|, 1) counts as correct.
  double eps_rel = 0.05;
  OcrMode ocr_mode = OcrMode::kEdit;
  // Grounding answers with IoU at or above this count as correct when
  // accuracy is thresholded (evaluation only; quality stays graded).
  double success_iou = 0.3;
};

// Interval IoU. Two identical zero-length segments score 1.
double temporal_iou(const TemporalSegment& a, const TemporalSegment& b);
double spatial_iou(const SpatialBox& a, const SpatialBox& b);

// Option letters compare case-folded; text compares case-folded and trimmed.
// Throws Error(kContract) if the payloads hold different alternatives.
int exact_match(const AnswerPayload& pred, const AnswerPayload& gt);

int epsilon_accuracy(const Number& pred, const Number& gt, double eps_rel = 0.05);

// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);
// 1 - edit_distance / max_len over canonicalized strings; 1 when both empty.
double ocr_similarity(const Text& pred, const Text& gt);

// Ground-truth metric for a task, without the validity gate.
double task_metric(TaskType task, const AnswerPayload& pred,
                   const AnswerPayload& gt, const MetricConfig& cfg = {});

// Validity-gated quality in [0,1]. Throws Error(kContract) for open-ended
// examples, for which quality is undefined.
double quality_score(const ParsedResponse& resp, const SupervisionExample& ex,
                     const MetricConfig& cfg = {});

}  // namespace rmsd
