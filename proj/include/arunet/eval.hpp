#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arunet/model.hpp"

namespace arunet {

// Exactly round(n * rate) boundaries at evenly spaced positions, position 0
// included.
std::vector<int> uniform_baseline_mask(int64_t n, double rate);

// Matrix (rank-2) parameters split by the level they run at. The embedding
// table is excluded (lookup, not a matmul); policy projections, the
// unembedding and the early head count as byte-level.
struct ParamCensus {
  int64_t byte_level = 0;
  int64_t token_level = 0;
};
ParamCensus matrix_param_census(const AruModel& model);

// 6 * (P_byte * n + P_token * m): forward+backward matmul FLOPs.
int64_t flops_per_sequence(const ParamCensus& census, int64_t n, int64_t m);

struct EvalReport {
  double bits_per_byte = 0.0;
  double achieved_rate = 0.0;  // sum M / sum N
  int64_t flops_per_sequence = 0;  // averaged over evaluated sequences
  // Present only when ground-truth boundaries were supplied.
  std::optional<double> precision;         // exact-offset match, thresholded mask
  std::optional<double> recall;
  std::optional<double> precision_pm1;     // +-1 byte tolerance
  std::optional<double> recall_pm1;
  std::optional<double> mean_p_at_starts;  // boundary probability at true word starts
  std::optional<double> mean_p_at_nonstarts;

  static std::string csv_header();
  std::string csv_row() const;
};

struct EvalOptions {
  bool train_mode = false;  // train-mode boundary logits (softcapped) instead of eval
  uint64_t seed = 0;
  bool uniform_mask = false;         // force the uniform baseline mask
  double uniform_rate = 0.2;
  double boundary_threshold = 0.5;   // for precision/recall
};

// Average per-byte LM loss (bits), achieved downsample rate, and (with ground
// truth) boundary quality. Boundaries are sampled exactly as in training.
EvalReport evaluate(const AruModel& model, const std::vector<std::string>& docs,
                    const EvalOptions& opts,
                    const std::vector<std::vector<int64_t>>* ground_truth = nullptr);

}  // namespace arunet
