#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "arunet/config.hpp"
#include "arunet/data.hpp"
#include "arunet/model.hpp"
#include "arunet/objective.hpp"
#include "arunet/optim.hpp"

namespace arunet {

struct TrainStepResult {
  LossReport report;
  double grad_norm = 0.0;
  bool applied = true;  // false when the step was aborted on non-finite gradients
};

// One optimization step: forward every row with its (step, row)-derived RNG
// stream, assemble losses, backprop, update. Pure given (model, opt, step,
// bytes_before), which is what the resume contract rests on.
TrainStepResult train_step(AruModel& model, AdamW& opt, const ByteBatch& batch,
                           const Config& cfg, int64_t step, int64_t bytes_before);

struct TrainResult {
  int64_t steps = 0;
  int64_t bytes_seen = 0;
  int64_t aborted_steps = 0;
  std::string final_checkpoint;
};

// Full loop: deterministic batch schedule, metrics CSV (out_dir/metrics.csv),
// periodic checkpoints (out_dir/ckpt_<step>.bin) and a final one. Training
// data is cycled with a fresh shuffle each epoch.
TrainResult train(AruModel& model, std::vector<std::string> sequences, const Config& cfg,
                  std::ostream* log = nullptr, const std::string& resume_path = "");

std::string metrics_csv_header();

}  // namespace arunet
