#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arunet/config.hpp"
#include "arunet/nn.hpp"
#include "arunet/tensor.hpp"

namespace arunet {

// Linear warmup to the peak rate over warmup_bytes, then cosine decay to a
// floor of 10% of the peak at training_bytes.
double lr_at(int64_t bytes_seen, const TrainConfig& cfg);

double global_grad_norm(const ParamList& params);
void clip_gradients(const ParamList& params, double max_norm);

// AdamW with decoupled weight decay and bias-corrected moments.
class AdamW {
 public:
  AdamW(ParamList params, double beta1, double beta2, double eps, double weight_decay);

  // Applies one update. Returns false and leaves parameters, moments and the
  // step counter untouched when any gradient is non-finite.
  bool step(double lr);
  void zero_grad();

  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }

  // Moment buffers by parameter name, for checkpointing.
  const std::vector<double>& first_moment(const std::string& name) const;
  const std::vector<double>& second_moment(const std::string& name) const;
  std::vector<double>& first_moment(const std::string& name);
  std::vector<double>& second_moment(const std::string& name);
  const ParamList& params() const { return params_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  ParamList params_;
  std::vector<Slot> slots_;
  int64_t t_ = 0;
  double beta1_, beta2_, eps_, weight_decay_;
};

}  // namespace arunet
