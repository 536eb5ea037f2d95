#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arunet/nn.hpp"
#include "arunet/ops.hpp"
#include "arunet/rng.hpp"
#include "arunet/tensor.hpp"

namespace arunet {

// Per-position record of one boundary pass. a[0] is always 1 (a sequence must
// start a token); its logpi entry is fixed to 0 and excluded from the policy
// loss. In train mode l = softcap(l_scaled); in eval mode l = l_scaled.
struct BoundaryTrace {
  std::vector<int> a;         // sampled/forced decisions, length N
  Tensor p;                   // (N), p_i = sigmoid(l_i)
  Tensor l_raw;               // (N)
  Tensor l_scaled;            // (N)
  Tensor l;                   // (N)
  Tensor logpi;               // (N), entry 0 is 0

  std::vector<int64_t> positions() const;  // {i : a_i = 1}, ascending
  int64_t num_boundaries() const;
};

// How decisions are made during a forward pass.
struct BoundaryDecision {
  enum class Kind { kSample, kForced, kThreshold };
  Kind kind = Kind::kSample;
  Rng* rng = nullptr;
  const std::vector<int>* forced_mask = nullptr;
  double threshold = 0.5;

  static BoundaryDecision sample(Rng& rng);
  static BoundaryDecision forced(const std::vector<int>& mask);
  static BoundaryDecision thresholded(double t = 0.5);
};

// l_scaled = l_raw / D + sigma^{-1}(target_rate)
Tensor scale_and_shift(const Tensor& l_raw, double logit_scale, double target_rate);
double inverse_sigmoid(double p);

// The stochastic token-boundary policy: a windowed logit head over byte-level
// representations. Column j of the weight matrix is the projection applied to
// X_i when a boundary was drawn j positions back (column 0 is unconditional).
class BoundaryPolicy {
 public:
  BoundaryPolicy() = default;
  BoundaryPolicy(int64_t dim, int64_t window, double logit_scale, double target_rate, double cap);

  // Runs the sequential logit/sample scan, then rebuilds the differentiable
  // logit path with the realized mask. The scan and the rebuilt tensors use
  // identical arithmetic, so trace values match the sampled ones bit-for-bit.
  BoundaryTrace run(const Tensor& x, const BoundaryDecision& decision, bool train_logits) const;

  Tensor& weights() { return w_; }
  const Tensor& weights() const { return w_; }
  int64_t window() const { return window_; }
  double target_rate() const { return target_rate_; }
  void collect_params(const std::string& prefix, ParamList& out);

 private:
  Tensor w_;  // (d, window+1), zero-initialized
  int64_t window_ = 8;
  double logit_scale_ = 16.0;
  double target_rate_ = 0.2;
  double cap_ = 30.0;
};

}  // namespace arunet
