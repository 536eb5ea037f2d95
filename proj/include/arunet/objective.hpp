#pragma once

#include <cstdint>
#include <vector>

#include "arunet/tensor.hpp"

namespace arunet {

// Next-byte losses of one sequence, plus the realized per-position
// log-probabilities (detached values) the reward computation consumes.
struct SequenceLoss {
  Tensor auto_loss;   // scalar, -sum log p(target_i), nats
  Tensor early_loss;  // scalar, early-exit head
  std::vector<double> lm_logprobs;     // length L, slot i scores target i
  std::vector<double> early_logprobs;  // length L
};

// lm_logits/early_logits are (N,V); targets has length L = N-1 and target i is
// the byte that follows position i.
SequenceLoss autoregressive_losses(const Tensor& lm_logits, const Tensor& early_logits,
                                   const std::vector<int64_t>& targets);

// R_i = lm_i - early_i, elementwise. Both inputs are realized-next-byte
// log-probabilities; the result carries no gradient by construction.
std::vector<double> rewards(const std::vector<double>& lm_logprobs,
                            const std::vector<double>& early_logprobs);

// G_i = R_{i+1} + gamma * G_{i+1}, G at the last position = 0 (strictly future
// rewards). Input and output are indexed by decision position.
std::vector<double> discounted_returns(const std::vector<double>& r, double gamma);

// A_{i,b} = G_{i,b} - mean_b G_{i,b}, per position. Input (B,N) with B >= 2;
// output carries no gradient.
Tensor batch_advantages(const Tensor& returns);

// L_pi = -sum_{b, i>=1} logpi_{b,i} * A_{b,i}. Advantages must be detached;
// position 0 (the forced boundary) is excluded.
Tensor policy_loss(const Tensor& logpi, const Tensor& advantages);

// L_target = mean(l) * detach(mean(p) - target_rate); the detached factor puts
// the same gradient on every logit.
Tensor target_loss(const Tensor& logits, const Tensor& probs, double target_rate);
Tensor target_loss_with_coeff(const Tensor& logits, double coeff);

// L = L_auto + lambda_pi L_pi + lambda_target L_target + lambda_early L_early.
Tensor total_loss(const Tensor& auto_loss, const Tensor& pi_loss, const Tensor& tgt_loss,
                  const Tensor& early_loss, double lambda_pi, double lambda_target,
                  double lambda_early);

// Scalar summary of one optimization step. Losses are batch sums in nats.
struct LossReport {
  double auto_nats = 0.0;
  double early_nats = 0.0;
  double policy = 0.0;
  double target = 0.0;
  double total = 0.0;
  double bits_per_byte = 0.0;
  double mean_boundary_prob = 0.0;
  double downsample_rate = 0.0;
};

double bits_per_byte(double auto_nats, int64_t total_bytes);

}  // namespace arunet
