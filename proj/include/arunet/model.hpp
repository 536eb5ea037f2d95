#pragma once

#include <cstdint>
#include <vector>

#include "arunet/config.hpp"
#include "arunet/nn.hpp"
#include "arunet/policy.hpp"
#include "arunet/tensor.hpp"

namespace arunet {

// Maps each byte position to the index of the token containing it:
// t(j) = (number of boundaries at positions <= j) - 1. Requires mask[0] = 1.
std::vector<int64_t> token_index_per_byte(const std::vector<int>& mask);

// Selects the rows of x where mask is set. Errors on an all-zero mask.
Tensor downsample(const Tensor& x, const std::vector<int>& mask);

// Distribute-then-add: out_j = x_j + y_tok[t(j)].
Tensor upsample(const Tensor& y_tok, const Tensor& x, const std::vector<int>& mask);

// Everything one forward pass produces.
struct ForwardTrace {
  Tensor x_enc;         // (N,d) byte encodings
  BoundaryTrace boundary;
  Tensor x_tok;         // (M,d) selected token representations
  Tensor y_tok;         // (M,d) after the token-level backbone
  Tensor y_dec;         // (N,d) upsampled byte representations
  Tensor lm_logits;     // (N,V)
  Tensor early_logits;  // (N,V)
  int64_t num_tokens = 0;  // M
};

// Byte-level autoregressive U-net: embed -> sliding-window encoder stack ->
// stochastic boundary policy -> select -> full-attention token stack ->
// distribute-then-add -> sliding-window decoder stack -> unembed. An early-exit
// head reads next-byte logits straight off the encoder output.
class AruModel {
 public:
  AruModel(const ModelConfig& cfg, uint64_t seed);

  // train_mode controls only the boundary-logit softcap (applied in train,
  // skipped in eval); LM and early-head logits are always softcapped.
  ForwardTrace forward(const std::vector<int64_t>& ids, const BoundaryDecision& decision,
                       bool train_mode) const;

  Tensor encode(const std::vector<int64_t>& ids) const;
  Tensor early_exit_logits(const Tensor& x_enc) const;
  Tensor lm_head(const Tensor& y_dec) const;

  const ModelConfig& config() const { return cfg_; }
  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }
  BoundaryPolicy& policy() { return policy_; }
  const BoundaryPolicy& policy() const { return policy_; }
  const Tensor& unembed_weights() const { return w_unembed_; }
  const Tensor& early_head_weights() const { return w_early_; }

 private:
  ModelConfig cfg_;
  Tensor embedding_;  // (V,d)
  std::vector<DecoderLayer> down_, mid_, up_;
  Tensor final_gain_;            // (d)
  Tensor w_unembed_, w_early_;   // (d,V); early head starts as an exact copy
  BoundaryPolicy policy_;
  ParamList params_;
};

}  // namespace arunet
