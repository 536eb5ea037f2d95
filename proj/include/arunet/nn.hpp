#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "arunet/ops.hpp"
#include "arunet/rng.hpp"
#include "arunet/tensor.hpp"

namespace arunet {

// Window value meaning full causal attention.
inline constexpr int64_t kFullAttention = std::numeric_limits<int64_t>::max();

using ParamList = std::vector<std::pair<std::string, Tensor>>;

// y_i = gain * x_i / rms(x_i), rms over the last axis.
Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps = 1e-6);

struct AttentionParams {
  Tensor wq, wk, wv, wo;  // each (d, d)
};

// Dense masked multi-head attention with RoPE on q and k. Position i attends
// to positions max(0, i-window+1)..i; window = kFullAttention means all of
// 0..i.
Tensor causal_attention(const Tensor& x, const AttentionParams& p, int64_t num_heads,
                        int64_t window, double rope_base);

struct MlpParams {
  Tensor w_gate, w_up;  // (d, hidden)
  Tensor w_down;        // (hidden, d)
};

// GeGLU: (gelu(x W_gate) * (x W_up)) W_down. No biases anywhere.
Tensor geglu_mlp(const Tensor& x, const MlpParams& p);

// One decoder layer, Gemma-2 style: both sublayers are wrapped in pre- and
// post-RMSNorm and added residually.
struct DecoderLayer {
  AttentionParams attn;
  MlpParams mlp;
  Tensor pre_attn_gain, post_attn_gain, pre_mlp_gain, post_mlp_gain;  // (d)
  int64_t num_heads = 1;
  int64_t window = kFullAttention;
  double rope_base = 10000.0;

  static DecoderLayer init(int64_t dim, int64_t num_heads, int64_t mlp_hidden, int64_t window,
                           double rope_base, Rng& rng);

  Tensor forward(const Tensor& x) const;
  void collect_params(const std::string& prefix, ParamList& out);
};

// Gaussian-initialized parameter matrix.
Tensor init_matrix(int64_t rows, int64_t cols, double stddev, Rng& rng);

}  // namespace arunet
