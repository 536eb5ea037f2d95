#include "arunet/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace arunet {

namespace {

// Additive causal/sliding-window mask; disallowed scores get a large negative
// value so they underflow to exactly zero probability in the row softmax.
Tensor attention_mask(int64_t n, int64_t window) {
  Tensor m = Tensor::zeros({n, n});
  constexpr double kNegInf = -1e30;
  for (int64_t i = 0; i < n; ++i) {
    int64_t lo = window == kFullAttention ? 0 : std::max<int64_t>(0, i - window + 1);
    double* row = m.data->data() + i * n;
    for (int64_t j = 0; j < n; ++j) {
      if (j < lo || j > i) row[j] = kNegInf;
    }
  }
  return m;
}

}  // namespace

Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps) {
  if (x.ndim() != 2) {
    throw std::runtime_error("rmsnorm: expected rank-2 input, got shape " + shape_str(x.shape));
  }
  const int64_t n = x.rows(), d = x.cols();
  Tensor ms = mean_axis(mul(x, x), 1);                    // (n)
  Tensor inv_rms = powc(add_scalar(ms, eps), -0.5);       // (n)
  Tensor normed = mul(x, broadcast_col(inv_rms, d));      // (n,d)
  return mul(normed, broadcast_row(gain, n));
}

Tensor causal_attention(const Tensor& x, const AttentionParams& p, int64_t num_heads,
                        int64_t window, double rope_base) {
  if (window < 1) {
    throw std::runtime_error("causal_attention: window must be >= 1, got " +
                             std::to_string(window));
  }
  const int64_t n = x.rows(), d = x.cols();
  if (d % num_heads != 0) {
    throw std::runtime_error("causal_attention: dim " + std::to_string(d) +
                             " not divisible by " + std::to_string(num_heads) + " heads");
  }
  const int64_t dh = d / num_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = matmul(x, p.wq);
  Tensor k = matmul(x, p.wk);
  Tensor v = matmul(x, p.wv);
  Tensor mask = attention_mask(n, window);

  Tensor ctx;
  for (int64_t h = 0; h < num_heads; ++h) {
    Tensor qh = rope_rows(slice_cols(q, h * dh, dh), rope_base);
    Tensor kh = rope_rows(slice_cols(k, h * dh, dh), rope_base);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = add(scale(matmul(qh, transpose(kh)), inv_sqrt_dh), mask);
    Tensor probs = softmax_rows(scores);
    Tensor out_h = matmul(probs, vh);
    ctx = h == 0 ? out_h : concat_cols(ctx, out_h);
  }
  return matmul(ctx, p.wo);
}

Tensor geglu_mlp(const Tensor& x, const MlpParams& p) {
  Tensor gate = gelu(matmul(x, p.w_gate));
  Tensor up = matmul(x, p.w_up);
  return matmul(mul(gate, up), p.w_down);
}

Tensor init_matrix(int64_t rows, int64_t cols, double stddev, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols}, /*requires_grad=*/true);
  for (auto& v : *t.data) v = stddev * rng.normal();
  return t;
}

DecoderLayer DecoderLayer::init(int64_t dim, int64_t num_heads, int64_t mlp_hidden,
                                int64_t window, double rope_base, Rng& rng) {
  constexpr double kStd = 0.02;
  DecoderLayer l;
  l.attn.wq = init_matrix(dim, dim, kStd, rng);
  l.attn.wk = init_matrix(dim, dim, kStd, rng);
  l.attn.wv = init_matrix(dim, dim, kStd, rng);
  l.attn.wo = init_matrix(dim, dim, kStd, rng);
  l.mlp.w_gate = init_matrix(dim, mlp_hidden, kStd, rng);
  l.mlp.w_up = init_matrix(dim, mlp_hidden, kStd, rng);
  l.mlp.w_down = init_matrix(mlp_hidden, dim, kStd, rng);
  l.pre_attn_gain = Tensor::full({dim}, 1.0, true);
  l.post_attn_gain = Tensor::full({dim}, 1.0, true);
  l.pre_mlp_gain = Tensor::full({dim}, 1.0, true);
  l.post_mlp_gain = Tensor::full({dim}, 1.0, true);
  l.num_heads = num_heads;
  l.window = window;
  l.rope_base = rope_base;
  return l;
}

Tensor DecoderLayer::forward(const Tensor& x) const {
  Tensor a = causal_attention(rmsnorm(x, pre_attn_gain), attn, num_heads, window, rope_base);
  Tensor y = add(x, rmsnorm(a, post_attn_gain));
  Tensor m = geglu_mlp(rmsnorm(y, pre_mlp_gain), mlp);
  return add(y, rmsnorm(m, post_mlp_gain));
}

void DecoderLayer::collect_params(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".attn.wq", attn.wq);
  out.emplace_back(prefix + ".attn.wk", attn.wk);
  out.emplace_back(prefix + ".attn.wv", attn.wv);
  out.emplace_back(prefix + ".attn.wo", attn.wo);
  out.emplace_back(prefix + ".mlp.w_gate", mlp.w_gate);
  out.emplace_back(prefix + ".mlp.w_up", mlp.w_up);
  out.emplace_back(prefix + ".mlp.w_down", mlp.w_down);
  out.emplace_back(prefix + ".pre_attn_gain", pre_attn_gain);
  out.emplace_back(prefix + ".post_attn_gain", post_attn_gain);
  out.emplace_back(prefix + ".pre_mlp_gain", pre_mlp_gain);
  out.emplace_back(prefix + ".post_mlp_gain", post_mlp_gain);
}

}  // namespace arunet
