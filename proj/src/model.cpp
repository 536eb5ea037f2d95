#include "arunet/model.hpp"

#include <stdexcept>
#include <string>

#include "arunet/ops.hpp"

namespace arunet {

std::vector<int64_t> token_index_per_byte(const std::vector<int>& mask) {
  std::vector<int64_t> t(mask.size());
  int64_t count = 0;
  for (size_t j = 0; j < mask.size(); ++j) {
    count += mask[j];
    if (count == 0) {
      throw std::runtime_error("token_index_per_byte: byte 0 precedes the first boundary");
    }
    t[j] = count - 1;
  }
  return t;
}

Tensor downsample(const Tensor& x, const std::vector<int>& mask) {
  if (static_cast<int64_t>(mask.size()) != x.rows()) {
    throw std::runtime_error("downsample: mask length " + std::to_string(mask.size()) +
                             " does not match " + shape_str(x.shape));
  }
  std::vector<int64_t> pos;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) pos.push_back(static_cast<int64_t>(i));
  }
  if (pos.empty()) throw std::runtime_error("downsample: all-zero boundary mask");
  return take_rows(x, pos);
}

Tensor upsample(const Tensor& y_tok, const Tensor& x, const std::vector<int>& mask) {
  if (static_cast<int64_t>(mask.size()) != x.rows()) {
    throw std::runtime_error("upsample: mask length " + std::to_string(mask.size()) +
                             " does not match " + shape_str(x.shape));
  }
  int64_t m = 0;
  for (int v : mask) m += v;
  if (m != y_tok.rows()) {
    throw std::runtime_error("upsample: " + std::to_string(m) + " boundaries but " +
                             std::to_string(y_tok.rows()) + " token rows");
  }
  return add(x, take_rows(y_tok, token_index_per_byte(mask)));
}

namespace {

Tensor clone_param(const Tensor& t) {
  return Tensor::from_values(t.shape, *t.data, /*requires_grad=*/true);
}

}  // namespace

AruModel::AruModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, 0x696e6974ULL));  // "init"
  const int64_t d = cfg_.embedding_dim;
  constexpr double kStd = 0.02;

  embedding_ = init_matrix(cfg_.vocab_size, d, kStd, rng);
  for (int64_t i = 0; i < cfg_.n_down_layers; ++i) {
    down_.push_back(DecoderLayer::init(d, cfg_.num_heads, d, cfg_.byte_window, cfg_.rope_base, rng));
  }
  for (int64_t i = 0; i < cfg_.n_mid_layers; ++i) {
    mid_.push_back(
        DecoderLayer::init(d, cfg_.num_heads, 4 * d, kFullAttention, cfg_.rope_base, rng));
  }
  for (int64_t i = 0; i < cfg_.n_up_layers; ++i) {
    up_.push_back(DecoderLayer::init(d, cfg_.num_heads, d, cfg_.byte_window, cfg_.rope_base, rng));
  }
  final_gain_ = Tensor::full({d}, 1.0, true);
  w_unembed_ = init_matrix(d, cfg_.vocab_size, kStd, rng);
  w_early_ = clone_param(w_unembed_);  // exact copy at init
  policy_ = BoundaryPolicy(d, cfg_.policy_window, cfg_.logit_scale, cfg_.target_rate,
                           cfg_.softcap);

  params_.emplace_back("embed.table", embedding_);
  for (size_t i = 0; i < down_.size(); ++i) {
    down_[i].collect_params("down." + std::to_string(i), params_);
  }
  for (size_t i = 0; i < mid_.size(); ++i) {
    mid_[i].collect_params("mid." + std::to_string(i), params_);
  }
  for (size_t i = 0; i < up_.size(); ++i) {
    up_[i].collect_params("up." + std::to_string(i), params_);
  }
  params_.emplace_back("final_norm.gain", final_gain_);
  params_.emplace_back("unembed.w", w_unembed_);
  params_.emplace_back("early.w", w_early_);
  policy_.collect_params("policy", params_);
}

Tensor AruModel::encode(const std::vector<int64_t>& ids) const {
  for (int64_t id : ids) {
    if (id < 0 || id >= cfg_.vocab_size) {
      throw std::runtime_error("encode: id " + std::to_string(id) + " out of range [0," +
                               std::to_string(cfg_.vocab_size) + ")");
    }
  }
  Tensor h = take_rows(embedding_, ids);
  for (const DecoderLayer& layer : down_) h = layer.forward(h);
  return h;
}

Tensor AruModel::early_exit_logits(const Tensor& x_enc) const {
  return softcap(matmul(x_enc, w_early_), cfg_.softcap);
}

Tensor AruModel::lm_head(const Tensor& y_dec) const {
  return softcap(matmul(rmsnorm(y_dec, final_gain_), w_unembed_), cfg_.softcap);
}

ForwardTrace AruModel::forward(const std::vector<int64_t>& ids, const BoundaryDecision& decision,
                               bool train_mode) const {
  ForwardTrace t;
  t.x_enc = encode(ids);
  t.boundary = policy_.run(t.x_enc, decision, /*train_logits=*/train_mode);
  t.x_tok = downsample(t.x_enc, t.boundary.a);
  t.num_tokens = t.x_tok.rows();

  Tensor h = t.x_tok;
  for (const DecoderLayer& layer : mid_) h = layer.forward(h);
  t.y_tok = h;

  Tensor y = upsample(t.y_tok, t.x_enc, t.boundary.a);
  for (const DecoderLayer& layer : up_) y = layer.forward(y);
  t.y_dec = y;

  t.lm_logits = lm_head(t.y_dec);
  t.early_logits = early_exit_logits(t.x_enc);
  return t;
}

}  // namespace arunet
