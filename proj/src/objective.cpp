#include "arunet/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "arunet/ops.hpp"

namespace arunet {

SequenceLoss autoregressive_losses(const Tensor& lm_logits, const Tensor& early_logits,
                                   const std::vector<int64_t>& targets) {
  if (lm_logits.shape != early_logits.shape) {
    throw std::runtime_error("autoregressive_losses: logit shape mismatch " +
                             shape_str(lm_logits.shape) + " vs " + shape_str(early_logits.shape));
  }
  const int64_t len = static_cast<int64_t>(targets.size());
  if (len + 1 != lm_logits.rows()) {
    throw std::runtime_error("autoregressive_losses: " + std::to_string(targets.size()) +
                             " targets for " + std::to_string(lm_logits.rows()) + " positions");
  }
  SequenceLoss out;
  Tensor lm_lp = gather_cols(log_softmax_rows(slice_rows(lm_logits, 0, len)), targets);
  Tensor early_lp = gather_cols(log_softmax_rows(slice_rows(early_logits, 0, len)), targets);
  out.auto_loss = scale(sum(lm_lp), -1.0);
  out.early_loss = scale(sum(early_lp), -1.0);
  out.lm_logprobs = *lm_lp.data;
  out.early_logprobs = *early_lp.data;
  return out;
}

std::vector<double> rewards(const std::vector<double>& lm_logprobs,
                            const std::vector<double>& early_logprobs) {
  if (lm_logprobs.size() != early_logprobs.size()) {
    throw std::runtime_error("rewards: length mismatch " + std::to_string(lm_logprobs.size()) +
                             " vs " + std::to_string(early_logprobs.size()));
  }
  std::vector<double> r(lm_logprobs.size());
  for (size_t i = 0; i < r.size(); ++i) r[i] = lm_logprobs[i] - early_logprobs[i];
  return r;
}

std::vector<double> discounted_returns(const std::vector<double>& r, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::runtime_error("discounted_returns: gamma must be in [0,1], got " +
                             std::to_string(gamma));
  }
  std::vector<double> g(r.size(), 0.0);
  if (r.empty()) return g;
  for (int64_t i = static_cast<int64_t>(r.size()) - 2; i >= 0; --i) {
    g[i] = r[i + 1] + gamma * g[i + 1];
  }
  return g;
}

Tensor batch_advantages(const Tensor& returns) {
  if (returns.ndim() != 2) {
    throw std::runtime_error("batch_advantages: expected (B,N), got " +
                             shape_str(returns.shape));
  }
  const int64_t b = returns.rows(), n = returns.cols();
  if (b < 2) {
    throw std::runtime_error("batch_advantages: centering needs B >= 2, got B = " +
                             std::to_string(b));
  }
  Tensor a = Tensor::zeros({b, n});
  for (int64_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (int64_t i = 0; i < b; ++i) mean += returns.at(i, j);
    mean /= static_cast<double>(b);
    for (int64_t i = 0; i < b; ++i) a.at(i, j) = returns.at(i, j) - mean;
  }
  return a;
}

Tensor policy_loss(const Tensor& logpi, const Tensor& advantages) {
  if (logpi.shape != advantages.shape) {
    throw std::runtime_error("policy_loss: shape mismatch " + shape_str(logpi.shape) + " vs " +
                             shape_str(advantages.shape));
  }
  if (advantages.requires_grad) {
    throw std::runtime_error("policy_loss: advantages must be detached");
  }
  const int64_t n = logpi.cols();
  Tensor body = mul(slice_cols(logpi, 1, n - 1), slice_cols(advantages, 1, n - 1));
  return scale(sum(body), -1.0);
}

Tensor target_loss_with_coeff(const Tensor& logits, double coeff) {
  Tensor mean_logit = scale(sum(logits), 1.0 / static_cast<double>(logits.numel()));
  return scale(mean_logit, coeff);
}

Tensor target_loss(const Tensor& logits, const Tensor& probs, double target_rate) {
  if (logits.shape != probs.shape) {
    throw std::runtime_error("target_loss: shape mismatch " + shape_str(logits.shape) + " vs " +
                             shape_str(probs.shape));
  }
  double mean_p = 0.0;
  for (double v : *probs.data) mean_p += v;
  mean_p /= static_cast<double>(probs.numel());
  return target_loss_with_coeff(logits, mean_p - target_rate);
}

Tensor total_loss(const Tensor& auto_loss, const Tensor& pi_loss, const Tensor& tgt_loss,
                  const Tensor& early_loss, double lambda_pi, double lambda_target,
                  double lambda_early) {
  Tensor t = add(auto_loss, scale(pi_loss, lambda_pi));
  t = add(t, scale(tgt_loss, lambda_target));
  return add(t, scale(early_loss, lambda_early));
}

double bits_per_byte(double auto_nats, int64_t total_bytes) {
  if (total_bytes <= 0) throw std::runtime_error("bits_per_byte: no bytes");
  return auto_nats / static_cast<double>(total_bytes) / std::log(2.0);
}

}  // namespace arunet
