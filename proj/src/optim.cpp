#include "arunet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace arunet {

double lr_at(int64_t bytes_seen, const TrainConfig& cfg) {
  if (bytes_seen < 0) throw std::runtime_error("lr_at: negative bytes_seen");
  const double peak = cfg.learning_rate;
  const double floor = 0.1 * peak;
  if (bytes_seen <= cfg.warmup_bytes) {
    return peak * static_cast<double>(bytes_seen) / static_cast<double>(cfg.warmup_bytes);
  }
  if (bytes_seen >= cfg.training_bytes) return floor;
  double progress = static_cast<double>(bytes_seen - cfg.warmup_bytes) /
                    static_cast<double>(cfg.training_bytes - cfg.warmup_bytes);
  return floor + 0.5 * (peak - floor) * (1.0 + std::cos(M_PI * progress));
}

double global_grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const auto& [name, t] : params) {
    if (!t.grad) continue;
    for (double g : *t.grad) sq += g * g;
  }
  return std::sqrt(sq);
}

void clip_gradients(const ParamList& params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  double s = max_norm / norm;
  for (const auto& [name, t] : params) {
    if (!t.grad) continue;
    for (double& g : *t.grad) g *= s;
  }
}

AdamW::AdamW(ParamList params, double beta1, double beta2, double eps, double weight_decay)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps),
      weight_decay_(weight_decay) {
  slots_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    size_t n = params_[i].second.data->size();
    slots_[i].m.assign(n, 0.0);
    slots_[i].v.assign(n, 0.0);
    params_[i].second.ensure_grad();
  }
}

bool AdamW::step(double lr) {
  for (const auto& [name, t] : params_) {
    for (double g : *t.grad) {
      if (!std::isfinite(g)) return false;
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    Slot& s = slots_[i];
    auto& w = *p.data;
    const auto& g = *p.grad;
    for (size_t k = 0; k < w.size(); ++k) {
      s.m[k] = beta1_ * s.m[k] + (1.0 - beta1_) * g[k];
      s.v[k] = beta2_ * s.v[k] + (1.0 - beta2_) * g[k] * g[k];
      double m_hat = s.m[k] / bc1;
      double v_hat = s.v[k] / bc2;
      w[k] -= lr * (m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * w[k]);
    }
  }
  return true;
}

void AdamW::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

namespace {
size_t find_param(const ParamList& params, const std::string& name) {
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].first == name) return i;
  }
  throw std::runtime_error("AdamW: unknown parameter '" + name + "'");
}
}  // namespace

const std::vector<double>& AdamW::first_moment(const std::string& name) const {
  return slots_[find_param(params_, name)].m;
}
const std::vector<double>& AdamW::second_moment(const std::string& name) const {
  return slots_[find_param(params_, name)].v;
}
std::vector<double>& AdamW::first_moment(const std::string& name) {
  return slots_[find_param(params_, name)].m;
}
std::vector<double>& AdamW::second_moment(const std::string& name) {
  return slots_[find_param(params_, name)].v;
}

}  // namespace arunet
