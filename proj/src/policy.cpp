#include "arunet/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace arunet {

std::vector<int64_t> BoundaryTrace::positions() const {
  std::vector<int64_t> out;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i]) out.push_back(static_cast<int64_t>(i));
  }
  return out;
}

int64_t BoundaryTrace::num_boundaries() const {
  int64_t m = 0;
  for (int v : a) m += v;
  return m;
}

BoundaryDecision BoundaryDecision::sample(Rng& rng) {
  BoundaryDecision d;
  d.kind = Kind::kSample;
  d.rng = &rng;
  return d;
}

BoundaryDecision BoundaryDecision::forced(const std::vector<int>& mask) {
  BoundaryDecision d;
  d.kind = Kind::kForced;
  d.forced_mask = &mask;
  return d;
}

BoundaryDecision BoundaryDecision::thresholded(double t) {
  BoundaryDecision d;
  d.kind = Kind::kThreshold;
  d.threshold = t;
  return d;
}

double inverse_sigmoid(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::runtime_error("inverse_sigmoid: p must be in (0,1), got " + std::to_string(p));
  }
  return std::log(p / (1.0 - p));
}

Tensor scale_and_shift(const Tensor& l_raw, double logit_scale, double target_rate) {
  return add_scalar(scale(l_raw, 1.0 / logit_scale), inverse_sigmoid(target_rate));
}

BoundaryPolicy::BoundaryPolicy(int64_t dim, int64_t window, double logit_scale,
                               double target_rate, double cap)
    : window_(window), logit_scale_(logit_scale), target_rate_(target_rate), cap_(cap) {
  if (window < 0) throw std::runtime_error("BoundaryPolicy: window must be >= 0");
  // Zero init makes the initial policy exactly uniform at target_rate.
  w_ = Tensor::zeros({dim, window + 1}, /*requires_grad=*/true);
}

BoundaryTrace BoundaryPolicy::run(const Tensor& x, const BoundaryDecision& decision,
                                  bool train_logits) const {
  const int64_t n = x.rows();
  if (decision.kind == BoundaryDecision::Kind::kForced) {
    if (!decision.forced_mask || static_cast<int64_t>(decision.forced_mask->size()) != n) {
      throw std::runtime_error("boundary: forced mask length does not match sequence length");
    }
    if ((*decision.forced_mask)[0] != 1) {
      throw std::runtime_error("boundary: forced mask must set position 0");
    }
  }
  if (decision.kind == BoundaryDecision::Kind::kSample && decision.rng == nullptr) {
    throw std::runtime_error("boundary: sampling requires an rng");
  }

  Tensor wx = matmul(x, w_);  // (n, window+1)
  const double inv_scale = 1.0 / logit_scale_;
  const double shift = inverse_sigmoid(target_rate_);

  // Sequential scan: decision a_i feeds the window terms of positions
  // i+1..i+window, so logits cannot be finalized ahead of sampling.
  std::vector<int> a(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i) {
    double raw = wx.at(i, 0);
    for (int64_t j = 1; j <= window_ && j <= i; ++j) {
      raw += static_cast<double>(a[static_cast<size_t>(i - j)]) * wx.at(i, j);
    }
    double scaled = raw * inv_scale + shift;
    double logit = train_logits ? softcap_scalar(scaled, cap_) : scaled;
    if (std::isnan(logit)) {
      throw std::runtime_error("sample_boundaries: NaN boundary logit at position " +
                               std::to_string(i));
    }
    int ai;
    if (i == 0) {
      ai = 1;
    } else {
      switch (decision.kind) {
        case BoundaryDecision::Kind::kSample:
          ai = decision.rng->uniform() < sigmoid_scalar(logit) ? 1 : 0;
          break;
        case BoundaryDecision::Kind::kForced:
          ai = (*decision.forced_mask)[static_cast<size_t>(i)];
          break;
        case BoundaryDecision::Kind::kThreshold:
          ai = sigmoid_scalar(logit) > decision.threshold ? 1 : 0;
          break;
        default:
          throw std::runtime_error("boundary: bad decision kind");
      }
    }
    a[static_cast<size_t>(i)] = ai;
  }

  // Differentiable rebuild with the realized mask. Accumulation order matches
  // the scan (base column, then window offsets ascending).
  BoundaryTrace trace;
  trace.a = a;
  Tensor l_raw = reshape(slice_cols(wx, 0, 1), {n});
  for (int64_t j = 1; j <= window_; ++j) {
    Tensor shifted_mask = Tensor::zeros({n});
    for (int64_t i = j; i < n; ++i) {
      shifted_mask.at(i) = static_cast<double>(a[static_cast<size_t>(i - j)]);
    }
    l_raw = add(l_raw, mul(shifted_mask, reshape(slice_cols(wx, j, 1), {n})));
  }
  trace.l_raw = l_raw;
  trace.l_scaled = add_scalar(scale(l_raw, inv_scale), shift);
  trace.l = train_logits ? softcap(trace.l_scaled, cap_) : trace.l_scaled;
  trace.p = sigmoid(trace.l);

  // logpi_i = a_i log p_i + (1-a_i) log(1-p_i), with position 0 excluded.
  Tensor sel1 = Tensor::zeros({n});
  Tensor sel0 = Tensor::zeros({n});
  for (int64_t i = 1; i < n; ++i) {
    if (a[static_cast<size_t>(i)]) {
      sel1.at(i) = 1.0;
    } else {
      sel0.at(i) = 1.0;
    }
  }
  trace.logpi =
      add(mul(sel1, log_sigmoid(trace.l)), mul(sel0, log_sigmoid(scale(trace.l, -1.0))));
  return trace;
}

void BoundaryPolicy::collect_params(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".w", w_);
}

}  // namespace arunet
