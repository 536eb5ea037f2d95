#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "arunet/rng.hpp"
#include "arunet/tensor.hpp"

namespace arunet::testing {

inline Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -2.0,
                            double hi = 2.0, bool requires_grad = true) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (auto& v : *t.data) v = lo + (hi - lo) * rng.uniform();
  return t;
}

struct GradCheckResult {
  double max_err = 0.0;       // |analytic - fd| at the worst coordinate
  double max_rel = 0.0;       // relative form of the same
  std::string worst;
  bool ok = true;
};

// Central finite differences against reverse-mode gradients. loss_fn must
// rebuild the graph from the (shared) parameter tensors on every call.
inline GradCheckResult check_gradients(
    const std::vector<std::pair<std::string, Tensor>>& params,
    const std::function<Tensor()>& loss_fn, double step = 1e-5, double rtol = 1e-5,
    double atol = 1e-7) {
  for (const auto& [name, p] : params) const_cast<Tensor&>(p).zero_grad();
  Tensor loss = loss_fn();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const auto& [name, p] : params) analytic.push_back(*p.grad);

  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& p = params[pi].second;
    for (size_t k = 0; k < p.data->size(); ++k) {
      double saved = (*p.data)[k];
      (*p.data)[k] = saved + step;
      double f_plus = loss_fn().scalar_value();
      (*p.data)[k] = saved - step;
      double f_minus = loss_fn().scalar_value();
      (*p.data)[k] = saved;
      double fd = (f_plus - f_minus) / (2.0 * step);
      double a = analytic[pi][k];
      double err = std::fabs(a - fd);
      double scale = std::max(std::fabs(a), std::fabs(fd));
      double rel = err / std::max(scale, 1e-12);
      if (err > res.max_err) res.max_err = err;
      if (err > atol + rtol * scale) {
        if (rel > res.max_rel) {
          res.max_rel = rel;
          res.worst = params[pi].first + "[" + std::to_string(k) + "]: analytic " +
                      std::to_string(a) + " vs fd " + std::to_string(fd);
        }
        res.ok = false;
      }
    }
  }
  return res;
}

}  // namespace arunet::testing
