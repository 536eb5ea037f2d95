#include "arunet/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace arunet {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<EMat>;
using CMatMap = Eigen::Map<const EMat>;
using ArrMap = Eigen::Map<Eigen::ArrayXd>;
using CArrMap = Eigen::Map<const Eigen::ArrayXd>;

MatMap mat(Tensor& t) { return MatMap(t.data->data(), t.rows(), t.cols()); }
CMatMap mat(const Tensor& t) { return CMatMap(t.data->data(), t.rows(), t.cols()); }
MatMap grad_mat(const Tensor& t) { return MatMap(t.grad->data(), t.rows(), t.cols()); }
CMatMap grad_cmat(const Tensor& t) { return CMatMap(t.grad->data(), t.rows(), t.cols()); }

ArrMap arr(Tensor& t) { return ArrMap(t.data->data(), t.numel()); }
CArrMap arr(const Tensor& t) { return CArrMap(t.data->data(), t.numel()); }
ArrMap grad_arr(const Tensor& t) { return ArrMap(t.grad->data(), t.numel()); }
CArrMap grad_carr(const Tensor& t) { return CArrMap(t.grad->data(), t.numel()); }

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

void require_rank2(const Tensor& t, const char* op) {
  require(t.ndim() == 2,
          std::string(op) + ": expected rank-2 tensor, got shape " + shape_str(t.shape));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape == b.shape, std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                  " vs " + shape_str(b.shape));
}

// Elementwise op with backward dx += g * dfdx(x, y).
template <typename Fwd, typename Bwd>
Tensor unary_op(const char* name, const Tensor& a, Fwd fwd, Bwd dfdx) {
  Tensor out = make_op_output(name, a.shape, {a}, nullptr);
  const auto& x = *a.data;
  auto& y = *out.data;
  for (size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  if (out.node) {
    Tensor saved_in = detach(a);
    Tensor saved_out = detach(out);
    out.node->backprop = [saved_in, saved_out, dfdx](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      touch_grad(p);
      const auto& g = *o.grad;
      const auto& x = *saved_in.data;
      const auto& y = *saved_out.data;
      auto& d = *p.grad;
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * dfdx(x[i], y[i]);
    };
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  require(a.cols() == b.rows(), "matmul: incompatible shapes " + shape_str(a.shape) + " x " +
                                    shape_str(b.shape));
  Tensor out = make_op_output("matmul", {a.rows(), b.cols()}, {a, b}, nullptr);
  mat(out).noalias() = mat(a) * mat(b);
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      const Tensor& b = o.node->parents[1];
      if (a.requires_grad) {
        touch_grad(a);
        grad_mat(a).noalias() += grad_cmat(o) * mat(b).transpose();
      }
      if (b.requires_grad) {
        touch_grad(b);
        grad_mat(b).noalias() += mat(a).transpose() * grad_cmat(o);
      }
    };
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Tensor out = make_op_output("transpose", {a.cols(), a.rows()}, {a}, nullptr);
  mat(out) = mat(a).transpose();
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      grad_mat(a) += grad_cmat(o).transpose();
    };
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_op_output("add", a.shape, {a, b}, nullptr);
  arr(out) = arr(a) + arr(b);
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      for (const Tensor& p : o.node->parents) {
        if (!p.requires_grad) continue;
        touch_grad(p);
        grad_arr(p) += grad_carr(o);
      }
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = make_op_output("sub", a.shape, {a, b}, nullptr);
  arr(out) = arr(a) - arr(b);
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      const Tensor& b = o.node->parents[1];
      if (a.requires_grad) {
        touch_grad(a);
        grad_arr(a) += grad_carr(o);
      }
      if (b.requires_grad) {
        touch_grad(b);
        grad_arr(b) -= grad_carr(o);
      }
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_op_output("mul", a.shape, {a, b}, nullptr);
  arr(out) = arr(a) * arr(b);
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      const Tensor& b = o.node->parents[1];
      if (a.requires_grad) {
        touch_grad(a);
        grad_arr(a) += grad_carr(o) * arr(b);
      }
      if (b.requires_grad) {
        touch_grad(b);
        grad_arr(b) += grad_carr(o) * arr(a);
      }
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = make_op_output("scale", a.shape, {a}, nullptr);
  arr(out) = arr(a) * c;
  if (out.node) {
    out.node->backprop = [c](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      grad_arr(a) += grad_carr(o) * c;
    };
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = make_op_output("add_scalar", a.shape, {a}, nullptr);
  arr(out) = arr(a) + c;
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      grad_arr(a) += grad_carr(o);
    };
  }
  return out;
}

Tensor powc(const Tensor& a, double p) {
  return unary_op(
      "powc", a, [p](double x) { return std::pow(x, p); },
      [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

Tensor log_op(const Tensor& a) {
  return unary_op(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor exp_op(const Tensor& a) {
  return unary_op(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor tanh_op(const Tensor& a) {
  return unary_op(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      "sigmoid", a, [](double x) { return sigmoid_scalar(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log_sigmoid(const Tensor& a) {
  // log sigma(x) = -log1p(exp(-x)) for x >= 0, x - log1p(exp(x)) otherwise.
  return unary_op(
      "log_sigmoid", a,
      [](double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 - 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return 1.0 - e / (1.0 + e);
      });
}

Tensor gelu(const Tensor& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return unary_op(
      "gelu", a,
      [](double x) {
        double u = kC * (x + kA * x * x * x);
        return 0.5 * x * (1.0 + std::tanh(u));
      },
      [](double x, double) {
        double u = kC * (x + kA * x * x * x);
        double t = std::tanh(u);
        double du = kC * (1.0 + 3.0 * kA * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

Tensor softcap(const Tensor& a, double cap) {
  require(cap > 0.0, "softcap: cap must be positive, got " + std::to_string(cap));
  return unary_op(
      "softcap", a, [cap](double x) { return softcap_scalar(x, cap); },
      [cap](double, double y) {
        double t = y / cap;
        return 1.0 - t * t;
      });
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op_output("sum", {}, {a}, nullptr);
  (*out.data)[0] = arr(a).sum();
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      grad_arr(a) += (*o.grad)[0];
    };
  }
  return out;
}

Tensor sum_axis(const Tensor& a, int axis) {
  require_rank2(a, "sum_axis");
  require(axis == 0 || axis == 1, "sum_axis: axis must be 0 or 1, got " + std::to_string(axis));
  int64_t out_len = axis == 0 ? a.cols() : a.rows();
  Tensor out = make_op_output("sum_axis", {out_len}, {a}, nullptr);
  if (axis == 0) {
    ArrMap(out.data->data(), out_len) = mat(a).colwise().sum().array().transpose();
  } else {
    ArrMap(out.data->data(), out_len) = mat(a).rowwise().sum().array();
  }
  if (out.node) {
    out.node->backprop = [axis](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      CArrMap g(o.grad->data(), o.numel());
      auto ga = grad_mat(a);
      if (axis == 0) {
        ga.rowwise() += g.matrix().transpose();
      } else {
        ga.colwise() += g.matrix();
      }
    };
  }
  return out;
}

Tensor mean_axis(const Tensor& a, int axis) {
  require_rank2(a, "mean_axis");
  int64_t n = axis == 0 ? a.rows() : a.cols();
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(n));
}

Tensor softmax_rows(const Tensor& a) {
  require_rank2(a, "softmax_rows");
  Tensor out = make_op_output("softmax_rows", a.shape, {a}, nullptr);
  const int64_t n = a.rows(), m = a.cols();
  for (int64_t i = 0; i < n; ++i) {
    const double* x = a.data->data() + i * m;
    double* y = out.data->data() + i * m;
    double mx = x[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < m; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (int64_t j = 0; j < m; ++j) y[j] /= z;
  }
  if (out.node) {
    Tensor saved = detach(out);
    out.node->backprop = [saved](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      const int64_t n = o.rows(), m = o.cols();
      for (int64_t i = 0; i < n; ++i) {
        const double* y = saved.data->data() + i * m;
        const double* g = o.grad->data() + i * m;
        double* d = a.grad->data() + i * m;
        double dot = 0.0;
        for (int64_t j = 0; j < m; ++j) dot += g[j] * y[j];
        for (int64_t j = 0; j < m; ++j) d[j] += y[j] * (g[j] - dot);
      }
    };
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  require_rank2(a, "log_softmax_rows");
  Tensor out = make_op_output("log_softmax_rows", a.shape, {a}, nullptr);
  const int64_t n = a.rows(), m = a.cols();
  for (int64_t i = 0; i < n; ++i) {
    const double* x = a.data->data() + i * m;
    double* y = out.data->data() + i * m;
    double mx = x[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < m; ++j) z += std::exp(x[j] - mx);
    double lz = mx + std::log(z);
    for (int64_t j = 0; j < m; ++j) y[j] = x[j] - lz;
  }
  if (out.node) {
    Tensor saved = detach(out);
    out.node->backprop = [saved](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      const int64_t n = o.rows(), m = o.cols();
      for (int64_t i = 0; i < n; ++i) {
        const double* y = saved.data->data() + i * m;
        const double* g = o.grad->data() + i * m;
        double* d = a.grad->data() + i * m;
        double gs = 0.0;
        for (int64_t j = 0; j < m; ++j) gs += g[j];
        for (int64_t j = 0; j < m; ++j) d[j] += g[j] - std::exp(y[j]) * gs;
      }
    };
  }
  return out;
}

Tensor take_rows(const Tensor& a, const std::vector<int64_t>& idx) {
  require_rank2(a, "take_rows");
  for (int64_t i : idx) {
    require(i >= 0 && i < a.rows(), "take_rows: index " + std::to_string(i) +
                                        " out of range for shape " + shape_str(a.shape));
  }
  const int64_t m = a.cols();
  Tensor out = make_op_output("take_rows", {static_cast<int64_t>(idx.size()), m}, {a}, nullptr);
  for (size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(a.data->data() + idx[r] * m, m, out.data->data() + static_cast<int64_t>(r) * m);
  }
  if (out.node) {
    out.node->backprop = [idx](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      const int64_t m = o.cols();
      for (size_t r = 0; r < idx.size(); ++r) {
        const double* g = o.grad->data() + static_cast<int64_t>(r) * m;
        double* d = a.grad->data() + idx[r] * m;
        for (int64_t j = 0; j < m; ++j) d[j] += g[j];
      }
    };
  }
  return out;
}

Tensor gather_cols(const Tensor& a, const std::vector<int64_t>& idx) {
  require_rank2(a, "gather_cols");
  require(static_cast<int64_t>(idx.size()) == a.rows(),
          "gather_cols: need one index per row, got " + std::to_string(idx.size()) + " for " +
              shape_str(a.shape));
  for (int64_t j : idx) {
    require(j >= 0 && j < a.cols(), "gather_cols: index " + std::to_string(j) +
                                        " out of range for shape " + shape_str(a.shape));
  }
  Tensor out = make_op_output("gather_cols", {a.rows()}, {a}, nullptr);
  for (int64_t i = 0; i < a.rows(); ++i) (*out.data)[i] = a.at(i, idx[i]);
  if (out.node) {
    out.node->backprop = [idx](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      for (int64_t i = 0; i < static_cast<int64_t>(idx.size()); ++i) {
        (*a.grad)[i * a.cols() + idx[i]] += (*o.grad)[i];
      }
    };
  }
  return out;
}

Tensor slice_rows(const Tensor& a, int64_t start, int64_t len) {
  require_rank2(a, "slice_rows");
  require(start >= 0 && len >= 0 && start + len <= a.rows(),
          "slice_rows: range [" + std::to_string(start) + "," + std::to_string(start + len) +
              ") invalid for shape " + shape_str(a.shape));
  const int64_t m = a.cols();
  Tensor out = make_op_output("slice_rows", {len, m}, {a}, nullptr);
  std::copy_n(a.data->data() + start * m, len * m, out.data->data());
  if (out.node) {
    out.node->backprop = [start](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      const int64_t m = o.cols();
      ArrMap(a.grad->data() + start * m, o.numel()) += grad_carr(o);
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int64_t start, int64_t len) {
  require_rank2(a, "slice_cols");
  require(start >= 0 && len >= 0 && start + len <= a.cols(),
          "slice_cols: range [" + std::to_string(start) + "," + std::to_string(start + len) +
              ") invalid for shape " + shape_str(a.shape));
  Tensor out = make_op_output("slice_cols", {a.rows(), len}, {a}, nullptr);
  mat(out) = mat(a).middleCols(start, len);
  if (out.node) {
    out.node->backprop = [start](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      grad_mat(a).middleCols(start, o.cols()) += grad_cmat(o);
    };
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_rows");
  require_rank2(b, "concat_rows");
  require(a.cols() == b.cols(), "concat_rows: column mismatch " + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
  Tensor out = make_op_output("concat_rows", {a.rows() + b.rows(), a.cols()}, {a, b}, nullptr);
  std::copy_n(a.data->data(), a.numel(), out.data->data());
  std::copy_n(b.data->data(), b.numel(), out.data->data() + a.numel());
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      const Tensor& b = o.node->parents[1];
      if (a.requires_grad) {
        touch_grad(a);
        grad_arr(a) += CArrMap(o.grad->data(), a.numel());
      }
      if (b.requires_grad) {
        touch_grad(b);
        grad_arr(b) += CArrMap(o.grad->data() + a.numel(), b.numel());
      }
    };
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  require(a.rows() == b.rows(), "concat_cols: row mismatch " + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
  Tensor out = make_op_output("concat_cols", {a.rows(), a.cols() + b.cols()}, {a, b}, nullptr);
  mat(out).leftCols(a.cols()) = mat(a);
  mat(out).rightCols(b.cols()) = mat(b);
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      const Tensor& b = o.node->parents[1];
      if (a.requires_grad) {
        touch_grad(a);
        grad_mat(a) += grad_cmat(o).leftCols(a.cols());
      }
      if (b.requires_grad) {
        touch_grad(b);
        grad_mat(b) += grad_cmat(o).rightCols(b.cols());
      }
    };
  }
  return out;
}

Tensor broadcast_row(const Tensor& v, int64_t n_rows) {
  require(v.ndim() == 1, "broadcast_row: expected rank-1 tensor, got shape " + shape_str(v.shape));
  const int64_t d = v.shape[0];
  Tensor out = make_op_output("broadcast_row", {n_rows, d}, {v}, nullptr);
  for (int64_t i = 0; i < n_rows; ++i) std::copy_n(v.data->data(), d, out.data->data() + i * d);
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& v = o.node->parents[0];
      if (!v.requires_grad) return;
      touch_grad(v);
      ArrMap(v.grad->data(), v.numel()) += grad_cmat(o).colwise().sum().array().transpose();
    };
  }
  return out;
}

Tensor broadcast_col(const Tensor& v, int64_t n_cols) {
  require(v.ndim() == 1, "broadcast_col: expected rank-1 tensor, got shape " + shape_str(v.shape));
  const int64_t n = v.shape[0];
  Tensor out = make_op_output("broadcast_col", {n, n_cols}, {v}, nullptr);
  for (int64_t i = 0; i < n; ++i) {
    double x = (*v.data)[i];
    double* row = out.data->data() + i * n_cols;
    for (int64_t j = 0; j < n_cols; ++j) row[j] = x;
  }
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& v = o.node->parents[0];
      if (!v.requires_grad) return;
      touch_grad(v);
      ArrMap(v.grad->data(), v.numel()) += grad_cmat(o).rowwise().sum().array();
    };
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<int64_t> new_shape) {
  Tensor out = make_op_output("reshape", std::move(new_shape), {a}, nullptr);
  require(out.numel() == a.numel(), "reshape: cannot reshape " + shape_str(a.shape) + " to " +
                                        shape_str(out.shape));
  std::copy_n(a.data->data(), a.numel(), out.data->data());
  if (out.node) {
    out.node->backprop = [](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      grad_arr(a) += grad_carr(o);
    };
  }
  return out;
}

Tensor rope_rows(const Tensor& a, double base) {
  require_rank2(a, "rope_rows");
  require(a.cols() % 2 == 0,
          "rope_rows: head dimension must be even, got shape " + shape_str(a.shape));
  const int64_t n = a.rows(), d = a.cols();
  Tensor out = make_op_output("rope_rows", a.shape, {a}, nullptr);
  for (int64_t i = 0; i < n; ++i) {
    const double* x = a.data->data() + i * d;
    double* y = out.data->data() + i * d;
    for (int64_t k = 0; k < d / 2; ++k) {
      double theta = static_cast<double>(i) *
                     std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(d));
      double c = std::cos(theta), s = std::sin(theta);
      y[2 * k] = c * x[2 * k] - s * x[2 * k + 1];
      y[2 * k + 1] = s * x[2 * k] + c * x[2 * k + 1];
    }
  }
  if (out.node) {
    out.node->backprop = [base](const Tensor& o) {
      const Tensor& a = o.node->parents[0];
      if (!a.requires_grad) return;
      touch_grad(a);
      const int64_t n = o.rows(), d = o.cols();
      for (int64_t i = 0; i < n; ++i) {
        const double* g = o.grad->data() + i * d;
        double* da = a.grad->data() + i * d;
        for (int64_t k = 0; k < d / 2; ++k) {
          double theta = static_cast<double>(i) *
                         std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(d));
          double c = std::cos(theta), s = std::sin(theta);
          da[2 * k] += c * g[2 * k] + s * g[2 * k + 1];
          da[2 * k + 1] += -s * g[2 * k] + c * g[2 * k + 1];
        }
      }
    };
  }
  return out;
}

}  // namespace arunet
