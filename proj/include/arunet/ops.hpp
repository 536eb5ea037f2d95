#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "arunet/tensor.hpp"

namespace arunet {

// Scalar kernels shared by the tensor ops and by scan code that must
// reproduce their results bit-for-bit.
inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softcap_scalar(double x, double cap) { return cap * std::tanh(x / cap); }

// Rank-2 linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);  // (n,k) x (k,m) -> (n,m)
Tensor transpose(const Tensor& a);                // (n,m) -> (m,n)

// Elementwise, same shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Elementwise with constants.
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor powc(const Tensor& a, double p);

// Elementwise nonlinearities.
Tensor log_op(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_sigmoid(const Tensor& a);  // numerically stable log(sigmoid(x))
Tensor gelu(const Tensor& a);         // tanh approximation
Tensor softcap(const Tensor& a, double cap);  // cap * tanh(x / cap)

// Reductions.
Tensor sum(const Tensor& a);                    // -> scalar
Tensor sum_axis(const Tensor& a, int axis);     // (n,m): axis 0 -> (m), axis 1 -> (n)
Tensor mean_axis(const Tensor& a, int axis);

// Row-wise softmax over the last axis of a rank-2 tensor.
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);

// Indexing. take_rows doubles as embedding lookup and boundary downsampling;
// its backward scatter-adds, so repeated indices accumulate.
Tensor take_rows(const Tensor& a, const std::vector<int64_t>& idx);
Tensor gather_cols(const Tensor& a, const std::vector<int64_t>& idx);  // (n,m),(n) -> (n)
Tensor slice_rows(const Tensor& a, int64_t start, int64_t len);
Tensor slice_cols(const Tensor& a, int64_t start, int64_t len);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);

// Broadcasts of a rank-1 vector into a rank-2 tensor.
Tensor broadcast_row(const Tensor& v, int64_t n_rows);  // (d),(n) -> (n,d), rows identical
Tensor broadcast_col(const Tensor& v, int64_t n_cols);  // (n),(m) -> (n,m), cols identical

Tensor reshape(const Tensor& a, std::vector<int64_t> new_shape);

// Rotary position embedding over adjacent pairs (2k, 2k+1); row index is the
// position. Requires even column count.
Tensor rope_rows(const Tensor& a, double base);

}  // namespace arunet
