#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace arunet {

struct Node;

// Dense row-major f64 tensor participating in define-by-run reverse-mode
// differentiation. Copies are shallow: they share data, grad and the creator
// node. Tensors are immutable after creation except for grad accumulation.
struct Tensor {
  std::vector<int64_t> shape;
  std::shared_ptr<std::vector<double>> data;
  std::shared_ptr<std::vector<double>> grad;  // same length as data, lazily allocated
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // op that produced this tensor; null for leaves

  Tensor() = default;

  int64_t numel() const;
  size_t ndim() const { return shape.size(); }
  int64_t rows() const { return shape.at(0); }
  int64_t cols() const { return shape.at(1); }
  bool is_scalar() const { return numel() == 1; }

  double& at(int64_t i) { return (*data)[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return (*data)[static_cast<size_t>(i)]; }
  double& at(int64_t r, int64_t c) { return (*data)[static_cast<size_t>(r * cols() + c)]; }
  double at(int64_t r, int64_t c) const { return (*data)[static_cast<size_t>(r * cols() + c)]; }
  double scalar_value() const;

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, double value, bool requires_grad = false);
  static Tensor from_values(std::vector<int64_t> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  void ensure_grad();
  void zero_grad();
};

// One executed primitive. seq records forward execution order; backward()
// visits reachable nodes in exact reverse of that order.
struct Node {
  const char* op = "";
  uint64_t seq = 0;
  uint64_t grad_epoch = 0;  // last backward() call that touched the output grad
  std::vector<Tensor> parents;
  std::function<void(const Tensor& out)> backprop;  // accumulate into parents' grads
};

std::string shape_str(const std::vector<int64_t>& shape);

// Allocates `out` with a fresh node recording `op` over `parents`.
// requires_grad is inherited from the parents; the node is only recorded when
// some parent needs gradient.
Tensor make_op_output(const char* op, std::vector<int64_t> shape,
                      std::vector<Tensor> parents,
                      std::function<void(const Tensor&)> backprop);

// Reverse-mode accumulation from a scalar loss.
//
// Leaf gradients (parameters) accumulate additively across calls: a second
// backward() on the same loss without zeroing doubles them, and losses built
// over shared subgraphs may be backpropagated separately. Gradients of
// op-produced intermediates hold the latest call's contribution only; they are
// reset at first touch within each call so that propagation always works on
// this call's delta.
void backward(const Tensor& loss);

// Called by op backward rules before accumulating into a tensor's grad;
// implements the per-call reset described above.
void touch_grad(const Tensor& t);

// Value-identical tensor (shared buffer) that blocks gradient flow. Idempotent.
Tensor detach(const Tensor& t);

}  // namespace arunet
