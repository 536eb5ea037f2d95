#include "arunet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace arunet {

namespace {
std::atomic<uint64_t> g_seq{0};
std::atomic<uint64_t> g_backward_epoch{0};
uint64_t g_current_epoch = 0;
}  // namespace

int64_t Tensor::numel() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

double Tensor::scalar_value() const {
  if (!is_scalar()) {
    throw std::runtime_error("scalar_value: tensor of shape " + shape_str(shape) +
                             " is not a scalar");
  }
  return (*data)[0];
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, double value, bool requires_grad) {
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(static_cast<size_t>(t.numel()), value);
  t.requires_grad = requires_grad;
  // Grad buffers are allocated up front so that every shallow copy shares one.
  if (requires_grad) t.ensure_grad();
  return t;
}

Tensor Tensor::from_values(std::vector<int64_t> shape, std::vector<double> values,
                           bool requires_grad) {
  Tensor t;
  t.shape = std::move(shape);
  if (static_cast<int64_t>(values.size()) != t.numel()) {
    throw std::runtime_error("from_values: " + std::to_string(values.size()) +
                             " values for shape " + shape_str(t.shape));
  }
  t.data = std::make_shared<std::vector<double>>(std::move(values));
  t.requires_grad = requires_grad;
  if (requires_grad) t.ensure_grad();
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({}, {value}, requires_grad);
}

void Tensor::ensure_grad() {
  if (!grad) grad = std::make_shared<std::vector<double>>(data->size(), 0.0);
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor make_op_output(const char* op, std::vector<int64_t> shape, std::vector<Tensor> parents,
                      std::function<void(const Tensor&)> backprop) {
  Tensor out;
  out.shape = std::move(shape);
  out.data = std::make_shared<std::vector<double>>(static_cast<size_t>(out.numel()), 0.0);
  bool needs = false;
  for (const Tensor& p : parents) needs = needs || p.requires_grad;
  out.requires_grad = needs;
  if (needs) {
    out.ensure_grad();
    out.node = std::make_shared<Node>();
    out.node->op = op;
    out.node->seq = ++g_seq;
    out.node->parents = std::move(parents);
    out.node->backprop = std::move(backprop);
  }
  return out;
}

void touch_grad(const Tensor& t) {
  if (t.node && t.node->grad_epoch != g_current_epoch) {
    const_cast<Tensor&>(t).zero_grad();
    t.node->grad_epoch = g_current_epoch;
  }
}

void backward(const Tensor& loss) {
  if (!loss.is_scalar()) {
    throw std::runtime_error("backward: loss must be scalar, got shape " + shape_str(loss.shape));
  }
  if (!loss.requires_grad) return;

  g_current_epoch = ++g_backward_epoch;
  touch_grad(loss);
  (*loss.grad)[0] += 1.0;

  // Collect every node reachable from the loss, keyed by node identity, and
  // keep one output tensor per node (copies share buffers so any one works).
  std::vector<std::pair<Node*, Tensor>> order;
  std::unordered_set<Node*> seen;
  std::vector<Tensor> stack{loss};
  while (!stack.empty()) {
    Tensor t = std::move(stack.back());
    stack.pop_back();
    Node* n = t.node.get();
    if (n == nullptr || seen.count(n)) continue;
    seen.insert(n);
    for (const Tensor& p : n->parents) {
      if (p.node) stack.push_back(p);
    }
    order.emplace_back(n, std::move(t));
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first->seq > b.first->seq; });

  for (auto& [n, out] : order) {
    n->backprop(out);
  }
}

Tensor detach(const Tensor& t) {
  Tensor out;
  out.shape = t.shape;
  out.data = t.data;
  out.requires_grad = false;
  return out;
}

}  // namespace arunet
