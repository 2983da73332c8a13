#include "mixnet/autodiff/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <unordered_set>

#include "mixnet/error.hpp"

namespace mixnet {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace mixnet

namespace mixnet::ad {

namespace {

std::atomic<std::uint64_t> next_node_id{1};

std::shared_ptr<detail::Node> new_node(Shape shape, Buffer value, bool requires_grad) {
  if (value.size() != num_elements(shape)) {
    throw ShapeError("tensor data length " + std::to_string(value.size()) +
                     " does not match shape " + shape_string(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

}  // namespace

std::size_t num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

double* detail::Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad.data();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = num_elements(shape);
  return from_node(new_node(std::move(shape), Buffer(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return from_node(new_node(std::move(shape), Buffer(values.begin(), values.end()), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(node_->shape));
  }
  return node_->shape[axis];
}

std::span<double> Tensor::mutable_values() {
  if (!node_->leaf) throw std::logic_error("cannot mutate the value of a recorded intermediate");
  return node_->value;
}

double Tensor::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("item() requires a single-element tensor, got " + shape_string(node_->shape));
  }
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from_node(new_node(node_->shape, node_->value, false)); }

Tensor Tensor::clone(bool requires_grad) const { return from_node(new_node(node_->shape, node_->value, requires_grad)); }

Tensor make_result(const char* op, Shape shape, Buffer value, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward_rule) {
  const bool tracked = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  auto node = new_node(std::move(shape), std::move(value), tracked);
  node->op = op;
  if (tracked) {
    node->leaf = false;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward_rule);
  }
  return Tensor::from_node(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on an undefined tensor");
  if (loss.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  std::vector<detail::Node*> order;
  std::unordered_set<const detail::Node*> seen;
  std::vector<detail::Node*> stack{loss.node().get()};
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (auto& in : n->inputs) {
      if (in->requires_grad) stack.push_back(in.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const detail::Node* a, const detail::Node* b) { return a->id > b->id; });

  for (detail::Node* n : order) {
    if (n->leaf) {
      n->grad_buffer();
    } else {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  loss.node()->grad[0] += 1.0;
  for (detail::Node* n : order) {
    if (!n->leaf && n->backward) n->backward(*n);
  }
}

}  // namespace mixnet::ad
