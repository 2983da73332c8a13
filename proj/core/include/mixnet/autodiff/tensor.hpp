#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace mixnet::ad {

using Shape = std::vector<std::size_t>;

/// Cache-line aligned storage. Eigen kernels peel unaligned heads with scalar
/// code, so a fixed alignment keeps results independent of heap layout.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t num_elements(const Shape& shape);

namespace detail {

/// One recorded value in the differentiation graph. Non-leaf nodes carry the
/// backward rule of the primitive that produced them; `id` is the creation
/// sequence number, which is a valid topological order of the graph.
struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;
  bool requires_grad = false;
  bool leaf = true;
  std::uint64_t id = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  double* grad_buffer();
};

}  // namespace detail

/// Dense row-major float64 tensor (last axis fastest) with reverse-mode
/// gradient support. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Mutable view of a leaf's values (parameters, inputs). Mutating an
  /// intermediate result is rejected.
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool is_leaf() const noexcept { return node_ && node_->leaf; }
  bool has_grad() const noexcept { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();

  /// Same values, cut from the graph, no gradient.
  Tensor detach() const;
  /// Deep copy of the values into a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Records a primitive result. `inputs` are linked into the graph only if at
/// least one of them requires gradients; otherwise the result is a constant.
Tensor make_result(const char* op, Shape shape, Buffer value,
                   std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward);

/// Runs one reverse sweep from a scalar loss. Leaf gradients accumulate
/// across calls; intermediate gradients are reset at the start of each sweep.
void backward(const Tensor& loss);

}  // namespace mixnet::ad
