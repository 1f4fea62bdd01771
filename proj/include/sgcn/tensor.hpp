#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sgcn::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {
struct TensorImpl;
}

// Dense row-major array of doubles that may take part in reverse-mode
// differentiation. Copies share storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  // Only legal on leaves; mutating an interior tensor would invalidate
  // the backward rules that captured it.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // New leaf sharing nothing with this tensor and carrying no history.
  Tensor detach() const;
  Tensor clone() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

namespace detail {

using BackwardFn = std::function<void(const TensorImpl& out)>;

// One executed primitive. `seq` is the global execution index used to
// replay backward rules in reverse order.
struct Node {
  std::uint64_t seq = 0;
  std::string name;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> node;

  std::vector<double>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Disables recording for the lifetime of the guard on the current thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// Records a primitive. `values` must already hold the forward result.
// The backward rule receives the output (data and accumulated grad) and
// accumulates into the grads of `inputs` that require them.
// Throws NumericError if any forward value is non-finite.
Tensor record(const std::string& name, Shape shape, std::vector<double> values,
              std::vector<Tensor> inputs, detail::BackwardFn backward);

// Adds d(loss)/d(leaf) to every reachable leaf that requires grad.
void backward(const Tensor& loss);

}  // namespace sgcn::ad
