#include "sgcn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include "sgcn/errors.hpp"

namespace sgcn::ad {

namespace {

thread_local int no_grad_depth = 0;
std::atomic<std::uint64_t> next_seq{1};

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }
bool grad_enabled() { return no_grad_depth == 0; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = ad::numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
  }
  if (ad::numel(shape) != values.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match " + std::to_string(values.size()) +
                         " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) throw DimensionError("axis out of range");
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() {
  if (impl_->node) throw ContractError("mutable_data() on a non-leaf tensor");
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw DimensionError("index rank mismatch");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= s[axis]) throw DimensionError("index out of range");
    flat = flat * s[axis] + i;
    ++axis;
  }
  return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (impl_->node) throw ContractError("requires_grad can only be set on leaves");
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return impl_->node == nullptr; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const { return impl_->grad; }

std::span<double> Tensor::mutable_grad() { return impl_->ensure_grad(); }

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::detach() const { return from(shape(), impl_->data, false); }

Tensor Tensor::clone() const {
  auto copy = from(shape(), impl_->data, impl_->requires_grad);
  copy.impl_->grad = impl_->grad;
  return copy;
}

Tensor record(const std::string& name, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
              detail::BackwardFn backward) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(name + ": non-finite value produced");
  }
  auto out = Tensor::from(std::move(shape), std::move(values));
  bool needs_grad = false;
  if (grad_enabled()) {
    needs_grad = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  }
  if (!needs_grad) return out;

  auto node = std::make_shared<detail::Node>();
  node->seq = next_seq.fetch_add(1, std::memory_order_relaxed);
  node->name = name;
  node->inputs.reserve(inputs.size());
  for (auto& t : inputs) node->inputs.push_back(t.impl());
  node->backward = std::move(backward);
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss");
  }
  auto root = loss.impl();
  if (!root->node) {
    if (root->requires_grad) root->ensure_grad()[0] += 1.0;
    return;
  }

  // Collect the interior nodes reachable from the loss; the tape is that set
  // in reverse execution order.
  std::vector<detail::TensorImpl*> tape;
  std::unordered_set<const detail::TensorImpl*> seen;
  std::vector<detail::TensorImpl*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto* t = stack.back();
    stack.pop_back();
    if (!t->node) continue;
    tape.push_back(t);
    for (auto& in : t->node->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  std::sort(tape.begin(), tape.end(),
            [](const detail::TensorImpl* a, const detail::TensorImpl* b) { return a->node->seq > b->node->seq; });

  for (auto* t : tape) t->grad.assign(t->data.size(), 0.0);
  root->grad[0] = 1.0;
  for (auto* t : tape) t->node->backward(*t);
}

}  // namespace sgcn::ad
