#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sgcn/tensor.hpp"

// Differentiable primitives. Every function records itself on the tape when
// gradient recording is enabled and at least one input requires grad.
namespace sgcn::ad {

// Boolean selector with the shape of the tensor it applies to, or with the
// shape of its trailing dimensions (then it repeats over the leading ones).
struct Mask {
  Shape shape;
  std::vector<std::uint8_t> on;

  static Mask all(Shape shape, bool value);
  // Ones on and above the diagonal of a size x size matrix.
  static Mask upper_triangular(std::size_t size);
  bool operator==(const Mask&) const = default;
};

// Batched matrix product over the last two axes. Leading axes must agree,
// unless one operand is a plain matrix, which is then reused for every batch.
Tensor matmul(const Tensor& a, const Tensor& b);

// Swaps the last two axes.
Tensor transpose(const Tensor& x);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor reshape(const Tensor& x, Shape shape);
// Columns [begin, end) of the last axis.
Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end);

// Element-wise binary ops. Shapes must match, or one operand's shape must be
// a suffix of the other's (or a single element), in which case it repeats.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor square(const Tensor& x);
// x for x >= 0, slope * x otherwise. `slope` is a one-element tensor.
Tensor prelu(const Tensor& x, const Tensor& slope);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Max-subtracted softmax over the last axis. Masked-out entries are exactly
// zero; a row with no unmasked entry is returned as all zeros.
Tensor softmax_lastdim(const Tensor& x, const Mask* mask = nullptr);

// Normalizes each row of the last axis as (e^x - 1)^2 / (sum (e^x - 1)^2 + eps).
// Zero inputs map to exact zeros.
Tensor zero_softmax_lastdim(const Tensor& x, double eps = 1e-12);

// Cross-correlation with symmetric zero padding. `input` is [C,H,W] or
// [B,C,H,W], `kernels` is [C_out,C_in,kh,kw] with odd kh and kw, `bias`
// (optional) is [C_out]. Output keeps H and W.
Tensor conv2d_zero_pad(const Tensor& input, const Tensor& kernels, const Tensor& bias = {});

}  // namespace sgcn::ad
