#pragma once

#include <functional>
#include <string>

#include "sgcn/rng.hpp"
#include "sgcn/tensor.hpp"

namespace sgcn {

using ParamVisitor = std::function<void(const std::string& name, ad::Tensor& param)>;

// Trainable leaf filled from U(-bound, bound).
ad::Tensor uniform_param(ad::Shape shape, double bound, Rng& rng);

// Affine map over the last axis: x [..., in] -> [..., out].
struct Linear {
  ad::Tensor weight;  // [in, out]
  ad::Tensor bias;    // [out]

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  ad::Tensor operator()(const ad::Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Convolution weights for ad::conv2d_zero_pad.
struct Conv2d {
  ad::Tensor kernel;  // [C_out, C_in, kh, kw]
  ad::Tensor bias;    // [C_out]

  static Conv2d init(std::size_t c_out, std::size_t c_in, std::size_t kh, std::size_t kw, Rng& rng);
  ad::Tensor operator()(const ad::Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Default PReLU slope.
ad::Tensor prelu_slope(double value = 0.25);

}  // namespace sgcn
