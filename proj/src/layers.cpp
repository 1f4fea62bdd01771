#include "sgcn/layers.hpp"

#include <cmath>

#include "sgcn/ops.hpp"

namespace sgcn {

ad::Tensor uniform_param(ad::Shape shape, double bound, Rng& rng) {
  std::vector<double> values(ad::numel(shape));
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return ad::Tensor::from(std::move(shape), std::move(values), true);
}

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = uniform_param({in, out}, bound, rng);
  l.bias = uniform_param({out}, bound, rng);
  return l;
}

ad::Tensor Linear::operator()(const ad::Tensor& x) const { return ad::add(ad::matmul(x, weight), bias); }

void Linear::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Conv2d Conv2d::init(std::size_t c_out, std::size_t c_in, std::size_t kh, std::size_t kw, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * kh * kw));
  Conv2d c;
  c.kernel = uniform_param({c_out, c_in, kh, kw}, bound, rng);
  c.bias = uniform_param({c_out}, bound, rng);
  return c;
}

ad::Tensor Conv2d::operator()(const ad::Tensor& x) const { return ad::conv2d_zero_pad(x, kernel, bias); }

void Conv2d::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".kernel", kernel);
  fn(prefix + ".bias", bias);
}

ad::Tensor prelu_slope(double value) { return ad::Tensor::scalar(value, true); }

}  // namespace sgcn
