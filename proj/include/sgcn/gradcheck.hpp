#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sgcn/tensor.hpp"

namespace sgcn::ad {

struct GradCheckEntry {
  std::size_t leaf = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t elements_checked = 0;
  double loss = 0.0;                      // value at the unperturbed point
  std::vector<GradCheckEntry> exceeding;  // elements with rel_err > tolerance
};

// max over elements of |analytic - central| / (|central| + 1e-8) for the
// scalar function f at x.
double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-4);

// Same measure for a loss closure over several leaf tensors, which are
// perturbed in place and restored. Leaves' grads are reset first.
GradCheckReport check_gradients(const std::function<Tensor()>& loss, const std::vector<Tensor>& leaves,
                                const std::vector<std::string>& names, double h = 1e-4, double tolerance = 1e-4);

}  // namespace sgcn::ad
