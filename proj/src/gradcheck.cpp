#include "sgcn/gradcheck.hpp"

#include <cmath>

#include "sgcn/errors.hpp"

namespace sgcn::ad {

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor leaf = x.detach();
  leaf.set_requires_grad(true);
  auto report = check_gradients([&] { return f(leaf); }, {leaf}, {"x"}, h);
  return report.max_rel_err;
}

GradCheckReport check_gradients(const std::function<Tensor()>& loss, const std::vector<Tensor>& leaves,
                                const std::vector<std::string>& names, double h, double tolerance) {
  if (names.size() != leaves.size()) throw ContractError("check_gradients: one name per leaf");
  for (auto leaf : leaves) leaf.zero_grad();
  const Tensor base = loss();
  backward(base);

  GradCheckReport report;
  report.loss = base.item();
  NoGradGuard no_grad;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    Tensor leaf = leaves[t];
    std::vector<double> analytic(leaf.numel(), 0.0);
    if (leaf.has_grad()) analytic.assign(leaf.grad().begin(), leaf.grad().end());
    auto values = leaf.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[i] - numeric) / (std::abs(numeric) + 1e-8);
      ++report.elements_checked;
      if (err > tolerance) report.exceeding.push_back({t, i, analytic[i], numeric, err});
      if (err > report.max_rel_err || report.elements_checked == 1) {
        report.max_rel_err = err;
        report.worst_tensor = names[t];
        report.worst_index = i;
        report.analytic = analytic[i];
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace sgcn::ad
