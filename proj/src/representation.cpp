#include "sgcn/representation.hpp"

#include <cmath>

#include "sgcn/data.hpp"
#include "sgcn/errors.hpp"
#include "sgcn/ops.hpp"

namespace sgcn::repr {

BranchWeights BranchWeights::init(std::size_t dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  BranchWeights w;
  w.spa1 = uniform_param({dim, dim}, bound, rng);
  w.tmp1 = uniform_param({dim, dim}, bound, rng);
  w.tmp2 = uniform_param({dim, dim}, bound, rng);
  w.spa2 = uniform_param({dim, dim}, bound, rng);
  w.slope_spa1 = prelu_slope();
  w.slope_tmp1 = prelu_slope();
  w.slope_tmp2 = prelu_slope();
  w.slope_spa2 = prelu_slope();
  return w;
}

void BranchWeights::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".spa1", spa1);
  fn(prefix + ".tmp1", tmp1);
  fn(prefix + ".tmp2", tmp2);
  fn(prefix + ".spa2", spa2);
  fn(prefix + ".slope_spa1", slope_spa1);
  fn(prefix + ".slope_tmp1", slope_tmp1);
  fn(prefix + ".slope_tmp2", slope_tmp2);
  fn(prefix + ".slope_spa2", slope_spa2);
}

TcnWeights TcnWeights::init(std::size_t t_obs, std::size_t t_pred, std::size_t dim, std::size_t num_layers,
                            std::size_t kernel_size, Rng& rng) {
  if (num_layers < 1) throw ConfigurationError("TCN needs at least one layer");
  TcnWeights w;
  for (std::size_t l = 0; l < num_layers; ++l) {
    TcnLayer layer;
    layer.conv = Conv2d::init(t_pred, l == 0 ? t_obs : t_pred, 1, kernel_size, rng);
    layer.slope = prelu_slope();
    w.layers.push_back(std::move(layer));
  }
  w.head = Linear::init(dim, 5, rng);
  return w;
}

void TcnWeights::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].conv.visit(prefix + ".conv" + std::to_string(l), fn);
    fn(prefix + ".conv" + std::to_string(l) + ".slope", layers[l].slope);
  }
  head.visit(prefix + ".head", fn);
}

ad::Tensor gcn_layer(const ad::Tensor& adjacency, const ad::Tensor& features, const ad::Tensor& weight,
                     const ad::Tensor& slope) {
  const auto& sa = adjacency.shape();
  const auto& sh = features.shape();
  if (sa.size() != 3 || sh.size() != 3 || sa[0] != sh[0] || sa[1] != sa[2] || sa[2] != sh[1]) {
    throw DimensionError("gcn_layer: adjacency " + ad::to_string(sa) + " incompatible with features " +
                         ad::to_string(sh));
  }
  if (weight.rank() != 2 || weight.dim(0) != sh[2]) {
    throw DimensionError("gcn_layer: weight " + ad::to_string(weight.shape()) + " for features " + ad::to_string(sh));
  }
  return ad::prelu(ad::matmul(ad::transpose(adjacency), ad::matmul(features, weight)), slope);
}

ad::Tensor interaction_tendency_branch(const ad::Tensor& a_spa, const ad::Tensor& a_tmp, const ad::Tensor& h0_spa,
                                       const BranchWeights& w) {
  auto spatial = gcn_layer(a_spa, h0_spa, w.spa1, w.slope_spa1);
  auto temporal = gcn_layer(a_tmp, ad::permute(spatial, {1, 0, 2}), w.tmp1, w.slope_tmp1);
  return ad::permute(temporal, {1, 0, 2});
}

ad::Tensor tendency_interaction_branch(const ad::Tensor& a_spa, const ad::Tensor& a_tmp, const ad::Tensor& h0_tmp,
                                       const BranchWeights& w) {
  auto temporal = gcn_layer(a_tmp, h0_tmp, w.tmp2, w.slope_tmp2);
  return gcn_layer(a_spa, ad::permute(temporal, {1, 0, 2}), w.spa2, w.slope_spa2);
}

ad::Tensor fuse_branches(const ad::Tensor& itf, const ad::Tensor& tif) {
  if (itf.shape() != tif.shape()) throw DimensionError("fuse_branches: shapes differ");
  return ad::add(itf, tif);
}

ad::Tensor tcn_raw(const ad::Tensor& h, const TcnWeights& w) {
  ad::Tensor x = h;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto y = ad::prelu(w.layers[l].conv(x), w.layers[l].slope);
    x = l == 0 ? y : ad::add(y, x);
  }
  return w.head(x);
}

BiGaussianParams to_bigaussian(const ad::Tensor& raw) {
  if (raw.rank() != 3 || raw.dim(2) != 5) throw DimensionError("bi-Gaussian head expects [T, N, 5]");
  BiGaussianParams p;
  p.mu = ad::slice_lastdim(raw, 0, 2);
  p.sigma = ad::exp(ad::slice_lastdim(raw, 2, 4));
  p.rho = ad::reshape(ad::tanh(ad::slice_lastdim(raw, 4, 5)), {raw.dim(0), raw.dim(1)});
  return p;
}

BiGaussianParams tcn_head(const ad::Tensor& h, const TcnWeights& w) { return to_bigaussian(tcn_raw(h, w)); }

ad::Tensor sample_trajectory(const BiGaussianParams& params, std::span<const double> last_observed,
                             std::uint64_t seed) {
  const std::size_t tp = params.t_pred(), n = params.num_pedestrians();
  const auto& mu = params.mu.data();
  const auto& sigma = params.sigma.data();
  const auto& rho = params.rho.data();
  Rng rng(seed);
  std::vector<double> steps(tp * n * 2);
  for (std::size_t k = 0; k < tp * n; ++k) {
    const double sx = sigma[2 * k], sy = sigma[2 * k + 1], r = rho[k];
    const double z1 = rng.normal(), z2 = rng.normal();
    // L = [[sx, 0], [r sy, sy sqrt(1 - r^2)]]
    steps[2 * k] = mu[2 * k] + sx * z1;
    steps[2 * k + 1] = mu[2 * k + 1] + sy * (r * z1 + std::sqrt(std::max(0.0, 1.0 - r * r)) * z2);
  }
  return data::integrate_displacements(last_observed, ad::Tensor::from({tp, n, 2}, std::move(steps)));
}

ad::Tensor mean_trajectory(const BiGaussianParams& params, std::span<const double> last_observed) {
  return data::integrate_displacements(last_observed, params.mu.detach());
}

}  // namespace sgcn::repr
