#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgcn/layers.hpp"
#include "sgcn/tensor.hpp"

namespace sgcn::repr {

// Square GCN weights of the two branches and the PReLU after each stage.
struct BranchWeights {
  ad::Tensor spa1, tmp1;  // interaction -> tendency
  ad::Tensor tmp2, spa2;  // tendency -> interaction
  ad::Tensor slope_spa1, slope_tmp1, slope_tmp2, slope_spa2;

  static BranchWeights init(std::size_t dim, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct TcnLayer {
  Conv2d conv;
  ad::Tensor slope;
};

// Convolutions treat time steps as channels over a [N, features] image with
// a (1 x 3) window; the first maps T_obs -> T_pred channels, the rest keep
// T_pred and add a residual. A final linear map gives 5 values per node/step.
struct TcnWeights {
  std::vector<TcnLayer> layers;
  Linear head;

  static TcnWeights init(std::size_t t_obs, std::size_t t_pred, std::size_t dim, std::size_t num_layers,
                         std::size_t kernel_size, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Per future step and pedestrian: mean, positive std-devs and correlation
// of a displacement-space bi-variate normal.
struct BiGaussianParams {
  ad::Tensor mu;     // [T_pred, N, 2]
  ad::Tensor sigma;  // [T_pred, N, 2]
  ad::Tensor rho;    // [T_pred, N]

  std::size_t t_pred() const { return mu.dim(0); }
  std::size_t num_pedestrians() const { return mu.dim(1); }
};

// PReLU(A^T . H . W) per leading slice: A [B, M, M], H [B, M, F], W [F, F].
// Node j aggregates the rows i with A[i, j] != 0.
ad::Tensor gcn_layer(const ad::Tensor& adjacency, const ad::Tensor& features, const ad::Tensor& weight,
                     const ad::Tensor& slope);

// Spatial GCN then temporal GCN. a_spa [T,N,N], a_tmp [N,T,T], h0 [T,N,F].
// Returns [T, N, F].
ad::Tensor interaction_tendency_branch(const ad::Tensor& a_spa, const ad::Tensor& a_tmp, const ad::Tensor& h0_spa,
                                       const BranchWeights& w);

// Temporal GCN then spatial GCN. h0 is [N, T, F]. Returns [T, N, F].
ad::Tensor tendency_interaction_branch(const ad::Tensor& a_spa, const ad::Tensor& a_tmp, const ad::Tensor& h0_tmp,
                                       const BranchWeights& w);

ad::Tensor fuse_branches(const ad::Tensor& itf, const ad::Tensor& tif);

// H [T_obs, N, F] -> raw [T_pred, N, 5].
ad::Tensor tcn_raw(const ad::Tensor& h, const TcnWeights& w);
// (a, b, c, d, e) -> mu = (a, b), sigma = (exp c, exp d), rho = tanh e.
BiGaussianParams to_bigaussian(const ad::Tensor& raw);
BiGaussianParams tcn_head(const ad::Tensor& h, const TcnWeights& w);

// Draws one displacement per (t, n) through the Cholesky factor of the
// covariance and integrates from `last_observed` ([N, 2] flattened).
// Returns absolute positions [T_pred, N, 2].
ad::Tensor sample_trajectory(const BiGaussianParams& params, std::span<const double> last_observed,
                             std::uint64_t seed);
ad::Tensor mean_trajectory(const BiGaussianParams& params, std::span<const double> last_observed);

}  // namespace sgcn::repr
