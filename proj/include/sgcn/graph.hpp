#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sgcn/layers.hpp"
#include "sgcn/ops.hpp"
#include "sgcn/tensor.hpp"

// Sparse directed graph learning: attention scores between trajectory points,
// pruned by a learned threshold mask and renormalized with Zero-Softmax.
//
// Orientation: entry (i, j) of every adjacency slice is the influence of node
// i on node j. Aggregation in the GCN therefore uses the transpose.
namespace sgcn::graph {

struct GraphConfig {
  std::size_t t_obs = 8;
  std::size_t embed_dim = 64;
  std::size_t asym_layers = 7;
  std::size_t kernel_size = 3;  // S, odd
  double xi = 0.5;
  double zero_softmax_eps = 1e-12;
};

// Spatial nodes [T, N, 2], temporal nodes [N, T, 2] (same values), a dense
// spatial edge template and an upper triangular temporal one.
struct GraphInputs {
  ad::Tensor spatial_nodes;
  ad::Tensor temporal_nodes;
  ad::Mask spatial_edges;
  ad::Mask temporal_edges;

  static GraphInputs from_nodes(const ad::Tensor& nodes);
};

// One (1 x S) row kernel and one (S x 1) column kernel whose summed response
// goes through PReLU.
struct AsymmetricConvLayer {
  Conv2d row;
  Conv2d col;
  ad::Tensor slope;

  static AsymmetricConvLayer init(std::size_t channels, std::size_t kernel_size, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct AttentionBranch {
  Linear embed;  // 2 -> d
  Linear query;  // d -> d
  Linear key;    // d -> d
  std::vector<AsymmetricConvLayer> asym;

  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct SparseGraphWeights {
  AttentionBranch spatial;
  AttentionBranch temporal;
  Conv2d fusion;  // 1 x 1, T_obs -> T_obs channels

  static SparseGraphWeights init(const GraphConfig& config, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct SparseAdjacency {
  ad::Tensor dense;       // R-hat, the pre-mask scores
  ad::Tensor features;    // F, output of the asymmetric conv stack
  ad::Mask mask;          // sigmoid(F) >= xi
  ad::Mask support;       // mask with the diagonal forced on
  ad::Tensor raw;         // support (.) dense
  ad::Tensor normalized;  // Zero-Softmax over rows of raw
};

struct GraphResult {
  ad::Tensor embedding;  // node embeddings of the branch
  ad::Tensor scores;     // stacked attention scores
  SparseAdjacency adjacency;
};

// Fixed sinusoidal table [length, dim].
ad::Tensor sinusoidal_encoding(std::size_t length, std::size_t dim);

// Linear map of [.., M, 2] nodes to [.., M, d], plus a [M, d] encoding if given.
ad::Tensor embed_nodes(const ad::Tensor& nodes, const Linear& embed, const ad::Tensor* encoding = nullptr);

// Row-stochastic softmax(Q K^T / scale) of embeddings E [.., M, d].
ad::Tensor attention_scores(const ad::Tensor& embedding, const Linear& query, const Linear& key, double scale,
                            const ad::Mask* mask = nullptr);

// 1 x 1 convolution across the time channel of stacked [T, N, N] scores.
ad::Tensor fuse_spatial_temporal(const ad::Tensor& stacked, const Conv2d& fusion);

// Applies the layer cascade; input is [C, H, W] or [B, C, H, W].
ad::Tensor asymmetric_conv_features(const ad::Tensor& input, const std::vector<AsymmetricConvLayer>& layers);

// 1 where sigmoid(F) >= xi. Throws ConfigurationError unless 0 <= xi <= 1.
ad::Mask sparse_mask(const ad::Tensor& features, double xi);

// Mask with the diagonal of every trailing square slice forced on.
ad::Mask with_self_loops(const ad::Mask& mask);

// min(M + I, 1) (.) R-hat, per slice.
ad::Tensor sparse_adjacency(const ad::Mask& mask, const ad::Tensor& dense);

// Builds A-hat_spa [T, N, N]. A frozen mask, when given, replaces the
// thresholded one (used to hold the mask constant during finite differencing).
GraphResult build_sparse_spatial_graph(const GraphInputs& inputs, const SparseGraphWeights& weights,
                                       const GraphConfig& config, const ad::Mask* frozen_mask = nullptr);

// Builds A-hat_tmp [N, T, T]; no fusion step since N varies between scenes.
GraphResult build_sparse_temporal_graph(const GraphInputs& inputs, const SparseGraphWeights& weights,
                                        const GraphConfig& config, const ad::Mask* frozen_mask = nullptr);

}  // namespace sgcn::graph
