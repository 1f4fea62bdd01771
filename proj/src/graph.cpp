#include "sgcn/graph.hpp"

#include <cmath>
#include <limits>

#include "sgcn/errors.hpp"

namespace sgcn::graph {

GraphInputs GraphInputs::from_nodes(const ad::Tensor& nodes) {
  if (nodes.rank() != 3 || nodes.dim(2) != 2) {
    throw DimensionError("graph inputs: nodes must be [T, N, 2], got " + ad::to_string(nodes.shape()));
  }
  const std::size_t t = nodes.dim(0), n = nodes.dim(1);
  GraphInputs in;
  in.spatial_nodes = nodes;
  in.temporal_nodes = ad::permute(nodes, {1, 0, 2});
  in.spatial_edges = ad::Mask::all({n, n}, true);
  in.temporal_edges = ad::Mask::upper_triangular(t);
  return in;
}

AsymmetricConvLayer AsymmetricConvLayer::init(std::size_t channels, std::size_t kernel_size, Rng& rng) {
  AsymmetricConvLayer layer;
  layer.row = Conv2d::init(channels, channels, 1, kernel_size, rng);
  layer.col = Conv2d::init(channels, channels, kernel_size, 1, rng);
  layer.slope = prelu_slope();
  return layer;
}

void AsymmetricConvLayer::visit(const std::string& prefix, const ParamVisitor& fn) {
  row.visit(prefix + ".row", fn);
  col.visit(prefix + ".col", fn);
  fn(prefix + ".slope", slope);
}

void AttentionBranch::visit(const std::string& prefix, const ParamVisitor& fn) {
  embed.visit(prefix + ".embed", fn);
  query.visit(prefix + ".query", fn);
  key.visit(prefix + ".key", fn);
  for (std::size_t l = 0; l < asym.size(); ++l) asym[l].visit(prefix + ".asym" + std::to_string(l), fn);
}

SparseGraphWeights SparseGraphWeights::init(const GraphConfig& config, Rng& rng) {
  if (config.kernel_size % 2 == 0) throw ConfigurationError("asymmetric kernel size must be odd");
  const std::size_t d = config.embed_dim;
  SparseGraphWeights w;
  auto make_branch = [&](std::size_t channels) {
    AttentionBranch b;
    b.embed = Linear::init(2, d, rng);
    b.query = Linear::init(d, d, rng);
    b.key = Linear::init(d, d, rng);
    for (std::size_t l = 0; l < config.asym_layers; ++l) {
      b.asym.push_back(AsymmetricConvLayer::init(channels, config.kernel_size, rng));
    }
    return b;
  };
  w.spatial = make_branch(config.t_obs);
  w.temporal = make_branch(1);
  w.fusion = Conv2d::init(config.t_obs, config.t_obs, 1, 1, rng);
  return w;
}

void SparseGraphWeights::visit(const std::string& prefix, const ParamVisitor& fn) {
  spatial.visit(prefix + ".spatial", fn);
  fusion.visit(prefix + ".fusion", fn);
  temporal.visit(prefix + ".temporal", fn);
}

ad::Tensor sinusoidal_encoding(std::size_t length, std::size_t dim) {
  std::vector<double> table(length * dim);
  for (std::size_t pos = 0; pos < length; ++pos)
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      table[pos * dim + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return ad::Tensor::from({length, dim}, std::move(table));
}

ad::Tensor embed_nodes(const ad::Tensor& nodes, const Linear& embed, const ad::Tensor* encoding) {
  if (nodes.shape().back() != 2) throw DimensionError("embed_nodes: last extent must be 2");
  auto e = embed(nodes);
  if (encoding) e = ad::add(e, *encoding);
  return e;
}

ad::Tensor attention_scores(const ad::Tensor& embedding, const Linear& query, const Linear& key, double scale,
                            const ad::Mask* mask) {
  auto q = query(embedding);
  auto k = key(embedding);
  auto logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / scale);
  return ad::softmax_lastdim(logits, mask);
}

ad::Tensor fuse_spatial_temporal(const ad::Tensor& stacked, const Conv2d& fusion) {
  const auto& ks = fusion.kernel.shape();
  if (stacked.rank() != 3) throw DimensionError("fusion: stacked scores must be [T, N, N]");
  if (ks[0] != stacked.dim(0) || ks[1] != stacked.dim(0) || ks[2] != 1 || ks[3] != 1) {
    throw ConfigurationError("fusion: kernels " + ad::to_string(ks) + " do not map " +
                             std::to_string(stacked.dim(0)) + " time channels with a 1x1 window");
  }
  return fusion(stacked);
}

ad::Tensor asymmetric_conv_features(const ad::Tensor& input, const std::vector<AsymmetricConvLayer>& layers) {
  ad::Tensor f = input;
  for (const auto& layer : layers) {
    f = ad::prelu(ad::add(layer.row(f), layer.col(f)), layer.slope);
  }
  return f;
}

ad::Mask sparse_mask(const ad::Tensor& features, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigurationError("threshold xi must lie in [0, 1]");
  // sigmoid(f) >= xi  <=>  f >= logit(xi); avoids sigmoid rounding to 1 for large f.
  const double inf = std::numeric_limits<double>::infinity();
  const double cut = xi == 0.0 ? -inf : xi == 1.0 ? inf : std::log(xi / (1.0 - xi));
  ad::Mask m;
  m.shape = features.shape();
  m.on.resize(features.numel());
  const auto& f = features.data();
  for (std::size_t i = 0; i < f.size(); ++i) m.on[i] = f[i] >= cut ? 1 : 0;
  return m;
}

ad::Mask with_self_loops(const ad::Mask& mask) {
  if (mask.shape.size() < 2) throw DimensionError("with_self_loops: mask rank < 2");
  const std::size_t rows = mask.shape[mask.shape.size() - 2], cols = mask.shape.back();
  if (rows != cols) throw DimensionError("with_self_loops: slices must be square");
  ad::Mask out = mask;
  const std::size_t slices = mask.on.size() / (rows * cols);
  for (std::size_t s = 0; s < slices; ++s)
    for (std::size_t i = 0; i < rows; ++i) out.on[s * rows * cols + i * cols + i] = 1;
  return out;
}

ad::Tensor sparse_adjacency(const ad::Mask& mask, const ad::Tensor& dense) {
  if (mask.shape != dense.shape()) {
    throw DimensionError("sparse_adjacency: mask " + ad::to_string(mask.shape) + " vs scores " +
                         ad::to_string(dense.shape()));
  }
  auto support = with_self_loops(mask);
  std::vector<double> keep(support.on.begin(), support.on.end());
  return ad::mul(dense, ad::Tensor::from(dense.shape(), std::move(keep)));
}

namespace {

SparseAdjacency sparsify(ad::Tensor dense, ad::Tensor features, const GraphConfig& config,
                         const ad::Mask* frozen_mask) {
  SparseAdjacency adj;
  adj.mask = frozen_mask ? *frozen_mask : sparse_mask(features, config.xi);
  if (adj.mask.shape != dense.shape()) throw DimensionError("frozen mask shape does not match the scores");
  adj.support = with_self_loops(adj.mask);
  adj.raw = sparse_adjacency(adj.mask, dense);
  adj.normalized = ad::zero_softmax_lastdim(adj.raw, config.zero_softmax_eps);
  adj.dense = std::move(dense);
  adj.features = std::move(features);
  return adj;
}

}  // namespace

GraphResult build_sparse_spatial_graph(const GraphInputs& inputs, const SparseGraphWeights& weights,
                                       const GraphConfig& config, const ad::Mask* frozen_mask) {
  const auto& branch = weights.spatial;
  const double scale = std::sqrt(static_cast<double>(config.embed_dim));
  GraphResult r;
  r.embedding = embed_nodes(inputs.spatial_nodes, branch.embed);
  r.scores = attention_scores(r.embedding, branch.query, branch.key, scale, &inputs.spatial_edges);
  auto fused = fuse_spatial_temporal(r.scores, weights.fusion);
  auto features = asymmetric_conv_features(fused, branch.asym);
  r.adjacency = sparsify(std::move(fused), std::move(features), config, frozen_mask);
  return r;
}

GraphResult build_sparse_temporal_graph(const GraphInputs& inputs, const SparseGraphWeights& weights,
                                        const GraphConfig& config, const ad::Mask* frozen_mask) {
  const auto& branch = weights.temporal;
  const std::size_t n = inputs.temporal_nodes.dim(0), t = inputs.temporal_nodes.dim(1);
  const double scale = std::sqrt(static_cast<double>(config.embed_dim));
  GraphResult r;
  auto encoding = sinusoidal_encoding(t, config.embed_dim);
  r.embedding = embed_nodes(inputs.temporal_nodes, branch.embed, &encoding);
  r.scores = attention_scores(r.embedding, branch.query, branch.key, scale, &inputs.temporal_edges);
  // Each pedestrian's T x T slice is a single-channel image for the conv stack.
  auto features = ad::reshape(asymmetric_conv_features(ad::reshape(r.scores, {n, 1, t, t}), branch.asym), {n, t, t});
  r.adjacency = sparsify(r.scores, std::move(features), config, frozen_mask);
  return r;
}

}  // namespace sgcn::graph
