#include "sgcn/model.hpp"

#include "sgcn/errors.hpp"
#include "sgcn/ops.hpp"

namespace sgcn::model {

graph::GraphConfig ModelConfig::graph() const {
  graph::GraphConfig g;
  g.t_obs = t_obs;
  g.embed_dim = embed_dim;
  g.asym_layers = asym_layers;
  g.kernel_size = asym_kernel;
  g.xi = xi;
  return g;
}

void ModelConfig::validate() const {
  if (t_obs < 1 || t_pred < 1 || embed_dim < 1 || tcn_layers < 1) {
    throw ConfigurationError("model extents must be positive");
  }
  if (asym_kernel % 2 == 0 || tcn_kernel % 2 == 0) throw ConfigurationError("kernel sizes must be odd");
  if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigurationError("threshold xi must lie in [0, 1]");
}

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Model m;
  m.config_ = config;
  m.graph = graph::SparseGraphWeights::init(config.graph(), rng);
  m.branches = repr::BranchWeights::init(config.embed_dim, rng);
  m.tcn = repr::TcnWeights::init(config.t_obs, config.t_pred, config.embed_dim, config.tcn_layers, config.tcn_kernel,
                                 rng);
  return m;
}

void Model::set_xi(double xi) {
  auto c = config_;
  c.xi = xi;
  c.validate();
  config_ = c;
}

Prediction Model::forward(const ad::Tensor& displacements, const FrozenMasks* frozen) const {
  if (displacements.rank() != 3 || displacements.dim(0) != config_.t_obs || displacements.dim(2) != 2) {
    throw DimensionError("model input must be [" + std::to_string(config_.t_obs) + ", N, 2], got " +
                         ad::to_string(displacements.shape()));
  }
  const auto gc = config_.graph();
  auto inputs = graph::GraphInputs::from_nodes(displacements);
  Prediction p;
  p.spatial = graph::build_sparse_spatial_graph(inputs, graph, gc, frozen ? &frozen->spatial : nullptr);
  p.temporal = graph::build_sparse_temporal_graph(inputs, graph, gc, frozen ? &frozen->temporal : nullptr);
  const auto& a_spa = p.spatial.adjacency.normalized;
  const auto& a_tmp = p.temporal.adjacency.normalized;
  p.itf = repr::interaction_tendency_branch(a_spa, a_tmp, p.spatial.embedding, branches);
  p.tif = repr::tendency_interaction_branch(a_spa, a_tmp, p.temporal.embedding, branches);
  p.params = repr::tcn_head(repr::fuse_branches(p.itf, p.tif), tcn);
  return p;
}

void Model::visit(const ParamVisitor& fn) {
  graph.visit("graph", fn);
  branches.visit("gcn", fn);
  tcn.visit("tcn", fn);
}

std::vector<std::pair<std::string, ad::Tensor>> Model::parameters() const {
  std::vector<std::pair<std::string, ad::Tensor>> out;
  const_cast<Model*>(this)->visit([&](const std::string& name, ad::Tensor& t) { out.emplace_back(name, t); });
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : parameters()) n += t.numel();
  return n;
}

Model Model::clone() const {
  Model copy = *this;
  copy.visit([](const std::string&, ad::Tensor& t) { t = t.clone(); });
  return copy;
}

void Model::zero_grad() {
  visit([](const std::string&, ad::Tensor& t) { t.zero_grad(); });
}

}  // namespace sgcn::model
