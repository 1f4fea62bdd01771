#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sgcn/graph.hpp"
#include "sgcn/representation.hpp"

namespace sgcn::model {

struct ModelConfig {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t embed_dim = 64;
  std::size_t asym_layers = 7;
  std::size_t asym_kernel = 3;
  std::size_t tcn_layers = 4;
  std::size_t tcn_kernel = 3;
  double xi = 0.5;

  graph::GraphConfig graph() const;
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Optional fixed masks that replace the thresholded ones.
struct FrozenMasks {
  ad::Mask spatial;
  ad::Mask temporal;
};

struct Prediction {
  repr::BiGaussianParams params;
  graph::GraphResult spatial;   // adjacency.normalized is [T, N, N]
  graph::GraphResult temporal;  // adjacency.normalized is [N, T, T]
  ad::Tensor itf;
  ad::Tensor tif;
};

class Model {
 public:
  static Model init(const ModelConfig& config, std::uint64_t seed);

  // displacements: observed per-step deltas [T_obs, N, 2].
  Prediction forward(const ad::Tensor& displacements, const FrozenMasks* frozen = nullptr) const;

  const ModelConfig& config() const { return config_; }
  void set_xi(double xi);

  // Every trainable tensor with a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, ad::Tensor>> parameters() const;
  std::size_t parameter_count() const;
  Model clone() const;
  void zero_grad();

  graph::SparseGraphWeights graph;
  repr::BranchWeights branches;
  repr::TcnWeights tcn;

 private:
  void visit(const ParamVisitor& fn);
  ModelConfig config_;
};

}  // namespace sgcn::model
