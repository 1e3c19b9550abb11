#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tscenejal/core_model.hpp"

namespace tscenejal {

// Random-walk and edge-kernel parameters for the marginalized graph kernel.
//
// Walks start uniformly, stop with probability `gamma` at every node and
// otherwise move to a uniformly chosen out-neighbour. Edges are compared with
// exp(-|e - e'| / (2 sigma^2)); nodes with xi(v == v') / 2.
struct KernelConfig {
  double gamma = 0.1;
  double sigma = 1.0;
  double tol = 1e-8;
  int max_iter = 1000;
  double min_dist = 0.1;
  double tau = 0.3;  // confidence filter, shared with the entropy metric

  void validate() const;
};

// Directed, node-labelled, edge-weighted graph. Labels are catalog indices,
// with catalog.ego_index() / mirror_index() for the reserved nodes. Weights are
// stored densely, row = source; 0 means "no edge".
class SceneGraph {
 public:
  SceneGraph(std::vector<int> labels, std::vector<double> weights);

  std::size_t node_count() const noexcept { return labels_.size(); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  double weight(std::size_t from, std::size_t to) const { return weights_[from * labels_.size() + to]; }
  bool has_edge(std::size_t from, std::size_t to) const { return weight(from, to) > 0.0; }
  std::size_t out_degree(std::size_t node) const;
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<int> labels_;
  std::vector<double> weights_;
};

// Ego node (index 0, at the origin) plus one node per detection with
// confidence >= tau, fully connected in both directions with weight
// 1 / max(distance, min_dist). With no such detection the graph is ego <-> mirror
// with unit weights.
SceneGraph build_scene_graph(const Scene& scene, const ClassCatalog& catalog, const KernelConfig& config);

// Optional diagnostics from the fixed-point solve.
struct KernelTrace {
  int iterations = 0;
  std::vector<double> residuals;  // sup-norm change per iteration
};

// Marginalized kernel by fixed-point iteration over the label-matched product
// graph. Throws ConvergenceError after max_iter iterations.
double marginalized_kernel(const SceneGraph& g1, const SceneGraph& g2, const KernelConfig& config,
                           KernelTrace* trace = nullptr);

// Truncated series of the same kernel, accumulated one path length at a time
// up to `max_len`. Independent of the fixed-point solver; intended as a test
// oracle. Requires |V1|*|V2| <= 64 and max_len in [1, 40].
double kernel_brute_force(const SceneGraph& g1, const SceneGraph& g2, const KernelConfig& config,
                          int max_len);

// K(Gi,Gj) / sqrt(K(Gi,Gi) K(Gj,Gj)) in [0, 1].
double similarity(const Scene& a, const Scene& b, const ClassCatalog& catalog, const KernelConfig& config);

// Normalization given precomputed kernel values.
double normalized_similarity(double cross, double self_a, double self_b);

struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> values;           // row-major size x size
  std::size_t kernel_evaluations = 0;   // raw kernel solves performed

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

// Symmetric matrix with unit diagonal; each unordered pair is solved once.
// Evaluations are spread over `jobs` threads (0 = all cores).
SimilarityMatrix pairwise_similarity_matrix(std::span<const Scene> scenes, const ClassCatalog& catalog,
                                            const KernelConfig& config, std::size_t jobs = 1);

}  // namespace tscenejal
