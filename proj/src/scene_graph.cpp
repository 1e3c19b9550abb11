#include "tscenejal/scene_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "tscenejal/detail/parallel.hpp"
#include "tscenejal/errors.hpp"

namespace tscenejal {

void KernelConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument(fmt::format("kernel.gamma must be in (0,1), got {}", gamma));
  if (!(sigma > 0.0)) throw InvalidArgument(fmt::format("kernel.sigma must be positive, got {}", sigma));
  if (!(tol > 0.0)) throw InvalidArgument(fmt::format("kernel.tol must be positive, got {}", tol));
  if (max_iter < 1) throw InvalidArgument(fmt::format("kernel.max_iter must be >= 1, got {}", max_iter));
  if (!(min_dist > 0.0)) throw InvalidArgument(fmt::format("kernel.min_dist must be positive, got {}", min_dist));
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument(fmt::format("tau must be in [0,1], got {}", tau));
}

SceneGraph::SceneGraph(std::vector<int> labels, std::vector<double> weights)
    : labels_(std::move(labels)), weights_(std::move(weights)) {
  const std::size_t n = labels_.size();
  if (n == 0) throw InvalidArgument("scene graph needs at least one node");
  if (weights_.size() != n * n) throw InvalidArgument("scene graph weight matrix has wrong size");
  for (double w : weights_)
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("edge weights must be finite and non-negative");
  for (std::size_t i = 0; i < n; ++i)
    if (weights_[i * n + i] != 0.0) throw InvalidArgument("self loops are not allowed");
}

std::size_t SceneGraph::out_degree(std::size_t node) const {
  const std::size_t n = labels_.size();
  std::size_t d = 0;
  for (std::size_t j = 0; j < n; ++j) d += weights_[node * n + j] > 0.0 ? 1 : 0;
  return d;
}

SceneGraph build_scene_graph(const Scene& scene, const ClassCatalog& catalog, const KernelConfig& config) {
  std::vector<int> labels{catalog.ego_index()};
  std::vector<std::array<double, 3>> centers{{0.0, 0.0, 0.0}};
  for (const auto& det : scene.detections) {
    if (det.confidence < config.tau) continue;
    auto idx = catalog.index_of(det.class_label);
    if (!idx) throw DataError(fmt::format("scene {}: unknown class '{}'", scene.id, det.class_label));
    labels.push_back(static_cast<int>(*idx));
    centers.push_back({det.box.x, det.box.y, det.box.z});
  }
  if (labels.size() == 1) {
    return SceneGraph({catalog.ego_index(), catalog.mirror_index()}, {0.0, 1.0, 1.0, 0.0});
  }
  const std::size_t n = labels.size();
  std::vector<double> weights(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(std::pow(centers[i][0] - centers[j][0], 2) +
                                 std::pow(centers[i][1] - centers[j][1], 2) +
                                 std::pow(centers[i][2] - centers[j][2], 2));
      const double w = 1.0 / std::max(d, config.min_dist);
      weights[i * n + j] = w;
      weights[j * n + i] = w;
    }
  }
  return SceneGraph(std::move(labels), std::move(weights));
}

namespace {

struct WalkModel {
  std::vector<double> start;
  std::vector<double> stop;
  std::vector<std::vector<std::pair<std::size_t, double>>> moves;  // (target, transition probability)
  std::vector<std::vector<double>> move_weights;                   // edge weight of each move
};

// A node without out-edges ends every walk that reaches it.
WalkModel walk_model(const SceneGraph& g, double gamma) {
  const std::size_t n = g.node_count();
  WalkModel m;
  m.start.assign(n, 1.0 / static_cast<double>(n));
  m.stop.resize(n);
  m.moves.resize(n);
  m.move_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t deg = g.out_degree(i);
    m.stop[i] = deg == 0 ? 1.0 : gamma;
    for (std::size_t j = 0; j < n; ++j) {
      if (!g.has_edge(i, j)) continue;
      m.moves[i].emplace_back(j, (1.0 - gamma) / static_cast<double>(deg));
      m.move_weights[i].push_back(g.weight(i, j));
    }
  }
  return m;
}

double edge_kernel(double e1, double e2, double sigma) {
  return std::exp(-std::abs(e1 - e2) / (2.0 * sigma * sigma));
}

}  // namespace

double marginalized_kernel(const SceneGraph& first, const SceneGraph& second, const KernelConfig& config,
                           KernelTrace* trace) {
  config.validate();
  // Canonical argument order makes K(G, G') == K(G', G) bit for bit.
  const bool swap = std::tie(second.labels(), second.weights()) < std::tie(first.labels(), first.weights());
  const SceneGraph& g1 = swap ? second : first;
  const SceneGraph& g2 = swap ? first : second;
  const WalkModel w1 = walk_model(g1, config.gamma);
  const WalkModel w2 = walk_model(g2, config.gamma);
  const std::size_t n2 = g2.node_count();

  // Only label-matched node pairs carry kernel mass; the node kernel there is 1/2.
  std::vector<std::size_t> pair_of(g1.node_count() * n2, std::numeric_limits<std::size_t>::max());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < g1.node_count(); ++a)
    for (std::size_t b = 0; b < n2; ++b)
      if (g1.labels()[a] == g2.labels()[b]) {
        pair_of[a * n2 + b] = pairs.size();
        pairs.emplace_back(a, b);
      }
  if (pairs.empty()) {
    if (trace) *trace = KernelTrace{};
    return 0.0;
  }
  constexpr double kNode = 0.5;

  // Transition rows of the product walk: coef = t1 * t2 * K_edge * K_node.
  struct Step {
    std::size_t target;
    double coef;
  };
  std::vector<std::vector<Step>> steps(pairs.size());
  std::vector<double> stop(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    stop[p] = w1.stop[a] * w2.stop[b];
    for (std::size_t i = 0; i < w1.moves[a].size(); ++i) {
      const auto [ta, pa] = w1.moves[a][i];
      for (std::size_t j = 0; j < w2.moves[b].size(); ++j) {
        const auto [tb, pb] = w2.moves[b][j];
        const std::size_t q = pair_of[ta * n2 + tb];
        if (q == std::numeric_limits<std::size_t>::max()) continue;
        const double ke = edge_kernel(w1.move_weights[a][i], w2.move_weights[b][j], config.sigma);
        steps[p].push_back({q, pa * pb * ke * kNode});
      }
    }
  }

  // R = stop + T R, a contraction with ratio <= (1 - gamma)^2 / 2.
  std::vector<double> r = stop;
  std::vector<double> next(pairs.size());
  if (trace) *trace = KernelTrace{};
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < config.max_iter) {
    ++iter;
    residual = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      double v = stop[p];
      for (const auto& s : steps[p]) v += s.coef * r[s.target];
      next[p] = v;
      residual = std::max(residual, std::abs(v - r[p]));
    }
    r.swap(next);
    if (trace) trace->residuals.push_back(residual);
    if (residual < config.tol) break;
  }
  if (trace) trace->iterations = iter;
  if (!(residual < config.tol))
    throw ConvergenceError(
        fmt::format("marginalized kernel did not converge in {} iterations (residual {:.3e})", iter, residual),
        residual);

  double k = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    k += w1.start[a] * w2.start[b] * kNode * r[p];
  }
  return k;
}

double kernel_brute_force(const SceneGraph& g1, const SceneGraph& g2, const KernelConfig& config, int max_len) {
  config.validate();
  const std::size_t n1 = g1.node_count();
  const std::size_t n2 = g2.node_count();
  if (n1 * n2 > 64) throw InvalidArgument(fmt::format("brute-force kernel limited to 64 node pairs, got {}", n1 * n2));
  if (max_len < 1 || max_len > 40) throw InvalidArgument(fmt::format("max_len must be in [1, 40], got {}", max_len));

  auto node_k = [&](std::size_t a, std::size_t b) { return g1.labels()[a] == g2.labels()[b] ? 0.5 : 0.0; };
  auto stop_p = [&](const SceneGraph& g, std::size_t v) { return g.out_degree(v) == 0 ? 1.0 : config.gamma; };
  auto move_p = [&](const SceneGraph& g, std::size_t from, std::size_t to) {
    if (!g.has_edge(from, to)) return 0.0;
    return (1.0 - config.gamma) / static_cast<double>(g.out_degree(from));
  };

  // mass[a][b]: total p(h) p(h') K_z over path pairs of the current length
  // that end at (a, b), before the stop factor.
  std::vector<double> mass(n1 * n2);
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n2; ++b)
      mass[a * n2 + b] = (1.0 / static_cast<double>(n1)) * (1.0 / static_cast<double>(n2)) * node_k(a, b);

  double total = 0.0;
  for (int len = 1; len <= max_len; ++len) {
    for (std::size_t a = 0; a < n1; ++a)
      for (std::size_t b = 0; b < n2; ++b) total += mass[a * n2 + b] * stop_p(g1, a) * stop_p(g2, b);
    if (len == max_len) break;
    std::vector<double> grown(n1 * n2, 0.0);
    for (std::size_t a = 0; a < n1; ++a)
      for (std::size_t b = 0; b < n2; ++b) {
        const double m = mass[a * n2 + b];
        if (m == 0.0) continue;
        for (std::size_t c = 0; c < n1; ++c)
          for (std::size_t d = 0; d < n2; ++d) {
            const double t = move_p(g1, a, c) * move_p(g2, b, d);
            if (t == 0.0) continue;
            grown[c * n2 + d] += m * t * edge_kernel(g1.weight(a, c), g2.weight(b, d), config.sigma) * node_k(c, d);
          }
      }
    mass.swap(grown);
  }
  return total;
}

double normalized_similarity(double cross, double self_a, double self_b) {
  if (!(self_a > 0.0) || !(self_b > 0.0))
    throw Error(fmt::format("self-kernel must be positive (got {}, {})", self_a, self_b));
  const double s = cross / std::sqrt(self_a * self_b);
  return std::clamp(s, 0.0, 1.0);
}

double similarity(const Scene& a, const Scene& b, const ClassCatalog& catalog, const KernelConfig& config) {
  const SceneGraph ga = build_scene_graph(a, catalog, config);
  const SceneGraph gb = build_scene_graph(b, catalog, config);
  const double kaa = marginalized_kernel(ga, ga, config);
  const double kbb = marginalized_kernel(gb, gb, config);
  return normalized_similarity(marginalized_kernel(ga, gb, config), kaa, kbb);
}

SimilarityMatrix pairwise_similarity_matrix(std::span<const Scene> scenes, const ClassCatalog& catalog,
                                            const KernelConfig& config, std::size_t jobs) {
  if (scenes.empty()) throw InvalidArgument("similarity matrix needs at least one scene");
  config.validate();
  const std::size_t n = scenes.size();
  std::vector<SceneGraph> graphs;
  graphs.reserve(n);
  for (const auto& s : scenes) graphs.push_back(build_scene_graph(s, catalog, config));

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  tasks.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) tasks.emplace_back(i, j);

  std::vector<double> raw(tasks.size());
  detail::parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    raw[t] = marginalized_kernel(graphs[tasks[t].first], graphs[tasks[t].second], config);
  });

  std::vector<double> self(n);
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (tasks[t].first == tasks[t].second) self[tasks[t].first] = raw[t];

  SimilarityMatrix m;
  m.size = n;
  m.values.assign(n * n, 0.0);
  m.kernel_evaluations = tasks.size();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto [i, j] = tasks[t];
    const double s = i == j ? 1.0 : normalized_similarity(raw[t], self[i], self[j]);
    m.values[i * n + j] = s;
    m.values[j * n + i] = s;
  }
  return m;
}

}  // namespace tscenejal
