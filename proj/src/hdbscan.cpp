#include "trackmine/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trackmine/error.hpp"
#include "trackmine/parallel.hpp"
#include "trackmine/simd/kernels.hpp"

namespace trackmine {

void validate(const HdbscanConfig& cfg) {
  if (cfg.min_size < 2) throw Error(ErrorKind::Usage, "min_size must be >= 2");
  if (cfg.effective_min_samples() < 1) throw Error(ErrorKind::Usage, "min_samples must be >= 1");
}

double euclidean(const PointSet& points, std::size_t a, std::size_t b) {
  return std::sqrt(simd::active().squared_l2(points.coords.data() + a * points.dim,
                                             points.coords.data() + b * points.dim, points.dim));
}

std::vector<double> core_distances(const PointSet& points, std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0) throw Error(ErrorKind::Usage, "core distance needs k >= 1");
  if (n <= k) {
    throw Error(ErrorKind::TooFewPoints, "core distance with k=" + std::to_string(k) + " needs more than " +
                                             std::to_string(k) + " points, got " + std::to_string(n));
  }
  std::vector<double> core(n);
  const auto& kern = simd::active();
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> d(n - 1);
    for (std::size_t i = begin; i < end; ++i) {
      const double* pi = points.coords.data() + i * points.dim;
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        d[m++] = kern.squared_l2(pi, points.coords.data() + j * points.dim, points.dim);
      }
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
      core[i] = std::sqrt(d[k - 1]);
    }
  });
  return core;
}

double mutual_reachability(const PointSet& points, std::size_t a, std::size_t b,
                           std::span<const double> core) {
  return std::max({core[a], core[b], euclidean(points, a, b)});
}

bool edge_less(const MstEdge& x, const MstEdge& y) {
  if (x.weight != y.weight) return x.weight < y.weight;
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

namespace {

MstEdge make_edge(std::size_t u, std::size_t v, double w) {
  return {std::min(u, v), std::max(u, v), w};
}

struct PrimState {
  explicit PrimState(std::size_t n) : best(n), remaining(n - 1) {
    std::iota(remaining.begin(), remaining.end(), std::size_t{1});
    for (std::size_t v = 0; v < n; ++v) best[v] = {0, v, INFINITY};
  }
  std::vector<MstEdge> best;  // best known edge into the tree, per vertex
  std::vector<std::size_t> remaining;
};

template <typename Weight>
std::vector<MstEdge> prim(std::size_t n, Weight&& weight, bool parallel) {
  std::vector<MstEdge> tree;
  if (n < 2) return tree;
  tree.reserve(n - 1);
  PrimState s(n);
  std::size_t current = 0;
  while (!s.remaining.empty()) {
    const std::size_t m = s.remaining.size();
    auto relax = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t v = s.remaining[i];
        const MstEdge cand = make_edge(current, v, weight(current, v));
        if (edge_less(cand, s.best[v])) s.best[v] = cand;
      }
    };
    if (parallel) {
      parallel_for(m, relax);
    } else {
      relax(0, m);
    }
    // Every candidate edge ends at its own vertex, so keys never tie.
    std::size_t pick = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (edge_less(s.best[s.remaining[i]], s.best[s.remaining[pick]])) pick = i;
    }
    const std::size_t v = s.remaining[pick];
    tree.push_back(s.best[v]);
    s.remaining[pick] = s.remaining.back();
    s.remaining.pop_back();
    current = v;
  }
  return tree;
}

}  // namespace

std::vector<MstEdge> build_mst(std::size_t n,
                               const std::function<double(std::size_t, std::size_t)>& weight) {
  return prim(n, weight, false);
}

std::vector<MstEdge> build_mst(const PointSet& points, std::span<const double> core) {
  const auto& kern = simd::active();
  const double* base = points.coords.data();
  const std::size_t dim = points.dim;
  auto weight = [&](std::size_t a, std::size_t b) {
    const double d = std::sqrt(kern.squared_l2(base + a * dim, base + b * dim, dim));
    return std::max({core[a], core[b], d});
  };
  return prim(points.size(), weight, true);
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), label_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    std::iota(label_.begin(), label_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Merges the sets of a and b; the merged set is tagged with `label`.
  void unite(std::size_t a, std::size_t b, std::size_t label) {
    a = find(a);
    b = find(b);
    parent_[b] = a;
    label_[a] = label;
  }
  std::size_t label(std::size_t x) { return label_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> label_;
};

}  // namespace

std::vector<LinkageStep> single_linkage(std::size_t n, std::vector<MstEdge> edges) {
  std::sort(edges.begin(), edges.end(), edge_less);
  UnionFind uf(n);
  std::vector<std::size_t> size(2 * n, 1);
  std::vector<LinkageStep> out;
  out.reserve(edges.size());
  for (const auto& e : edges) {
    const std::size_t la = uf.label(e.a);
    const std::size_t lb = uf.label(e.b);
    if (la == lb) throw Error(ErrorKind::Invariant, "MST edge closes a cycle");
    const std::size_t node = n + out.size();
    size[node] = size[la] + size[lb];
    out.push_back({std::min(la, lb), std::max(la, lb), e.weight, size[node]});
    uf.unite(e.a, e.b, node);
  }
  return out;
}

double density_of(double distance) { return distance > 0.0 ? 1.0 / distance : 1e300; }

std::vector<std::size_t> CondensedTree::child_clusters(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (const auto& e : edges) {
    if (e.parent == cluster && e.child >= num_points) out.push_back(e.child);
  }
  return out;
}

CondensedTree condense_tree(std::size_t n, const std::vector<MstEdge>& mst, std::size_t min_size) {
  return condense_tree(n, single_linkage(n, mst), min_size);
}

CondensedTree condense_tree(std::size_t n, const std::vector<LinkageStep>& linkage,
                            std::size_t min_size) {
  if (n == 0) throw Error(ErrorKind::TooFewPoints, "cannot condense an empty tree");
  if (linkage.size() + 1 != n) throw Error(ErrorKind::Invariant, "linkage does not span all points");

  CondensedTree tree;
  tree.num_points = n;
  tree.birth_lambda.push_back(0.0);
  tree.parent.push_back(kNoParent);

  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : linkage[node - n].size; };
  auto add_cluster = [&](std::size_t parent_cluster, double lambda) {
    const std::size_t id = n + tree.birth_lambda.size();
    tree.birth_lambda.push_back(lambda);
    tree.parent.push_back(parent_cluster);
    return id;
  };
  // Emits every point under `node` as falling out of `cluster` at `lambda`.
  auto fall_out = [&](std::size_t node, std::size_t cluster, double lambda) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        tree.edges.push_back({cluster, x, lambda, 1});
      } else {
        stack.push_back(linkage[x - n].right);
        stack.push_back(linkage[x - n].left);
      }
    }
  };

  if (n == 1) {
    tree.edges.push_back({n, 0, density_of(0.0), 1});
  } else {
    // Breadth-first from the top of the dendrogram; each entry is (node, condensed cluster).
    std::vector<std::pair<std::size_t, std::size_t>> queue{{2 * n - 2, n}};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const auto [node, cluster] = queue[qi];
      const LinkageStep& step = linkage[node - n];
      const double lambda = density_of(step.distance);
      const std::size_t left_size = node_size(step.left);
      const std::size_t right_size = node_size(step.right);
      const bool left_big = left_size >= min_size;
      const bool right_big = right_size >= min_size;

      if (left_big && right_big) {
        for (std::size_t child : {step.left, step.right}) {
          const std::size_t id = add_cluster(cluster, lambda);
          tree.edges.push_back({cluster, id, lambda, node_size(child)});
          queue.emplace_back(child, id);
        }
      } else {
        for (std::size_t child : {step.left, step.right}) {
          if (node_size(child) >= min_size) {
            queue.emplace_back(child, cluster);
          } else {
            fall_out(child, cluster, lambda);
          }
        }
      }
    }
  }

  tree.stability.assign(tree.birth_lambda.size(), 0.0);
  for (const auto& e : tree.edges) {
    const std::size_t c = e.parent - n;
    tree.stability[c] += (e.lambda - tree.birth_lambda[c]) * static_cast<double>(e.child_size);
  }
  return tree;
}

ClusterAssignment extract_clusters(const CondensedTree& tree, ClusterSelection selection,
                                   bool allow_single_cluster) {
  const std::size_t n = tree.num_points;
  const std::size_t nc = tree.cluster_count();

  std::vector<std::vector<std::size_t>> children(nc);
  for (std::size_t c = 1; c < nc; ++c) children[tree.parent[c] - n].push_back(c);

  std::vector<bool> selected(nc, false);
  if (selection == ClusterSelection::Leaf) {
    for (std::size_t c = 0; c < nc; ++c) selected[c] = children[c].empty();
    if (!allow_single_cluster && nc == 1) selected[0] = false;
  } else {
    // Cluster ids grow with depth, so a reverse scan visits children before parents.
    std::vector<double> subtree(tree.stability);
    const std::size_t lowest = allow_single_cluster ? 0 : 1;
    for (std::size_t c = nc; c-- > lowest;) {
      double child_sum = 0.0;
      for (std::size_t ch : children[c]) child_sum += subtree[ch];
      if (children[c].empty() || tree.stability[c] > child_sum) {
        selected[c] = true;
        subtree[c] = tree.stability[c];
        std::vector<std::size_t> stack(children[c]);
        while (!stack.empty()) {
          const std::size_t d = stack.back();
          stack.pop_back();
          selected[d] = false;
          stack.insert(stack.end(), children[d].begin(), children[d].end());
        }
      } else {
        subtree[c] = child_sum;
      }
    }
  }

  // Densest point departure within each cluster's subtree.
  std::vector<double> max_lambda(nc, 0.0);
  std::vector<std::size_t> leaves_at(n, 0);
  std::vector<double> point_lambda(n, 0.0);
  for (const auto& e : tree.edges) {
    if (e.child < n) {
      leaves_at[e.child] = e.parent - n;
      point_lambda[e.child] = e.lambda;
      max_lambda[e.parent - n] = std::max(max_lambda[e.parent - n], e.lambda);
    }
  }
  for (std::size_t c = nc; c-- > 1;) {
    const std::size_t p = tree.parent[c] - n;
    max_lambda[p] = std::max(max_lambda[p], max_lambda[c]);
  }

  std::vector<std::size_t> owner(n, kNoParent);  // selected cluster per point
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = leaves_at[p];;) {
      if (selected[c]) {
        owner[p] = c;
        break;
      }
      if (tree.parent[c] == kNoParent) break;
      c = tree.parent[c] - n;
    }
  }

  // Number clusters by their smallest member.
  std::vector<int> label_of(nc, kNoise);
  ClusterAssignment out;
  out.labels.assign(n, kNoise);
  out.probabilities.assign(n, 0.0);
  out.outlier_scores.assign(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t c = owner[p];
    if (c == kNoParent) continue;
    if (label_of[c] == kNoise) {
      label_of[c] = static_cast<int>(out.cluster_count++);
      out.cluster_stability.push_back(tree.stability[c]);
    }
    out.labels[p] = label_of[c];
    const double lmax = max_lambda[c];
    out.probabilities[p] = lmax > 0.0 ? std::min(point_lambda[p], lmax) / lmax : 1.0;
  }
  for (std::size_t p = 0; p < n; ++p) {
    const double lmax = max_lambda[leaves_at[p]];
    out.outlier_scores[p] = lmax > 0.0 ? std::clamp((lmax - point_lambda[p]) / lmax, 0.0, 1.0) : 0.0;
  }
  return out;
}

ClusterAssignment hdbscan(const PointSet& points, const HdbscanConfig& cfg) {
  validate(cfg);
  const std::size_t n = points.size();
  if (n < cfg.min_size) {
    throw Error(ErrorKind::TooFewPoints, "hdbscan needs at least min_size=" +
                                             std::to_string(cfg.min_size) + " points, got " +
                                             std::to_string(n));
  }
  const auto core = core_distances(points, cfg.effective_min_samples());
  const auto mst = build_mst(points, core);
  const auto tree = condense_tree(n, mst, cfg.min_size);
  return extract_clusters(tree, cfg.selection, cfg.allow_single_cluster);
}

}  // namespace trackmine
