#pragma once

// Hierarchical density-based clustering (HDBSCAN) with GLOSH outlier scores.
//
// Pipeline: core distances -> mutual reachability MST (Prim, O(n^2) time, O(n)
// memory) -> single-linkage dendrogram -> condensed tree -> excess-of-mass
// (or leaf) cluster selection. All tie-breaks are by point index, so results are
// independent of the worker count.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace trackmine {

inline constexpr int kNoise = -1;
inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

enum class ClusterSelection { ExcessOfMass, Leaf };

struct HdbscanConfig {
  std::size_t min_size = 14;
  std::size_t min_samples = 0;  // 0: same as min_size
  ClusterSelection selection = ClusterSelection::ExcessOfMass;
  // The root may be selected as the only cluster (a single dense blob is one cluster).
  bool allow_single_cluster = true;

  std::size_t effective_min_samples() const { return min_samples == 0 ? min_size : min_samples; }
};

void validate(const HdbscanConfig& cfg);

// Row-major point matrix.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> coords;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

double euclidean(const PointSet& points, std::size_t a, std::size_t b);

// Distance to the k-th nearest neighbour, the point itself excluded. Throws TooFewPoints
// unless n > k.
std::vector<double> core_distances(const PointSet& points, std::size_t k);

double mutual_reachability(const PointSet& points, std::size_t a, std::size_t b,
                           std::span<const double> core);

struct MstEdge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;
  double weight = 0;

  friend bool operator==(const MstEdge&, const MstEdge&) = default;
};

// Strict total order on edges: (weight, a, b).
bool edge_less(const MstEdge& x, const MstEdge& y);

// Prim over the implicit complete graph with the given symmetric weight function.
std::vector<MstEdge> build_mst(std::size_t n,
                               const std::function<double(std::size_t, std::size_t)>& weight);

// Prim over the mutual reachability graph; rows are processed in parallel.
std::vector<MstEdge> build_mst(const PointSet& points, std::span<const double> core);

// One agglomeration: node n+i joins `left` and `right` (left < right) at `distance`.
struct LinkageStep {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0;
  std::size_t size = 0;
};

std::vector<LinkageStep> single_linkage(std::size_t n, std::vector<MstEdge> edges);

// 1/distance; zero distances map to a large finite density.
double density_of(double distance);

struct CondensedEdge {
  std::size_t parent = 0;  // cluster id (>= num_points)
  std::size_t child = 0;   // point id (< num_points) or cluster id
  double lambda = 0;       // density at which the child leaves / is born
  std::size_t child_size = 0;
};

struct CondensedTree {
  std::size_t num_points = 0;
  std::vector<CondensedEdge> edges;
  // Indexed by cluster id - num_points; the root is cluster num_points.
  std::vector<double> birth_lambda;
  std::vector<double> stability;
  std::vector<std::size_t> parent;  // kNoParent for the root

  std::size_t root() const { return num_points; }
  std::size_t cluster_count() const { return stability.size(); }
  std::vector<std::size_t> child_clusters(std::size_t cluster) const;
};

CondensedTree condense_tree(std::size_t n, const std::vector<MstEdge>& mst, std::size_t min_size);
CondensedTree condense_tree(std::size_t n, const std::vector<LinkageStep>& linkage,
                            std::size_t min_size);

struct ClusterAssignment {
  std::vector<int> labels;            // 0..C-1 or kNoise
  std::vector<double> probabilities;  // 0 for noise
  std::vector<double> outlier_scores; // in [0,1], higher is more outlying
  std::vector<double> cluster_stability;  // per output label
  std::size_t cluster_count = 0;
};

// Labels are numbered by the smallest point index in each cluster.
ClusterAssignment extract_clusters(const CondensedTree& tree,
                                   ClusterSelection selection = ClusterSelection::ExcessOfMass,
                                   bool allow_single_cluster = true);

// Throws TooFewPoints when n < min_size or n <= min_samples.
ClusterAssignment hdbscan(const PointSet& points, const HdbscanConfig& cfg);

}  // namespace trackmine
