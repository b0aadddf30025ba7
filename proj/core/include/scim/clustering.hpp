#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scim/descriptors.hpp"
#include "scim/graph.hpp"
#include "scim/solution.hpp"

namespace scim {

struct HDBSCANParams {
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 5;
};

struct DBSCANParams {
  double epsilon = 3.5;
  std::size_t min_samples = 10;
};

struct MCLParams {
  double inflation = 2.0;
  double prune_threshold_eta = 1e-3;
  std::size_t max_iters = 100;
  /// Gaussian kernel bandwidth; <= 0 selects the median pairwise distance.
  double kernel_bandwidth = 0.0;
};

// HDBSCAN building blocks, exposed for independent verification.
namespace hdbscan_detail {

struct WeightedEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

/// One agglomeration step. Nodes < n are points; node n + k is merge k.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Distance from each point to its k-th nearest other point (k >= 1).
std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k);

/// max(core_a, core_b, d(a,b)) off the diagonal, zero on it.
DistanceMatrix mutual_reachability(const DistanceMatrix& dist, std::span<const double> core);

/// Prim's algorithm over the dense matrix, starting at vertex 0; ties pick the lowest index.
std::vector<WeightedEdge> minimum_spanning_tree(const DistanceMatrix& dist);

/// Single-linkage dendrogram from spanning-tree edges processed in ascending weight.
std::vector<Merge> single_linkage(std::size_t n, std::vector<WeightedEdge> mst);

struct CondensedEntry {
  std::size_t parent = 0;  // condensed cluster id, root = 0
  std::size_t child = 0;   // point index, or cluster id when child_is_cluster
  bool child_is_cluster = false;
  double lambda = 0.0;
  std::size_t child_size = 1;
};

struct CondensedTree {
  std::size_t n_points = 0;
  std::size_t n_clusters = 0;
  std::vector<CondensedEntry> entries;
  std::vector<double> birth_lambda;  // per cluster
};

CondensedTree condense(std::size_t n, std::span<const Merge> dendrogram, std::size_t min_cluster_size);

/// Excess-of-mass stability per condensed cluster.
std::vector<double> stabilities(const CondensedTree& tree);

/// EOM selection over the condensed tree (root eligible); returns per-point
/// selected cluster id or -1.
std::vector<std::int64_t> extract_eom(const CondensedTree& tree);

}  // namespace hdbscan_detail

/// HDBSCAN over a precomputed distance matrix. Fewer than min_samples + 1 or
/// min_cluster_size points give an all-noise solution.
ClusterSolution hdbscan(const DistanceMatrix& dist, const HDBSCANParams& params);

/// DBSCAN with neighborhoods d <= epsilon including the point itself. Border
/// points join the cluster of their lowest-index core neighbor.
ClusterSolution dbscan(const DistanceMatrix& dist, const DBSCANParams& params);

/// Median of the strictly upper-triangular entries; 1 if there are none or it is 0.
double median_pairwise_distance(const DistanceMatrix& dist);

struct MCLTrace {
  std::vector<double> column_sum_error;  // max |colsum - 1| after each inflation step
  std::size_t iterations = 0;
};

/// Markov clustering over a Gaussian kernel of the distances. Solutions from
/// a run that hit max_iters have converged == false.
ClusterSolution mcl(const DistanceMatrix& dist, const MCLParams& params, MCLTrace* trace = nullptr);

/// Extends a clustering of `sampled` (global vertex indices) to all
/// `n_vertices`: sampled vertices keep their label (noise included), others
/// copy the label of the nearest sampled vertex under `edge`, ties to the
/// lower sampled position.
ClusterSolution nn_extend(const ClusterSolution& solution, std::span<const std::size_t> sampled,
                          const EdgeFunction& edge, std::size_t n_vertices);

/// Like nn_extend, restricted to `targets`; vertices outside it stay noise.
ClusterSolution nn_extend_subset(const ClusterSolution& solution, std::span<const std::size_t> sampled,
                                 const EdgeFunction& edge, std::size_t n_vertices,
                                 std::span<const std::size_t> targets);

}  // namespace scim
