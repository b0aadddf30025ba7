#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library's algorithms; they work from the definitions.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Minimum spanning-tree weight by enumerating every labeled tree through
/// its Pruefer sequence (n^(n-2) trees).
double brute_force_mst_weight(const Matrix& w);

/// Merge heights of naive O(n^3) single-linkage agglomeration, ascending.
std::vector<double> naive_single_linkage_heights(const Matrix& d);

/// DBSCAN from the definitions: core points, transitive closure of the
/// core-core reachability relation, border points to their lowest-index core
/// neighbor. Cluster ids numbered by first member; -1 is noise.
std::vector<int> dbscan_closure(const Matrix& d, double eps, std::size_t min_samples);

/// Relabels a partition so ids appear in order of first member (noise stays -1).
std::vector<int> canonical(const std::vector<int>& labels);

struct Injection {
  std::int64_t value = 0;
  std::vector<int> cluster_of_label;  // -1 unmatched
  bool unique = true;                 // only one injection reaches `value`
};

/// Best partial injection label -> cluster by enumeration. A cluster with a
/// bound label may only take that label. Counts of zero contribute nothing,
/// so the optimum is reported with zero-count pairs removed.
Injection brute_force_matching(const std::vector<std::vector<std::int64_t>>& counts,
                               const std::vector<std::optional<int>>& bound_label);

/// Minimum-cost perfect assignment by enumerating permutations.
std::int64_t brute_force_assignment_cost(const std::vector<std::vector<std::int64_t>>& cost);

struct VMeasure {
  double h = 0.0;
  double c = 0.0;
  double v = 0.0;
};

/// Homogeneity, completeness and V-measure from entropy sums over joint counts.
VMeasure v_measure(const std::vector<int>& labels, const std::vector<int>& clusters);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues
/// descending; eigenvectors as rows.
void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors);

double normal_pdf(double x);

/// NaN when either series is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace oracle
