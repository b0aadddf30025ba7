#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scim/scene.hpp"

namespace scim {

/// Dense symmetric n x n matrix of non-negative distances with zero diagonal.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t size) : n(size), values(size * size, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
  /// Sets (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double d) {
    values[i * n + j] = d;
    values[j * n + i] = d;
  }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;
};

/// Euclidean distance accumulated in double, in index order.
double euclidean(std::span<const float> a, std::span<const float> b);

/// Scales each nonzero row to unit Euclidean norm; zero rows stay zero.
DescriptorMatrix l2_normalize(const DescriptorMatrix& desc);

/// Distances between rows `indices[i]` and `indices[j]` of `desc`.
DistanceMatrix pairwise_distances(const DescriptorMatrix& desc, std::span<const std::size_t> indices);

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Draws `count` pairs (i != j) uniformly from `candidates` with equal pred.
/// Returns an empty list if no prediction class holds two candidates.
std::vector<IndexPair> sample_reference_pairs(const SceneBundle& bundle, std::span<const std::size_t> candidates,
                                              std::size_t count, std::uint64_t seed);

struct ModalityScale {
  std::string modality;
  double alpha = 1.0;
  double quantile = 0.0;
  bool degenerate = false;
};

/// Per-modality factors alpha making the 0.9 nearest-rank quantile of
/// reference-pair distances equal to one.
struct HarmonizationFactors {
  std::vector<ModalityScale> scales;

  /// Throws ValidationError if the modality has no factor.
  double alpha(std::string_view modality) const;
  bool contains(std::string_view modality) const;
};

/// Rank ceil(0.9 P) (1-based) of the ascending distances: the quantile used by harmonize.
std::size_t harmonization_rank(std::size_t pair_count);

/// alpha = 1/q for q the nearest-rank 0.9 quantile; q == 0 gives alpha 1 and the degenerate flag.
/// Throws ValidationError on an empty list.
ModalityScale harmonize_distances(std::span<const double> pair_distances);

ModalityScale harmonize(const DistanceMatrix& dist, std::span<const IndexPair> reference_pairs);

/// Factors for the named modalities, with reference-pair distances computed
/// directly from the descriptor rows.
HarmonizationFactors harmonize(const SceneBundle& bundle, std::span<const std::string> modalities,
                               std::span<const IndexPair> reference_pairs);

/// Principal axes of a mean-centered matrix, covariance normalized by row count.
struct PcaModel {
  std::vector<double> mean;                     // input dim
  std::vector<std::vector<double>> components;  // out_dim rows of input dim, unit norm
  std::vector<double> eigenvalues;              // descending, all input dims

  DescriptorMatrix project(const DescriptorMatrix& desc) const;
  std::vector<float> project_row(std::span<const float> row) const;
};

/// Throws ValidationError unless 1 <= out_dim <= min(rows, cols) of the selected rows.
PcaModel fit_pca(const DescriptorMatrix& desc, std::span<const std::size_t> rows, std::size_t out_dim);

/// Projects rows onto the top out_dim principal components (descending
/// eigenvalue, largest-magnitude loading positive).
DescriptorMatrix pca_reduce(const DescriptorMatrix& desc, std::size_t out_dim);

}  // namespace scim
