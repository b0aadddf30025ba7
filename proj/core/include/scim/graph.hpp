#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scim/descriptors.hpp"
#include "scim/scene.hpp"
#include "scim/solution.hpp"

namespace scim {

/// Random subsampling: points_per_frame vertices from every frame_stride-th frame.
struct SubsampleSpec {
  std::size_t frame_stride = 5;
  std::size_t points_per_frame = 100;
  std::uint64_t seed = 0;
};

/// Ascending vertex indices; deterministic in seed. Frames with fewer than
/// points_per_frame vertices contribute all of them.
std::vector<std::size_t> subsample(const SceneBundle& bundle, const SubsampleSpec& spec);

/// Descriptor weights on the simplex, in modality order.
struct EdgeWeights {
  std::vector<std::pair<std::string, double>> weights;

  static EdgeWeights uniform(std::span<const std::string> modalities);
  /// Throws ValidationError unless all weights are >= 0 and sum to 1 within 1e-9.
  void validate() const;
};

/// Edge weight between two vertices of a bundle, by global vertex index.
class EdgeFunction {
 public:
  virtual ~EdgeFunction() = default;
  virtual double operator()(std::size_t a, std::size_t b) const = 0;
};

/// sum_d w_d * (alpha_d * ||f_d(a) - f_d(b)||).
class FusedEdge final : public EdgeFunction {
 public:
  FusedEdge(const SceneBundle& bundle, const EdgeWeights& weights, const HarmonizationFactors& alphas);
  double operator()(std::size_t a, std::size_t b) const override;

 private:
  struct Term {
    const DescriptorMatrix* desc;
    double weight;
    double alpha;
  };
  std::vector<Term> terms_;
};

/// ||(1-h_a) segm_a - (1-h_b) segm_b|| + ||h_a geom_a - h_b geom_b||.
class NakajimaEdge final : public EdgeFunction {
 public:
  NakajimaEdge(const SceneBundle& bundle, std::vector<double> entropy_proxy);
  double operator()(std::size_t a, std::size_t b) const override;

 private:
  const DescriptorMatrix* segm_;
  const DescriptorMatrix* geom_;
  std::vector<double> h_;
};

/// Euclidean distance between PCA-projected rows of one modality.
class ProjectedEdge final : public EdgeFunction {
 public:
  ProjectedEdge(DescriptorMatrix projected) : projected_(std::move(projected)) {}
  double operator()(std::size_t a, std::size_t b) const override;
  const DescriptorMatrix& projected() const { return projected_; }

 private:
  DescriptorMatrix projected_;
};

struct ClusteringGraph {
  std::vector<std::size_t> sampled_indices;
  DistanceMatrix fused;
};

DistanceMatrix edge_matrix(const EdgeFunction& edge, std::span<const std::size_t> indices);

/// Same arithmetic as FusedEdge applied to per-modality raw distance
/// matrices (parallel to weights), so both routes agree bitwise.
DistanceMatrix combine_fused(std::span<const DistanceMatrix> per_modality, const EdgeWeights& weights,
                             const HarmonizationFactors& alphas);

ClusteringGraph build_fused(const SceneBundle& bundle, std::span<const std::size_t> indices,
                            const EdgeWeights& weights, const HarmonizationFactors& alphas);

/// h = 1 - (cert - min) / (max - min) over the scene; constant cert gives h = 0.
std::vector<double> certainty_entropy_proxy(const SceneBundle& bundle);

/// Requires modalities "segm" and "geom" and h in [0,1] per vertex.
ClusteringGraph build_nakajima(const SceneBundle& bundle, std::span<const std::size_t> indices,
                               std::span<const double> entropy_proxy);

/// PCA of modality "imgn" fitted on `fit_rows`, applied to every vertex.
ProjectedEdge make_uhlemeyer_edge(const SceneBundle& bundle, std::span<const std::size_t> fit_rows,
                                  std::size_t pca_dim);

/// Graph over the outlier vertices only. Throws ValidationError on an empty
/// outlier set or a missing "imgn" modality.
ClusteringGraph build_uhlemeyer(const SceneBundle& bundle, std::span<const std::size_t> outlier_indices,
                                std::size_t pca_dim);

/// Potts energy with the disagreement indicator: sum over unordered pairs of
/// e(i,j) where the two vertices are in different clusters (noise counts as
/// a singleton).
double clustering_energy(const ClusteringGraph& graph, const ClusterSolution& assignment);

}  // namespace scim
