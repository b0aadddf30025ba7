#include "scim/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scim/errors.hpp"
#include "scim/rng.hpp"

namespace scim {

std::vector<std::size_t> subsample(const SceneBundle& bundle, const SubsampleSpec& spec) {
  if (spec.frame_stride == 0 || spec.points_per_frame == 0) {
    throw ValidationError("subsample: frame_stride and points_per_frame must be positive");
  }
  Rng rng(spec.seed);
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < bundle.frame_count(); f += spec.frame_stride) {
    const std::size_t begin = bundle.frame_offsets[f];
    const std::size_t n = bundle.frame_offsets[f + 1] - begin;
    for (auto local : rng.sample_without_replacement(n, std::min(n, spec.points_per_frame))) {
      out.push_back(begin + local);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

EdgeWeights EdgeWeights::uniform(std::span<const std::string> modalities) {
  EdgeWeights w;
  for (const auto& m : modalities) w.weights.emplace_back(m, 1.0 / static_cast<double>(modalities.size()));
  return w;
}

void EdgeWeights::validate() const {
  double sum = 0.0;
  for (const auto& [name, w] : weights) {
    if (!(w >= 0.0)) throw ValidationError("edge weight for '" + name + "' is negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("edge weights do not sum to 1");
}

FusedEdge::FusedEdge(const SceneBundle& bundle, const EdgeWeights& weights, const HarmonizationFactors& alphas) {
  weights.validate();
  for (const auto& [name, w] : weights.weights) {
    if (w == 0.0) continue;
    terms_.push_back({&bundle.modality(name), w, alphas.alpha(name)});
  }
}

double FusedEdge::operator()(std::size_t a, std::size_t b) const {
  double sum = 0.0;
  for (const auto& t : terms_) sum += t.weight * (t.alpha * euclidean(t.desc->row(a), t.desc->row(b)));
  return sum;
}

NakajimaEdge::NakajimaEdge(const SceneBundle& bundle, std::vector<double> entropy_proxy)
    : segm_(&bundle.modality("segm")), geom_(&bundle.modality("geom")), h_(std::move(entropy_proxy)) {
  if (h_.size() != bundle.vertices.size()) throw ValidationError("nakajima: entropy proxy length mismatch");
  for (double h : h_) {
    if (!(h >= 0.0 && h <= 1.0)) throw ValidationError("nakajima: entropy proxy outside [0,1]");
  }
}

double NakajimaEdge::operator()(std::size_t a, std::size_t b) const {
  auto gated = [](std::span<const float> x, double gx, std::span<const float> y, double gy) {
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = gx * x[k] - gy * y[k];
      sum += d * d;
    }
    return std::sqrt(sum);
  };
  return gated(segm_->row(a), 1.0 - h_[a], segm_->row(b), 1.0 - h_[b]) +
         gated(geom_->row(a), h_[a], geom_->row(b), h_[b]);
}

double ProjectedEdge::operator()(std::size_t a, std::size_t b) const {
  return euclidean(projected_.row(a), projected_.row(b));
}

DistanceMatrix edge_matrix(const EdgeFunction& edge, std::span<const std::size_t> indices) {
  DistanceMatrix out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = i + 1; j < indices.size(); ++j) out.set(i, j, edge(indices[i], indices[j]));
  }
  return out;
}

DistanceMatrix combine_fused(std::span<const DistanceMatrix> per_modality, const EdgeWeights& weights,
                             const HarmonizationFactors& alphas) {
  weights.validate();
  if (per_modality.size() != weights.weights.size()) {
    throw ValidationError("combine_fused: one distance matrix per weight required");
  }
  const std::size_t n = per_modality.empty() ? 0 : per_modality.front().n;
  DistanceMatrix out(n);
  for (std::size_t k = 0; k < per_modality.size(); ++k) {
    const double w = weights.weights[k].second;
    if (w == 0.0) continue;
    const double alpha = alphas.alpha(weights.weights[k].first);
    const auto& src = per_modality[k].values;
    for (std::size_t e = 0; e < out.values.size(); ++e) out.values[e] += w * (alpha * src[e]);
  }
  return out;
}

ClusteringGraph build_fused(const SceneBundle& bundle, std::span<const std::size_t> indices,
                            const EdgeWeights& weights, const HarmonizationFactors& alphas) {
  const FusedEdge edge(bundle, weights, alphas);
  return {std::vector<std::size_t>(indices.begin(), indices.end()), edge_matrix(edge, indices)};
}

std::vector<double> certainty_entropy_proxy(const SceneBundle& bundle) {
  std::vector<double> h(bundle.vertices.size(), 0.0);
  if (h.empty()) return h;
  auto [lo, hi] = std::minmax_element(bundle.vertices.begin(), bundle.vertices.end(),
                                      [](const auto& a, const auto& b) { return a.cert < b.cert; });
  const double min = lo->cert;
  const double range = static_cast<double>(hi->cert) - min;
  if (!(range > 0.0)) return h;
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = std::clamp(1.0 - (bundle.vertices[i].cert - min) / range, 0.0, 1.0);
  }
  return h;
}

ClusteringGraph build_nakajima(const SceneBundle& bundle, std::span<const std::size_t> indices,
                               std::span<const double> entropy_proxy) {
  const NakajimaEdge edge(bundle, std::vector<double>(entropy_proxy.begin(), entropy_proxy.end()));
  return {std::vector<std::size_t>(indices.begin(), indices.end()), edge_matrix(edge, indices)};
}

ProjectedEdge make_uhlemeyer_edge(const SceneBundle& bundle, std::span<const std::size_t> fit_rows,
                                  std::size_t pca_dim) {
  const auto& imgn = bundle.modality("imgn");
  if (fit_rows.empty()) throw ValidationError("uhlemeyer: empty outlier set");
  const std::size_t dim = std::min({pca_dim, imgn.cols, fit_rows.size()});
  return ProjectedEdge(fit_pca(imgn, fit_rows, dim).project(imgn));
}

ClusteringGraph build_uhlemeyer(const SceneBundle& bundle, std::span<const std::size_t> outlier_indices,
                                std::size_t pca_dim) {
  if (outlier_indices.empty()) {
    throw ValidationError("uhlemeyer: empty outlier set (every vertex is above the certainty threshold)");
  }
  const auto edge = make_uhlemeyer_edge(bundle, outlier_indices, pca_dim);
  return {std::vector<std::size_t>(outlier_indices.begin(), outlier_indices.end()),
          edge_matrix(edge, outlier_indices)};
}

double clustering_energy(const ClusteringGraph& graph, const ClusterSolution& assignment) {
  const std::size_t n = graph.fused.n;
  if (assignment.size() != n) throw ValidationError("clustering_energy: assignment does not cover the graph");
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ci = assignment.assignment[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto cj = assignment.assignment[j];
      if (ci == kNoise || cj == kNoise || ci != cj) energy += graph.fused(i, j);
    }
  }
  return energy;
}

}  // namespace scim
