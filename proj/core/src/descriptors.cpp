#include "scim/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "scim/errors.hpp"
#include "scim/rng.hpp"

namespace scim {

double euclidean(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

DescriptorMatrix l2_normalize(const DescriptorMatrix& desc) {
  DescriptorMatrix out = desc;
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto row = out.row(i);
    double norm = 0.0;
    for (float x : row) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (float& x : row) x = static_cast<float>(x / norm);
  }
  return out;
}

DistanceMatrix pairwise_distances(const DescriptorMatrix& desc, std::span<const std::size_t> indices) {
  DistanceMatrix out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto a = desc.row(indices[i]);
    for (std::size_t j = i + 1; j < indices.size(); ++j) {
      out.set(i, j, euclidean(a, desc.row(indices[j])));
    }
  }
  return out;
}

std::vector<IndexPair> sample_reference_pairs(const SceneBundle& bundle, std::span<const std::size_t> candidates,
                                              std::size_t count, std::uint64_t seed) {
  std::map<std::uint16_t, std::vector<std::size_t>> by_pred;
  for (auto i : candidates) by_pred[bundle.vertices[i].pred].push_back(i);
  // Anchors are drawn from vertices whose class has a partner.
  std::vector<std::pair<std::size_t, const std::vector<std::size_t>*>> anchors;
  for (const auto& [pred, members] : by_pred) {
    if (members.size() < 2) continue;
    for (auto i : members) anchors.emplace_back(i, &members);
  }
  std::vector<IndexPair> pairs;
  if (anchors.empty()) return pairs;
  Rng rng(seed);
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& [i, group] = anchors[rng.below(anchors.size())];
    std::size_t j = i;
    while (j == i) j = (*group)[rng.below(group->size())];
    pairs.emplace_back(i, j);
  }
  return pairs;
}

double HarmonizationFactors::alpha(std::string_view modality) const {
  for (const auto& s : scales) {
    if (s.modality == modality) return s.alpha;
  }
  throw ValidationError("no harmonization factor for modality '" + std::string(modality) + "'");
}

bool HarmonizationFactors::contains(std::string_view modality) const {
  return std::any_of(scales.begin(), scales.end(), [&](const auto& s) { return s.modality == modality; });
}

std::size_t harmonization_rank(std::size_t pair_count) { return (9 * pair_count + 9) / 10; }

ModalityScale harmonize_distances(std::span<const double> pair_distances) {
  if (pair_distances.empty()) throw ValidationError("harmonize: no reference pairs");
  std::vector<double> sorted(pair_distances.begin(), pair_distances.end());
  const std::size_t rank = harmonization_rank(sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  ModalityScale scale;
  scale.quantile = sorted[rank - 1];
  if (scale.quantile > 0.0) {
    scale.alpha = 1.0 / scale.quantile;
  } else {
    scale.alpha = 1.0;
    scale.degenerate = true;
  }
  return scale;
}

ModalityScale harmonize(const DistanceMatrix& dist, std::span<const IndexPair> reference_pairs) {
  std::vector<double> d;
  d.reserve(reference_pairs.size());
  for (const auto& [i, j] : reference_pairs) d.push_back(dist(i, j));
  return harmonize_distances(d);
}

HarmonizationFactors harmonize(const SceneBundle& bundle, std::span<const std::string> modalities,
                               std::span<const IndexPair> reference_pairs) {
  HarmonizationFactors out;
  for (const auto& name : modalities) {
    const auto& desc = bundle.modality(name);
    std::vector<double> d;
    d.reserve(reference_pairs.size());
    for (const auto& [i, j] : reference_pairs) d.push_back(euclidean(desc.row(i), desc.row(j)));
    auto scale = harmonize_distances(d);
    scale.modality = name;
    out.scales.push_back(std::move(scale));
  }
  return out;
}

std::vector<float> PcaModel::project_row(std::span<const float> row) const {
  std::vector<float> out(components.size());
  for (std::size_t c = 0; c < components.size(); ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += (static_cast<double>(row[k]) - mean[k]) * components[c][k];
    out[c] = static_cast<float>(acc);
  }
  return out;
}

DescriptorMatrix PcaModel::project(const DescriptorMatrix& desc) const {
  DescriptorMatrix out(desc.rows, components.size());
  for (std::size_t i = 0; i < desc.rows; ++i) {
    auto projected = project_row(desc.row(i));
    std::copy(projected.begin(), projected.end(), out.row(i).begin());
  }
  return out;
}

PcaModel fit_pca(const DescriptorMatrix& desc, std::span<const std::size_t> rows, std::size_t out_dim) {
  const std::size_t n = rows.size();
  const std::size_t d = desc.cols;
  if (out_dim < 1 || out_dim > std::min(n, d)) {
    throw ValidationError("pca: out_dim " + std::to_string(out_dim) + " outside [1, " +
                          std::to_string(std::min(n, d)) + "]");
  }
  PcaModel model;
  model.mean.assign(d, 0.0);
  for (auto r : rows) {
    const auto row = desc.row(r);
    for (std::size_t k = 0; k < d; ++k) model.mean[k] += row[k];
  }
  for (auto& m : model.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd centered(static_cast<Eigen::Index>(d));
  for (auto r : rows) {
    const auto row = desc.row(r);
    for (std::size_t k = 0; k < d; ++k) centered[static_cast<Eigen::Index>(k)] = row[k] - model.mean[k];
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const auto& evals = solver.eigenvalues();  // ascending
  const auto& evecs = solver.eigenvectors();
  for (Eigen::Index k = static_cast<Eigen::Index>(d) - 1; k >= 0; --k) model.eigenvalues.push_back(evals[k]);
  for (std::size_t c = 0; c < out_dim; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - c);
    std::vector<double> axis(d);
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < d; ++k) {
      axis[k] = evecs(static_cast<Eigen::Index>(k), col);
      if (std::abs(axis[k]) > std::abs(axis[argmax])) argmax = k;
    }
    if (axis[argmax] < 0) {
      for (auto& a : axis) a = -a;
    }
    model.components.push_back(std::move(axis));
  }
  return model;
}

DescriptorMatrix pca_reduce(const DescriptorMatrix& desc, std::size_t out_dim) {
  std::vector<std::size_t> all(desc.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_pca(desc, all, out_dim).project(desc);
}

}  // namespace scim
