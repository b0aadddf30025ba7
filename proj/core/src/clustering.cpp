#include "scim/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "scim/errors.hpp"

namespace scim {

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::hdbscan: return "hdbscan";
    case Backend::dbscan: return "dbscan";
    case Backend::mcl: return "mcl";
    case Backend::extended: return "extended";
  }
  return "?";
}

std::size_t ClusterSolution::noise_count() const {
  return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), kNoise));
}

std::vector<std::size_t> ClusterSolution::cluster_sizes() const {
  std::vector<std::size_t> sizes(n_clusters, 0);
  for (auto c : assignment) {
    if (c >= 0) ++sizes[static_cast<std::size_t>(c)];
  }
  return sizes;
}

ClusterSolution canonicalize(const std::vector<std::int64_t>& raw, Backend backend, nlohmann::json params_used) {
  ClusterSolution out;
  out.backend = backend;
  out.params_used = std::move(params_used);
  out.assignment.assign(raw.size(), kNoise);
  std::vector<std::pair<std::int64_t, std::int32_t>> seen;  // raw id -> canonical id
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) continue;
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == raw[i]; });
    if (it == seen.end()) {
      seen.emplace_back(raw[i], static_cast<std::int32_t>(seen.size()));
      it = seen.end() - 1;
    }
    out.assignment[i] = it->second;
  }
  out.n_clusters = seen.size();
  return out;
}

ClusterSolution dbscan(const DistanceMatrix& dist, const DBSCANParams& params) {
  if (!(params.epsilon > 0.0) || !std::isfinite(params.epsilon)) {
    throw ValidationError("dbscan: epsilon must be positive and finite");
  }
  if (params.min_samples < 1) throw ValidationError("dbscan: min_samples must be >= 1");
  const std::size_t n = dist.n;
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (dist(i, j) <= params.epsilon) ++count;
    }
    core[i] = count >= params.min_samples;
  }

  // Clusters are connected components of core points; expansion in index order.
  std::vector<std::int64_t> label(n, -1);
  std::int64_t next = 0;
  std::vector<std::size_t> queue;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || label[seed] >= 0) continue;
    label[seed] = next;
    queue.assign(1, seed);
    while (!queue.empty()) {
      const std::size_t x = queue.back();
      queue.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        if (core[j] && label[j] < 0 && dist(x, j) <= params.epsilon) {
          label[j] = next;
          queue.push_back(j);
        }
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && dist(i, j) <= params.epsilon) {
        label[i] = label[j];
        break;
      }
    }
  }
  return canonicalize(label, Backend::dbscan,
                      {{"epsilon", params.epsilon}, {"min_samples", params.min_samples}});
}

double median_pairwise_distance(const DistanceMatrix& dist) {
  std::vector<double> upper;
  upper.reserve(dist.n * (dist.n - (dist.n > 0 ? 1 : 0)) / 2);
  for (std::size_t i = 0; i < dist.n; ++i) {
    for (std::size_t j = i + 1; j < dist.n; ++j) upper.push_back(dist(i, j));
  }
  if (upper.empty()) return 1.0;
  const auto mid = upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2);
  std::nth_element(upper.begin(), mid, upper.end());
  double median = *mid;
  if (upper.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(upper.begin(), mid));
  }
  return median > 0.0 ? median : 1.0;
}

namespace {

void normalize_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double s = m.col(c).sum();
    if (s > 0.0) m.col(c) /= s;
  }
}

}  // namespace

ClusterSolution mcl(const DistanceMatrix& dist, const MCLParams& params, MCLTrace* trace) {
  if (!(params.inflation > 1.0)) throw ValidationError("mcl: inflation must be > 1");
  if (!(params.prune_threshold_eta > 0.0 && params.prune_threshold_eta < 1.0)) {
    throw ValidationError("mcl: eta must lie in (0,1)");
  }
  const std::size_t n = dist.n;
  const auto en = static_cast<Eigen::Index>(n);
  const double bandwidth = params.kernel_bandwidth > 0.0 ? params.kernel_bandwidth : median_pairwise_distance(dist);
  const nlohmann::json used = {{"inflation", params.inflation},
                               {"eta", params.prune_threshold_eta},
                               {"max_iters", params.max_iters},
                               {"kernel_bandwidth", bandwidth}};

  Eigen::MatrixXd m(en, en);
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  for (Eigen::Index i = 0; i < en; ++i) {
    for (Eigen::Index j = 0; j < en; ++j) {
      const double d = dist(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      m(i, j) = i == j ? 1.0 : std::exp(-d * d * scale);
    }
  }
  normalize_columns(m);

  bool converged = false;
  std::size_t iter = 0;
  for (; iter < params.max_iters; ++iter) {
    Eigen::MatrixXd next = m * m;
    next = next.array().pow(params.inflation).matrix();
    for (Eigen::Index c = 0; c < en; ++c) {
      Eigen::Index keep = 0;
      next.col(c).maxCoeff(&keep);
      const double s = next.col(c).sum();
      for (Eigen::Index r = 0; r < en; ++r) {
        // Column maximum always survives so no column empties out.
        if (r != keep && next(r, c) < params.prune_threshold_eta * s) next(r, c) = 0.0;
      }
    }
    normalize_columns(next);
    if (trace) {
      double err = 0.0;
      for (Eigen::Index c = 0; c < en; ++c) err = std::max(err, std::abs(next.col(c).sum() - 1.0));
      trace->column_sum_error.push_back(err);
    }
    const double change = n == 0 ? 0.0 : (next - m).cwiseAbs().maxCoeff();
    m = std::move(next);
    if (change < 1e-6) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (trace) trace->iterations = iter;

  // Components of the graph linking each vertex to its attractors.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index i = 0; i < en; ++i) {
    for (Eigen::Index j = 0; j < en; ++j) {
      if (m(i, j) > 0.0) {
        const auto a = find(static_cast<std::size_t>(i));
        const auto b = find(static_cast<std::size_t>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::int64_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<std::int64_t>(find(i));
  auto sol = canonicalize(raw, Backend::mcl, used);
  sol.converged = converged || n == 0;
  return sol;
}

ClusterSolution nn_extend_subset(const ClusterSolution& solution, std::span<const std::size_t> sampled,
                                 const EdgeFunction& edge, std::size_t n_vertices,
                                 std::span<const std::size_t> targets) {
  if (solution.size() != sampled.size()) throw ValidationError("nn_extend: solution does not match sample");
  if (sampled.empty()) throw ValidationError("nn_extend: empty solution");
  ClusterSolution out;
  out.backend = Backend::extended;
  out.n_clusters = solution.n_clusters;
  out.params_used = solution.params_used;
  out.converged = solution.converged;
  out.assignment.assign(n_vertices, kNoise);

  std::vector<std::int64_t> position(n_vertices, -1);
  for (std::size_t s = 0; s < sampled.size(); ++s) {
    if (sampled[s] >= n_vertices) throw ValidationError("nn_extend: sampled index out of range");
    position[sampled[s]] = static_cast<std::int64_t>(s);
  }
  for (auto v : targets) {
    if (position[v] >= 0) {
      out.assignment[v] = solution.assignment[static_cast<std::size_t>(position[v])];
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_s = 0;
    for (std::size_t s = 0; s < sampled.size(); ++s) {
      const double d = edge(v, sampled[s]);
      if (d < best) {
        best = d;
        best_s = s;
      }
    }
    out.assignment[v] = solution.assignment[best_s];
  }
  return out;
}

ClusterSolution nn_extend(const ClusterSolution& solution, std::span<const std::size_t> sampled,
                          const EdgeFunction& edge, std::size_t n_vertices) {
  std::vector<std::size_t> all(n_vertices);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return nn_extend_subset(solution, sampled, edge, n_vertices, all);
}

}  // namespace scim
