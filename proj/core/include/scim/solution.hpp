#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace scim {

inline constexpr std::int32_t kNoise = -1;

enum class Backend { hdbscan, dbscan, mcl, extended };

std::string_view backend_name(Backend backend);

/// Hard assignment of vertices to clusters 0..n_clusters-1 or kNoise.
struct ClusterSolution {
  std::vector<std::int32_t> assignment;
  std::size_t n_clusters = 0;
  Backend backend = Backend::hdbscan;
  nlohmann::json params_used = nlohmann::json::object();
  /// False when an iterative backend stopped at its iteration cap.
  bool converged = true;

  std::size_t size() const { return assignment.size(); }
  std::size_t noise_count() const;
  std::vector<std::size_t> cluster_sizes() const;
};

/// Relabels arbitrary non-negative ids to 0..k-1 in order of each cluster's
/// lowest member index; negative ids become kNoise.
ClusterSolution canonicalize(const std::vector<std::int64_t>& raw, Backend backend,
                             nlohmann::json params_used = nlohmann::json::object());

}  // namespace scim
