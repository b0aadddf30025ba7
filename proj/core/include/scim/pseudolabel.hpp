#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scim/scene.hpp"
#include "scim/solution.hpp"
#include "scim/voxelmap.hpp"

namespace scim {

struct PseudoLabelConfig {
  /// The map class is used where the voxel's mean certainty is >= delta.
  double delta = 0.5;
  double merge_iou = 0.5;
  std::uint16_t ignore_id = 255;

  void validate() const;
};

/// Nearest-rank percentile of per-voxel mean certainty.
double default_delta(const VoxelMap& map, double percentile = 60.0);

struct ClusterBinding {
  std::int32_t cluster = 0;
  std::int32_t class_id = 0;
  double iou = 0.0;  // best IoU against any map class
  std::size_t size = 0;
  bool novel = false;
};

struct MergeResult {
  std::vector<std::int32_t> class_of_cluster;  // indexed by cluster id
  ClassCatalog catalog;
  std::vector<ClusterBinding> bindings;  // one per cluster, by cluster id

  std::int32_t class_for(std::int32_t cluster) const {
    return cluster < 0 ? kNoise : class_of_cluster[static_cast<std::size_t>(cluster)];
  }
};

/// Binds each cluster whose IoU with a rendered map class exceeds merge_iou
/// (strictly) to that class, one cluster per class (highest IoU, then lowest
/// cluster id). Remaining clusters become novel classes c1, c2, ... in order
/// of descending size.
MergeResult merge_clusters(const ClusterSolution& solution, std::span<const RenderedVertex> render,
                           std::vector<std::string> known_classes, const PseudoLabelConfig& config);

enum class Provenance : std::uint8_t { ignored = 0, map = 1, cluster = 2 };

struct PseudoLabelFrame {
  std::vector<std::uint16_t> labels;
  std::vector<Provenance> provenance;
};

/// One frame per bundle frame: map class where the map is certain, else the
/// merged cluster class, else ignore_id.
std::vector<PseudoLabelFrame> make_pseudolabels(const SceneBundle& bundle, std::span<const RenderedVertex> render,
                                                const ClusterSolution& solution, const MergeResult& merged,
                                                const PseudoLabelConfig& config);

nlohmann::json labels_to_json(const MergeResult& merged, const PseudoLabelConfig& config);

/// frames/<id>/pseudo.tns (u16), frames/<id>/provenance.tns (u8), labels.json.
void save_pseudolabels(const SceneBundle& bundle, std::span<const PseudoLabelFrame> frames,
                       const MergeResult& merged, const PseudoLabelConfig& config,
                       const std::filesystem::path& dir);

/// Flattened per-vertex predictions from a pseudo-label directory; the
/// ignore id becomes kNoise.
std::vector<std::int32_t> load_pseudolabel_predictions(const SceneBundle& bundle, const std::filesystem::path& dir,
                                                       std::uint16_t* ignore_id_out = nullptr);

}  // namespace scim
