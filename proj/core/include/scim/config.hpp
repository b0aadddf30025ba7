#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scim/clustering.hpp"
#include "scim/optimizer.hpp"

namespace scim {

/// Every tunable of the pipeline. All JSON keys are optional; unknown keys
/// are rejected.
struct PipelineConfig {
  /// Modalities to fuse; empty selects every modality of the scene.
  std::vector<std::string> modalities;
  Backend backend = Backend::hdbscan;

  std::size_t subsample_frame_stride = 5;
  std::size_t subsample_points_per_frame = 100;

  std::size_t reference_pairs = 10000;

  std::size_t budget = 200;
  std::size_t init_random = 20;
  std::size_t candidates = 1024;
  double length_scale = 0.2;
  double noise_variance = 1e-4;
  double jitter = 1e-8;
  double confidence_percentile = 70.0;
  std::optional<double> delta_conf;
  NoiseMode noise_mode = NoiseMode::penalize;
  bool optimize_weights = true;
  SearchBox box;

  HDBSCANParams hdbscan;
  MCLParams mcl;
  DBSCANParams dbscan;

  std::optional<double> voxel_size;  // defaults to the manifest's

  double delta_percentile = 60.0;
  std::optional<double> delta;
  double merge_iou = 0.5;
  std::uint16_t ignore_id = 255;

  double outlier_cert_threshold = 0.5;
  std::size_t pca_dim = 10;
  std::size_t nakajima_frame_stride = 10;

  void validate() const;
  GPConfig gp_config(std::uint64_t seed) const;
};

nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

/// "dotted.key = default" lines for every key, sorted.
std::string config_help();

Backend backend_from_name(std::string_view name);

}  // namespace scim
