#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scim/config.hpp"
#include "scim/evaluation.hpp"
#include "scim/optimizer.hpp"
#include "scim/pseudolabel.hpp"
#include "scim/scene.hpp"
#include "scim/voxelmap.hpp"

namespace scim {

/// A loaded scene with L2-normalized descriptors and resolved modality list.
struct PreparedScene {
  SceneBundle bundle;
  std::vector<std::string> modalities;
  std::vector<std::string> known_classes;
  std::vector<std::int32_t> outlier_ids;
};

/// Outlier classes must follow the known classes in the manifest.
PreparedScene prepare_scene(SceneBundle raw, const PipelineConfig& config);
PreparedScene prepare_scene(const std::filesystem::path& scene_dir, const PipelineConfig& config);

/// Clustering parameters together with the graph context they were fitted on.
struct FittedParams {
  ClusteringParams params;
  HarmonizationFactors alphas;
  std::vector<std::size_t> sampled;
  double delta_conf = 0.0;
};

struct OptimizeStage {
  FittedParams fitted;
  OptimizeResult result;
  ParamSpace space;
  nlohmann::json params_json;
};

double resolve_delta_conf(const SceneBundle& bundle, const PipelineConfig& config);

/// Reference pairs from the confident subset, then one alpha per modality.
HarmonizationFactors compute_alphas(const SceneBundle& bundle, std::span<const std::string> modalities,
                                    double delta_conf, const PipelineConfig& config, std::uint64_t seed);

ClusteringParams base_params(const PipelineConfig& config, std::span<const std::string> modalities);

OptimizeStage run_optimize(const PreparedScene& scene, const PipelineConfig& config, std::uint64_t seed);

nlohmann::json fitted_to_json(const FittedParams& fitted);
FittedParams fitted_from_json(const nlohmann::json& j);

/// Clusters the sample with the fitted parameters and extends the result to
/// every vertex by nearest fused-edge neighbor.
ClusterSolution run_cluster(const PreparedScene& scene, const FittedParams& fitted);

void save_assignments(const ClusterSolution& solution, const std::filesystem::path& path);
ClusterSolution load_assignments(const std::filesystem::path& path, std::size_t expected_vertices);

struct MapStage {
  VoxelMap map;
  std::vector<RenderedVertex> render;
};

MapStage run_map(const SceneBundle& bundle, const PipelineConfig& config);

struct PseudoStage {
  PseudoLabelConfig config;
  MergeResult merged;
  std::vector<PseudoLabelFrame> frames;
};

PseudoStage run_pseudolabel(const PreparedScene& scene, const MapStage& map, const ClusterSolution& solution,
                            const PipelineConfig& config);

/// Flattened per-vertex pseudo-labels with the ignore id mapped to noise.
std::vector<std::int32_t> flatten_predictions(std::span<const PseudoLabelFrame> frames, std::uint16_t ignore_id);

/// Metrics against the scene's labels; nullopt when the scene has none.
std::optional<OpenWorldMetrics> run_eval(const PreparedScene& scene, std::span<const std::int32_t> predictions);

/// All stages; writes params.json, map/, assignments.tns, pseudo/ and
/// metrics.json (when labels exist) under `out`.
void run_pipeline(const std::filesystem::path& scene_dir, const std::filesystem::path& out,
                  const PipelineConfig& config, std::uint64_t seed);

enum class BaselineMethod { nakajima, uhlemeyer };

BaselineMethod baseline_from_name(std::string_view name);

/// Same outputs as run_pipeline with the baseline's edge function and backend.
void run_baseline(BaselineMethod method, const std::filesystem::path& scene_dir, const std::filesystem::path& out,
                  const PipelineConfig& config, std::uint64_t seed);

}  // namespace scim
