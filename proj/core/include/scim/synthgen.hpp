#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scim/scene.hpp"

namespace scim {

struct SynthModality {
  std::string name;
  std::size_t dim = 0;
  std::optional<double> separation;  // overrides class_center_separation
  std::optional<double> noise_sigma;  // overrides descriptor_noise_sigma
};

struct CertModel {
  double confident_mean = 0.85;
  double uncertain_mean = 0.35;
  double sigma = 0.08;
};

struct Box {
  std::array<double, 3> min{};
  std::array<double, 3> max{};
};

enum class NovelPred { uniform, nearest };

struct SynthConfig {
  std::size_t n_known_classes = 5;
  std::size_t n_novel_classes = 2;
  std::size_t frames = 20;
  std::size_t points_per_frame = 500;
  std::vector<SynthModality> modalities{{"segm", 16, {}, {}}, {"geom", 8, {}, {}}, {"imgn", 32, {}, {}}};
  double class_center_separation = 1.0;
  double descriptor_noise_sigma = 0.1;
  double prediction_error_rate = 0.1;
  CertModel cert_model;
  double voxel_size = 0.05;
  /// One per class (known first); laid out on a grid when empty.
  std::vector<Box> boxes;
  NovelPred novel_pred = NovelPred::uniform;
  std::uint64_t seed = 0;

  std::size_t class_count() const { return n_known_classes + n_novel_classes; }
  void validate() const;
};

nlohmann::json synth_config_to_json(const SynthConfig& config);
/// Missing keys keep their defaults; unknown keys raise ValidationError.
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Boxes on a regular grid inside the unit cube with a margin around each.
std::vector<Box> grid_boxes(std::size_t count);

/// `count` points on the sphere of radius `separation` in `dim` dimensions,
/// pairwise at least `separation` apart. Throws ValidationError when
/// rejection sampling fails.
std::vector<std::vector<double>> place_centers(std::size_t count, std::size_t dim, double separation,
                                               std::uint64_t seed);

SceneBundle generate(const SynthConfig& config);
SceneBundle generate(const SynthConfig& config, const std::filesystem::path& out);

}  // namespace scim
