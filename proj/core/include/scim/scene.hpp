#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace scim {

inline constexpr std::int32_t kUnlabeled = -1;

struct ModalitySpec {
  std::string name;
  std::size_t dim = 0;

  friend bool operator==(const ModalitySpec&, const ModalitySpec&) = default;
};

/// Contents of a scene's manifest.json.
struct SceneManifest {
  std::string scene_id;
  double voxel_size = 0.05;
  std::vector<std::string> classes;
  std::vector<std::string> outlier_classes;
  std::vector<ModalitySpec> modalities;
  std::vector<std::string> frames;

  /// Throws ValidationError on a broken invariant.
  void validate() const;
  std::optional<std::size_t> class_id(std::string_view name) const;
  std::vector<std::int32_t> outlier_class_ids() const;

  friend bool operator==(const SceneManifest&, const SceneManifest&) = default;
};

nlohmann::json manifest_to_json(const SceneManifest& manifest);
SceneManifest manifest_from_json(const nlohmann::json& j);

/// One observed pixel.
struct ObservationVertex {
  std::uint32_t frame_index = 0;
  std::uint16_t u = 0;
  std::uint16_t v = 0;
  std::array<float, 3> position{};
  std::uint32_t time = 0;
  std::uint16_t pred = 0;
  float cert = 0.0f;
  std::int32_t label = kUnlabeled;

  friend bool operator==(const ObservationVertex&, const ObservationVertex&) = default;
};

/// Row-major float matrix, one row per vertex.
struct DescriptorMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  DescriptorMatrix() = default;
  DescriptorMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}
  DescriptorMatrix(std::size_t r, std::size_t c, std::vector<float> v);

  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  float& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  friend bool operator==(const DescriptorMatrix&, const DescriptorMatrix&) = default;
};

/// A whole trajectory, flattened scene-wide. Vertices of frame f occupy
/// [frame_offsets[f], frame_offsets[f+1]).
struct SceneBundle {
  SceneManifest manifest;
  std::vector<ObservationVertex> vertices;
  std::vector<DescriptorMatrix> descriptors;  // parallel to manifest.modalities
  std::vector<std::size_t> frame_offsets{0};
  std::vector<bool> frame_has_labels;

  std::size_t frame_count() const { return frame_offsets.size() - 1; }
  std::size_t class_count() const { return manifest.classes.size(); }
  std::optional<std::size_t> modality_index(std::string_view name) const;
  /// Throws ValidationError if the modality is absent.
  const DescriptorMatrix& modality(std::string_view name) const;
  bool has_labels() const;

  friend bool operator==(const SceneBundle&, const SceneBundle&) = default;
};

/// Known classes plus dynamically allocated novel ids K, K+1, ...
class ClassCatalog {
 public:
  explicit ClassCatalog(std::vector<std::string> known) : known_(std::move(known)) {}

  std::size_t known_count() const { return known_.size(); }
  std::size_t novel_count() const { return novel_.size(); }
  bool is_known(std::int64_t id) const { return id >= 0 && id < static_cast<std::int64_t>(known_.size()); }
  bool is_novel(std::int64_t id) const;
  /// Allocates the next novel id, skipping `reserved` (e.g. an ignore index). Names are c1, c2, ...
  std::int32_t add_novel(std::optional<std::int32_t> reserved = std::nullopt);
  std::string name(std::int32_t id) const;
  const std::vector<std::int32_t>& novel_ids() const { return novel_; }
  const std::vector<std::string>& known_names() const { return known_; }

 private:
  std::vector<std::string> known_;
  std::vector<std::int32_t> novel_;
};

std::size_t vertex_count(const SceneBundle& bundle);

/// Indices i with cert(v_i) > delta_conf, ascending.
std::vector<std::size_t> confident_subset(const SceneBundle& bundle, double delta_conf);

/// Nearest-rank percentile (p in [0,100]) of the values; empty input -> 0.
double nearest_rank_percentile(std::vector<double> values, double p);

SceneBundle load_scene(const std::filesystem::path& dir);
void save_scene(const SceneBundle& bundle, const std::filesystem::path& dir);

/// Writes JSON with sorted keys, two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Throws ValidationError if `j` is not an object or has a key outside `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::span<const std::string_view> allowed, std::string_view context);

}  // namespace scim
