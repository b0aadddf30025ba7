#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scim/scene.hpp"

namespace scim {

inline constexpr std::int32_t kUnknownClass = -1;

struct VoxelKey {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  std::int32_t iz = 0;

  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

/// floor(position / voxel_size) per axis.
VoxelKey voxel_key(const std::array<float, 3>& position, double voxel_size);

struct VoxelCell {
  std::vector<std::uint32_t> class_votes;  // one slot per class id
  double cert_sum = 0.0;
  std::uint32_t obs_count = 0;

  double mean_cert() const { return obs_count == 0 ? 0.0 : cert_sum / obs_count; }
  /// Majority class; ties go to the lowest class id.
  std::int32_t fused_class() const;

  friend bool operator==(const VoxelCell&, const VoxelCell&) = default;
};

struct RenderedVertex {
  std::int32_t fused_class = kUnknownClass;
  double mean_cert = 0.0;
};

/// Sparse voxel grid of fused class votes and certainty, sorted by key.
class VoxelMap {
 public:
  VoxelMap() = default;
  VoxelMap(double voxel_size, std::size_t class_count) : voxel_size_(voxel_size), class_count_(class_count) {}

  double voxel_size() const { return voxel_size_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t size() const { return keys_.size(); }
  std::size_t skipped() const { return skipped_; }
  std::span<const VoxelKey> keys() const { return keys_; }
  std::span<const VoxelCell> cells() const { return cells_; }
  const VoxelCell* find(const VoxelKey& key) const;

  friend bool operator==(const VoxelMap&, const VoxelMap&) = default;

 private:
  friend VoxelMap build_map(const SceneBundle&, double);
  friend VoxelMap load_map(const std::filesystem::path&);

  double voxel_size_ = 0.05;
  std::size_t class_count_ = 0;
  std::vector<VoxelKey> keys_;
  std::vector<VoxelCell> cells_;
  std::size_t skipped_ = 0;
};

/// Fuses every observation into its voxel. Observations with a non-finite
/// position are skipped and counted in VoxelMap::skipped(). The result does
/// not depend on observation order.
VoxelMap build_map(const SceneBundle& bundle, double voxel_size);

/// Per-vertex lookup of the vertex's voxel; absent voxels give kUnknownClass with cert 0.
std::vector<RenderedVertex> render(const VoxelMap& map, const SceneBundle& bundle);

/// keys.tns (M x 3 i32), votes.tns (M x K i32), cert.tns (M f32 mean cert), map.json.
void save_map(const VoxelMap& map, const std::filesystem::path& dir);
VoxelMap load_map(const std::filesystem::path& dir);

}  // namespace scim
