#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scim/descriptors.hpp"
#include "scim/rng.hpp"
#include "scim/scene.hpp"
#include "support/oracles.hpp"

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "scim");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& part) const { return path_ / part; }

 private:
  std::filesystem::path path_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
/// Byte equality of two directory trees (same relative paths, same contents).
bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b);

/// Random points in [0, scale)^dim.
std::vector<std::vector<double>> random_points(scim::Rng& rng, std::size_t n, std::size_t dim, double scale = 1.0);
/// Gaussian blobs of `per_blob` points around centers spaced `gap` apart on the first axis.
std::vector<std::vector<double>> blobs(scim::Rng& rng, std::size_t count, std::size_t per_blob, double spread,
                                       double gap, std::size_t dim = 2);

scim::DistanceMatrix distances(const std::vector<std::vector<double>>& points);
oracle::Matrix to_matrix(const scim::DistanceMatrix& d);

/// One-modality bundle ("a", dim cols) with the given per-frame sizes; every
/// vertex gets pred 0, cert 1, position from its index.
scim::SceneBundle small_bundle(const std::vector<std::size_t>& frame_sizes, std::size_t dim = 2,
                               std::size_t classes = 2);

}  // namespace fixture
