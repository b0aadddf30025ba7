#include "support/fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <unistd.h>

namespace fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

bool same_tree(const fs::path& a, const fs::path& b) {
  auto listing = [](const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  const auto fa = listing(a), fb = listing(b);
  if (fa != fb) return false;
  for (const auto& f : fa) {
    if (read_bytes(a / f) != read_bytes(b / f)) return false;
  }
  return true;
}

std::vector<std::vector<double>> random_points(scim::Rng& rng, std::size_t n, std::size_t dim, double scale) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = rng.uniform() * scale;
  }
  return pts;
}

std::vector<std::vector<double>> blobs(scim::Rng& rng, std::size_t count, std::size_t per_blob, double spread,
                                       double gap, std::size_t dim) {
  std::vector<std::vector<double>> pts;
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      std::vector<double> p(dim);
      for (auto& x : p) x = spread * rng.normal();
      p[0] += gap * static_cast<double>(b);
      pts.push_back(p);
    }
  }
  return pts;
}

scim::DistanceMatrix distances(const std::vector<std::vector<double>>& points) {
  const std::size_t n = points.size();
  scim::DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        s += (points[i][k] - points[j][k]) * (points[i][k] - points[j][k]);
      }
      d.set(i, j, std::sqrt(s));
    }
  }
  return d;
}

oracle::Matrix to_matrix(const scim::DistanceMatrix& d) {
  oracle::Matrix m(d.n, std::vector<double>(d.n));
  for (std::size_t i = 0; i < d.n; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) m[i][j] = d(i, j);
  }
  return m;
}

scim::SceneBundle small_bundle(const std::vector<std::size_t>& frame_sizes, std::size_t dim, std::size_t classes) {
  scim::SceneBundle b;
  b.manifest.scene_id = "fixture";
  for (std::size_t c = 0; c < classes; ++c) b.manifest.classes.push_back("class" + std::to_string(c));
  b.manifest.modalities = {{"a", dim}};
  std::size_t total = 0;
  for (auto s : frame_sizes) total += s;
  b.descriptors.emplace_back(total, dim);
  for (std::size_t f = 0; f < frame_sizes.size(); ++f) {
    b.manifest.frames.push_back("f" + std::to_string(f));
    for (std::size_t i = 0; i < frame_sizes[f]; ++i) {
      scim::ObservationVertex v;
      const auto idx = b.vertices.size();
      v.frame_index = static_cast<std::uint32_t>(f);
      v.time = v.frame_index;
      v.u = static_cast<std::uint16_t>(i);
      v.position = {static_cast<float>(idx), 0.0f, 0.0f};
      v.cert = 1.0f;
      b.vertices.push_back(v);
      for (std::size_t k = 0; k < dim; ++k) b.descriptors[0].at(idx, k) = static_cast<float>(idx + k);
    }
    b.frame_offsets.push_back(b.vertices.size());
    b.frame_has_labels.push_back(false);
  }
  return b;
}

}  // namespace fixture
