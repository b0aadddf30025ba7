#include "scim/voxelmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "scim/errors.hpp"
#include "scim/tensorio.hpp"

namespace scim {

namespace fs = std::filesystem;

VoxelKey voxel_key(const std::array<float, 3>& p, double voxel_size) {
  auto q = [&](float x) {
    const double r = std::floor(static_cast<double>(x) / voxel_size);
    return static_cast<std::int32_t>(std::clamp(r, -2147483648.0, 2147483647.0));
  };
  return {q(p[0]), q(p[1]), q(p[2])};
}

std::int32_t VoxelCell::fused_class() const {
  if (obs_count == 0) return kUnknownClass;
  auto it = std::max_element(class_votes.begin(), class_votes.end());
  return static_cast<std::int32_t>(it - class_votes.begin());
}

const VoxelCell* VoxelMap::find(const VoxelKey& key) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return nullptr;
  return &cells_[static_cast<std::size_t>(it - keys_.begin())];
}

VoxelMap build_map(const SceneBundle& bundle, double voxel_size) {
  if (!(voxel_size > 0.0)) throw ValidationError("voxel_size must be positive");
  VoxelMap map(voxel_size, bundle.class_count());

  struct Obs {
    VoxelKey key;
    float cert;
    std::uint16_t pred;
  };
  std::vector<Obs> obs;
  obs.reserve(bundle.vertices.size());
  for (const auto& v : bundle.vertices) {
    const bool finite = std::all_of(v.position.begin(), v.position.end(), [](float x) { return std::isfinite(x); });
    if (!finite) {
      ++map.skipped_;
      continue;
    }
    obs.push_back({voxel_key(v.position, voxel_size), v.cert, v.pred});
  }
  // Sorting fixes the summation order of cert_sum, so the map is bitwise
  // identical under any permutation of the input observations.
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.cert != b.cert) return a.cert < b.cert;
    return a.pred < b.pred;
  });

  for (const auto& o : obs) {
    if (map.keys_.empty() || map.keys_.back() != o.key) {
      map.keys_.push_back(o.key);
      map.cells_.push_back({std::vector<std::uint32_t>(map.class_count_, 0), 0.0, 0});
    }
    auto& cell = map.cells_.back();
    if (o.pred < cell.class_votes.size()) ++cell.class_votes[o.pred];
    cell.cert_sum += static_cast<double>(o.cert);
    ++cell.obs_count;
  }
  return map;
}

std::vector<RenderedVertex> render(const VoxelMap& map, const SceneBundle& bundle) {
  std::vector<RenderedVertex> out(bundle.vertices.size());
  for (std::size_t i = 0; i < bundle.vertices.size(); ++i) {
    const auto& pos = bundle.vertices[i].position;
    if (!std::all_of(pos.begin(), pos.end(), [](float x) { return std::isfinite(x); })) continue;
    if (const VoxelCell* cell = map.find(voxel_key(pos, map.voxel_size()))) {
      out[i] = {cell->fused_class(), cell->mean_cert()};
    }
  }
  return out;
}

void save_map(const VoxelMap& map, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::uint64_t m = map.size();
  const std::uint64_t k = map.class_count();
  std::vector<std::int32_t> keys;
  std::vector<std::int32_t> votes;
  std::vector<float> cert;
  keys.reserve(3 * m);
  votes.reserve(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& key = map.keys()[i];
    keys.insert(keys.end(), {key.ix, key.iy, key.iz});
    for (auto c : map.cells()[i].class_votes) votes.push_back(static_cast<std::int32_t>(c));
    cert.push_back(static_cast<float>(map.cells()[i].mean_cert()));
  }
  write_tensor(dir / "keys.tns", Tensor::from({m, 3}, std::move(keys)));
  write_tensor(dir / "votes.tns", Tensor::from({m, k}, std::move(votes)));
  write_tensor(dir / "cert.tns", Tensor::from({m}, std::move(cert)));
  write_json(dir / "map.json", {{"voxel_size", map.voxel_size()},
                                {"class_count", map.class_count()},
                                {"voxel_count", map.size()},
                                {"skipped_observations", map.skipped()}});
}

VoxelMap load_map(const fs::path& dir) {
  const auto meta = read_json(dir / "map.json");
  VoxelMap map(meta.at("voxel_size").get<double>(), meta.at("class_count").get<std::size_t>());
  map.skipped_ = meta.value("skipped_observations", std::size_t{0});
  const auto keys_t = read_tensor(dir / "keys.tns");
  const auto votes_t = read_tensor(dir / "votes.tns");
  const auto cert_t = read_tensor(dir / "cert.tns");
  if (!keys_t.holds<std::int32_t>() || !votes_t.holds<std::int32_t>() || !cert_t.holds<float>() ||
      keys_t.ndim() != 2 || keys_t.dims()[1] != 3 || votes_t.ndim() != 2 ||
      votes_t.dims()[1] != map.class_count() || cert_t.ndim() != 1 ||
      votes_t.dims()[0] != keys_t.dims()[0] || cert_t.dims()[0] != keys_t.dims()[0]) {
    throw ValidationError(dir.string() + ": inconsistent map dump");
  }
  const auto& keys = keys_t.values<std::int32_t>();
  const auto& votes = votes_t.values<std::int32_t>();
  const auto& cert = cert_t.values<float>();
  const std::size_t m = keys_t.dims()[0];
  const std::size_t k = map.class_count();
  for (std::size_t i = 0; i < m; ++i) {
    VoxelKey key{keys[3 * i], keys[3 * i + 1], keys[3 * i + 2]};
    if (!map.keys_.empty() && !(map.keys_.back() < key)) {
      throw ValidationError(dir.string() + ": map keys not strictly ascending");
    }
    VoxelCell cell;
    cell.class_votes.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      if (votes[i * k + c] < 0) throw ValidationError(dir.string() + ": negative vote count");
      cell.class_votes[c] = static_cast<std::uint32_t>(votes[i * k + c]);
      cell.obs_count += cell.class_votes[c];
    }
    cell.cert_sum = static_cast<double>(cert[i]) * cell.obs_count;
    map.keys_.push_back(key);
    map.cells_.push_back(std::move(cell));
  }
  return map;
}

}  // namespace scim
