#include "scim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "scim/errors.hpp"
#include "scim/tensorio.hpp"

namespace scim {

namespace fs = std::filesystem;
using nlohmann::json;

DescriptorMatrix::DescriptorMatrix(std::size_t r, std::size_t c, std::vector<float> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) throw ValidationError("descriptor matrix size mismatch");
}

void SceneManifest::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw ValidationError("manifest: voxel_size must be positive");
  }
  std::set<std::string> names(classes.begin(), classes.end());
  if (names.size() != classes.size()) throw ValidationError("manifest: duplicate class names");
  for (const auto& o : outlier_classes) {
    if (!names.contains(o)) throw ValidationError("manifest: outlier class '" + o + "' not in classes");
  }
  std::set<std::string> modality_names;
  for (const auto& m : modalities) {
    if (m.dim < 1) throw ValidationError("manifest: modality '" + m.name + "' has dim 0");
    if (!modality_names.insert(m.name).second) {
      throw ValidationError("manifest: duplicate modality '" + m.name + "'");
    }
  }
  std::set<std::string> ids(frames.begin(), frames.end());
  if (ids.size() != frames.size()) throw ValidationError("manifest: duplicate frame ids");
  if (classes.size() > 65535) throw ValidationError("manifest: too many classes");
}

std::optional<std::size_t> SceneManifest::class_id(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::int32_t> SceneManifest::outlier_class_ids() const {
  std::vector<std::int32_t> ids;
  for (const auto& o : outlier_classes) {
    if (auto id = class_id(o)) ids.push_back(static_cast<std::int32_t>(*id));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

json manifest_to_json(const SceneManifest& m) {
  json mods = json::array();
  for (const auto& mod : m.modalities) mods.push_back({{"name", mod.name}, {"dim", mod.dim}});
  return {{"scene_id", m.scene_id},     {"voxel_size", m.voxel_size}, {"classes", m.classes},
          {"outlier_classes", m.outlier_classes}, {"modalities", mods}, {"frames", m.frames}};
}

SceneManifest manifest_from_json(const json& j) {
  SceneManifest m;
  try {
    m.scene_id = j.at("scene_id").get<std::string>();
    m.voxel_size = j.value("voxel_size", 0.05);
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.outlier_classes = j.value("outlier_classes", std::vector<std::string>{});
    for (const auto& mod : j.at("modalities")) {
      m.modalities.push_back({mod.at("name").get<std::string>(), mod.at("dim").get<std::size_t>()});
    }
    m.frames = j.at("frames").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

std::optional<std::size_t> SceneBundle::modality_index(std::string_view name) const {
  for (std::size_t i = 0; i < manifest.modalities.size(); ++i) {
    if (manifest.modalities[i].name == name) return i;
  }
  return std::nullopt;
}

const DescriptorMatrix& SceneBundle::modality(std::string_view name) const {
  auto idx = modality_index(name);
  if (!idx) throw ValidationError("bundle has no modality '" + std::string(name) + "'");
  return descriptors[*idx];
}

bool SceneBundle::has_labels() const {
  return std::any_of(frame_has_labels.begin(), frame_has_labels.end(), [](bool b) { return b; });
}

bool ClassCatalog::is_novel(std::int64_t id) const {
  return std::find(novel_.begin(), novel_.end(), id) != novel_.end();
}

std::int32_t ClassCatalog::add_novel(std::optional<std::int32_t> reserved) {
  std::int32_t id = novel_.empty() ? static_cast<std::int32_t>(known_.size()) : novel_.back() + 1;
  if (reserved && id == *reserved) ++id;
  novel_.push_back(id);
  return id;
}

std::string ClassCatalog::name(std::int32_t id) const {
  if (is_known(id)) return known_[static_cast<std::size_t>(id)];
  auto it = std::find(novel_.begin(), novel_.end(), id);
  if (it != novel_.end()) return "c" + std::to_string(it - novel_.begin() + 1);
  return "unknown";
}

std::size_t vertex_count(const SceneBundle& bundle) { return bundle.vertices.size(); }

std::vector<std::size_t> confident_subset(const SceneBundle& bundle, double delta_conf) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bundle.vertices.size(); ++i) {
    if (static_cast<double>(bundle.vertices[i].cert) > delta_conf) out.push_back(i);
  }
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return values[std::min(idx, values.size() - 1)];
}

namespace {

Tensor read_required(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file: " + path.string());
  return read_tensor(path);
}

template <typename T>
const std::vector<T>& expect(const Tensor& t, const fs::path& path, std::size_t cols_or_zero) {
  if (!t.holds<T>()) {
    throw ValidationError(path.string() + ": unexpected dtype " + std::string(dtype_name(t.dtype())));
  }
  const bool ok = cols_or_zero == 0 ? t.ndim() == 1 : (t.ndim() == 2 && t.dims()[1] == cols_or_zero);
  if (!ok) throw ValidationError(path.string() + ": unexpected shape");
  return t.values<T>();
}

void check_rows(const Tensor& t, std::uint64_t n, const fs::path& path) {
  if (t.dims().empty() || t.dims()[0] != n) {
    throw ValidationError(path.string() + ": vertex count " +
                          std::to_string(t.dims().empty() ? 0 : t.dims()[0]) +
                          " inconsistent with frame count " + std::to_string(n));
  }
}

}  // namespace

SceneBundle load_scene(const fs::path& dir) {
  SceneBundle bundle;
  bundle.manifest = manifest_from_json(read_json(dir / "manifest.json"));
  const auto& m = bundle.manifest;
  const std::size_t class_count = m.classes.size();
  bundle.descriptors.assign(m.modalities.size(), {});
  for (std::size_t k = 0; k < m.modalities.size(); ++k) bundle.descriptors[k].cols = m.modalities[k].dim;

  for (std::size_t f = 0; f < m.frames.size(); ++f) {
    const fs::path fdir = dir / "frames" / m.frames[f];
    const auto pixels_t = read_required(fdir / "pixels.tns");
    const auto xyz_t = read_required(fdir / "xyz.tns");
    const auto pred_t = read_required(fdir / "pred.tns");
    const auto cert_t = read_required(fdir / "cert.tns");
    const auto& pixels = expect<std::uint16_t>(pixels_t, fdir / "pixels.tns", 2);
    const std::uint64_t n = pixels_t.dims()[0];
    check_rows(xyz_t, n, fdir / "xyz.tns");
    check_rows(pred_t, n, fdir / "pred.tns");
    check_rows(cert_t, n, fdir / "cert.tns");
    const auto& xyz = expect<float>(xyz_t, fdir / "xyz.tns", 3);
    const auto& pred = expect<std::uint16_t>(pred_t, fdir / "pred.tns", 0);
    const auto& cert = expect<float>(cert_t, fdir / "cert.tns", 0);

    const std::vector<std::int32_t>* label = nullptr;
    std::optional<Tensor> label_t;
    if (fs::exists(fdir / "label.tns")) {
      label_t = read_tensor(fdir / "label.tns");
      check_rows(*label_t, n, fdir / "label.tns");
      label = &expect<std::int32_t>(*label_t, fdir / "label.tns", 0);
    }
    bundle.frame_has_labels.push_back(label != nullptr);

    for (std::uint64_t i = 0; i < n; ++i) {
      ObservationVertex v;
      v.frame_index = static_cast<std::uint32_t>(f);
      v.time = static_cast<std::uint32_t>(f);
      v.u = pixels[2 * i];
      v.v = pixels[2 * i + 1];
      v.position = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
      v.pred = pred[i];
      if (v.pred >= class_count) {
        throw ValidationError((fdir / "pred.tns").string() + ": pred " + std::to_string(v.pred) +
                              " out of range for " + std::to_string(class_count) + " classes");
      }
      v.cert = cert[i];
      if (label) {
        v.label = (*label)[i];
        if (v.label < kUnlabeled || v.label >= static_cast<std::int32_t>(class_count)) {
          throw ValidationError((fdir / "label.tns").string() + ": label out of range");
        }
      }
      bundle.vertices.push_back(v);
    }

    for (std::size_t k = 0; k < m.modalities.size(); ++k) {
      const fs::path p = fdir / ("desc_" + m.modalities[k].name + ".tns");
      const auto desc_t = read_required(p);
      check_rows(desc_t, n, p);
      if (desc_t.ndim() != 2 || desc_t.dims()[1] != m.modalities[k].dim) {
        throw ValidationError(p.string() + ": descriptor dim " +
                              std::to_string(desc_t.ndim() == 2 ? desc_t.dims()[1] : 0) +
                              " does not match manifest dim " + std::to_string(m.modalities[k].dim));
      }
      const auto& values = expect<float>(desc_t, p, m.modalities[k].dim);
      auto& dst = bundle.descriptors[k];
      dst.values.insert(dst.values.end(), values.begin(), values.end());
      dst.rows += n;
    }
    bundle.frame_offsets.push_back(bundle.vertices.size());
  }
  return bundle;
}

void save_scene(const SceneBundle& bundle, const fs::path& dir) {
  const auto& m = bundle.manifest;
  m.validate();
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());
  write_json(dir / "manifest.json", manifest_to_json(m));

  for (std::size_t f = 0; f < bundle.frame_count(); ++f) {
    const fs::path fdir = dir / "frames" / m.frames[f];
    fs::create_directories(fdir, ec);
    if (ec) throw IoError("cannot create " + fdir.string() + ": " + ec.message());
    const std::size_t begin = bundle.frame_offsets[f];
    const std::size_t end = bundle.frame_offsets[f + 1];
    const std::uint64_t n = end - begin;

    std::vector<std::uint16_t> pixels;
    std::vector<float> xyz;
    std::vector<std::uint16_t> pred;
    std::vector<float> cert;
    std::vector<std::int32_t> label;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& v = bundle.vertices[i];
      pixels.insert(pixels.end(), {v.u, v.v});
      xyz.insert(xyz.end(), v.position.begin(), v.position.end());
      pred.push_back(v.pred);
      cert.push_back(v.cert);
      label.push_back(v.label);
    }
    write_tensor(fdir / "pixels.tns", Tensor::from({n, 2}, std::move(pixels)));
    write_tensor(fdir / "xyz.tns", Tensor::from({n, 3}, std::move(xyz)));
    write_tensor(fdir / "pred.tns", Tensor::from({n}, std::move(pred)));
    write_tensor(fdir / "cert.tns", Tensor::from({n}, std::move(cert)));
    if (f < bundle.frame_has_labels.size() && bundle.frame_has_labels[f]) {
      write_tensor(fdir / "label.tns", Tensor::from({n}, std::move(label)));
    }
    for (std::size_t k = 0; k < m.modalities.size(); ++k) {
      const auto& src = bundle.descriptors[k];
      std::vector<float> rows(src.values.begin() + static_cast<std::ptrdiff_t>(begin * src.cols),
                              src.values.begin() + static_cast<std::ptrdiff_t>(end * src.cols));
      write_tensor(fdir / ("desc_" + m.modalities[k].name + ".tns"),
                   Tensor::from({n, src.cols}, std::move(rows)));
    }
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, std::span<const std::string_view> allowed, std::string_view context) {
  if (!j.is_object()) throw ValidationError(std::string(context) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace scim
