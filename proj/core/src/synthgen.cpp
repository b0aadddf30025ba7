#include "scim/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string_view>

#include <nlohmann/json.hpp>

#include "scim/errors.hpp"
#include "scim/rng.hpp"

namespace scim {

namespace {

using nlohmann::json;

constexpr std::size_t kCenterTries = 2000;
constexpr std::size_t kCenterRestarts = 50;
constexpr std::uint16_t kImageWidth = 640;

bool overlaps(const Box& a, const Box& b) {
  for (int k = 0; k < 3; ++k) {
    if (a.max[k] <= b.min[k] || b.max[k] <= a.min[k]) return false;
  }
  return true;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

json box_to_json(const Box& b) { return {{"min", b.min}, {"max", b.max}}; }

Box box_from_json(const json& j) {
  static constexpr std::string_view keys[] = {"min", "max"};
  reject_unknown_keys(j, keys, "synth.boxes[]");
  return {j.at("min").get<std::array<double, 3>>(), j.at("max").get<std::array<double, 3>>()};
}

float clamp01(double x) { return static_cast<float>(std::clamp(x, 0.0, 1.0)); }

}  // namespace

void SynthConfig::validate() const {
  if (n_known_classes < 2) throw ValidationError("synth: n_known_classes must be >= 2");
  if (frames == 0 || points_per_frame == 0) throw ValidationError("synth: frames and points_per_frame must be > 0");
  if (modalities.empty()) throw ValidationError("synth: at least one modality is required");
  for (const auto& m : modalities) {
    if (m.name.empty() || m.dim == 0) throw ValidationError("synth: modality needs a name and dim > 0");
  }
  if (!(prediction_error_rate >= 0.0 && prediction_error_rate < 1.0)) {
    throw ValidationError("synth: prediction_error_rate must lie in [0,1)");
  }
  if (!(class_center_separation >= 0.0) || !(descriptor_noise_sigma >= 0.0) || !(cert_model.sigma >= 0.0)) {
    throw ValidationError("synth: separation and noise must be non-negative");
  }
  if (!(voxel_size > 0.0)) throw ValidationError("synth: voxel_size must be > 0");
  if (!boxes.empty()) {
    if (boxes.size() != class_count()) throw ValidationError("synth: need exactly one box per class");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        if (!(boxes[i].min[k] < boxes[i].max[k]) || boxes[i].min[k] < 0.0 || boxes[i].max[k] > 1.0) {
          throw ValidationError("synth: box " + std::to_string(i) + " is empty or outside the unit cube");
        }
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (overlaps(boxes[i], boxes[j])) {
          throw ValidationError("synth: boxes " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
        }
      }
    }
  }
}

json synth_config_to_json(const SynthConfig& c) {
  json mods = json::array();
  for (const auto& m : c.modalities) {
    json jm = {{"name", m.name}, {"dim", m.dim}};
    if (m.separation) jm["separation"] = *m.separation;
    if (m.noise_sigma) jm["noise_sigma"] = *m.noise_sigma;
    mods.push_back(jm);
  }
  json boxes = json::array();
  for (const auto& b : c.boxes) boxes.push_back(box_to_json(b));
  return {{"n_known_classes", c.n_known_classes},
          {"n_novel_classes", c.n_novel_classes},
          {"frames", c.frames},
          {"points_per_frame", c.points_per_frame},
          {"modalities", mods},
          {"class_center_separation", c.class_center_separation},
          {"descriptor_noise_sigma", c.descriptor_noise_sigma},
          {"prediction_error_rate", c.prediction_error_rate},
          {"cert_model",
           {{"confident_mean", c.cert_model.confident_mean},
            {"uncertain_mean", c.cert_model.uncertain_mean},
            {"sigma", c.cert_model.sigma}}},
          {"voxel_size", c.voxel_size},
          {"boxes", boxes},
          {"novel_pred", c.novel_pred == NovelPred::uniform ? "uniform" : "nearest"},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  static constexpr std::string_view keys[] = {
      "n_known_classes",        "n_novel_classes", "frames",          "points_per_frame",
      "modalities",             "class_center_separation", "descriptor_noise_sigma",
      "prediction_error_rate",  "cert_model",      "voxel_size",      "boxes",
      "novel_pred",             "seed"};
  reject_unknown_keys(j, keys, "synth");
  SynthConfig c;
  try {
    c.n_known_classes = j.value("n_known_classes", c.n_known_classes);
    c.n_novel_classes = j.value("n_novel_classes", c.n_novel_classes);
    c.frames = j.value("frames", c.frames);
    c.points_per_frame = j.value("points_per_frame", c.points_per_frame);
    if (j.contains("modalities")) {
      static constexpr std::string_view mkeys[] = {"name", "dim", "separation", "noise_sigma"};
      c.modalities.clear();
      for (const auto& jm : j.at("modalities")) {
        reject_unknown_keys(jm, mkeys, "synth.modalities[]");
        SynthModality m{jm.at("name").get<std::string>(), jm.at("dim").get<std::size_t>(), {}, {}};
        if (jm.contains("separation")) m.separation = jm.at("separation").get<double>();
        if (jm.contains("noise_sigma")) m.noise_sigma = jm.at("noise_sigma").get<double>();
        c.modalities.push_back(std::move(m));
      }
    }
    c.class_center_separation = j.value("class_center_separation", c.class_center_separation);
    c.descriptor_noise_sigma = j.value("descriptor_noise_sigma", c.descriptor_noise_sigma);
    c.prediction_error_rate = j.value("prediction_error_rate", c.prediction_error_rate);
    if (j.contains("cert_model")) {
      static constexpr std::string_view ckeys[] = {"confident_mean", "uncertain_mean", "sigma"};
      const auto& jc = j.at("cert_model");
      reject_unknown_keys(jc, ckeys, "synth.cert_model");
      c.cert_model.confident_mean = jc.value("confident_mean", c.cert_model.confident_mean);
      c.cert_model.uncertain_mean = jc.value("uncertain_mean", c.cert_model.uncertain_mean);
      c.cert_model.sigma = jc.value("sigma", c.cert_model.sigma);
    }
    c.voxel_size = j.value("voxel_size", c.voxel_size);
    if (j.contains("boxes")) {
      for (const auto& jb : j.at("boxes")) c.boxes.push_back(box_from_json(jb));
    }
    const auto np = j.value("novel_pred", std::string("uniform"));
    if (np == "uniform") {
      c.novel_pred = NovelPred::uniform;
    } else if (np == "nearest") {
      c.novel_pred = NovelPred::nearest;
    } else {
      throw ValidationError("synth: novel_pred must be 'uniform' or 'nearest'");
    }
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth: ") + e.what());
  }
  return c;
}

std::vector<Box> grid_boxes(std::size_t count) {
  std::size_t g = 1;
  while (g * g * g < count) ++g;
  const double cell = 1.0 / static_cast<double>(g);
  const double margin = 0.1 * cell;
  std::vector<Box> boxes;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx[3] = {i % g, (i / g) % g, i / (g * g)};
    Box b;
    for (int k = 0; k < 3; ++k) {
      b.min[k] = static_cast<double>(idx[k]) * cell + margin;
      b.max[k] = static_cast<double>(idx[k] + 1) * cell - margin;
    }
    boxes.push_back(b);
  }
  return boxes;
}

std::vector<std::vector<double>> place_centers(std::size_t count, std::size_t dim, double separation,
                                               std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t restart = 0; restart < kCenterRestarts; ++restart) {
    std::vector<std::vector<double>> centers;
    while (centers.size() < count) {
      bool placed = false;
      for (std::size_t t = 0; t < kCenterTries && !placed; ++t) {
        std::vector<double> p(dim);
        double norm = 0.0;
        for (auto& x : p) {
          x = rng.normal();
          norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (auto& x : p) x *= separation / norm;
        const bool ok = std::all_of(centers.begin(), centers.end(), [&](const std::vector<double>& c) {
          return distance(c, p) >= separation;
        });
        if (ok) {
          centers.push_back(std::move(p));
          placed = true;
        }
      }
      if (!placed) break;
    }
    if (centers.size() == count) return centers;
  }
  throw ValidationError("synth: separation infeasible: cannot place " + std::to_string(count) +
                        " centers pairwise >= " + std::to_string(separation) + " apart in dim " +
                        std::to_string(dim));
}

SceneBundle generate(const SynthConfig& config) {
  config.validate();
  const std::size_t kk = config.n_known_classes;
  const std::size_t kc = config.class_count();
  const auto boxes = config.boxes.empty() ? grid_boxes(kc) : config.boxes;

  SceneBundle b;
  auto& m = b.manifest;
  m.scene_id = "synth_" + std::to_string(config.seed);
  m.voxel_size = config.voxel_size;
  for (std::size_t c = 0; c < kk; ++c) m.classes.push_back("known_" + std::to_string(c));
  for (std::size_t c = 0; c < config.n_novel_classes; ++c) {
    m.classes.push_back("novel_" + std::to_string(c));
    m.outlier_classes.push_back(m.classes.back());
  }
  for (const auto& mod : config.modalities) m.modalities.push_back({mod.name, mod.dim});

  std::vector<std::vector<std::vector<double>>> centers;
  for (const auto& mod : config.modalities) {
    centers.push_back(place_centers(kc, mod.dim, mod.separation.value_or(config.class_center_separation),
                                    stage_seed(config.seed, "synth.centers." + mod.name)));
  }
  // Nearest known class of each novel class, measured in the first modality.
  std::vector<std::uint16_t> nearest(kc, 0);
  for (std::size_t c = kk; c < kc; ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kk; ++k) {
      const double d = distance(centers[0][c], centers[0][k]);
      if (d < best) {
        best = d;
        nearest[c] = static_cast<std::uint16_t>(k);
      }
    }
  }

  Rng rng(stage_seed(config.seed, "synth.points"));
  const std::size_t n = config.frames * config.points_per_frame;
  b.vertices.reserve(n);
  for (std::size_t k = 0; k < config.modalities.size(); ++k) {
    b.descriptors.emplace_back(n, config.modalities[k].dim);
  }
  for (std::size_t f = 0; f < config.frames; ++f) {
    char id[16];
    std::snprintf(id, sizeof id, "f%04zu", f);
    m.frames.emplace_back(id);
    for (std::size_t j = 0; j < config.points_per_frame; ++j) {
      const std::size_t row = b.vertices.size();
      const std::size_t cls = (f * config.points_per_frame + j) % kc;
      ObservationVertex v;
      v.frame_index = static_cast<std::uint32_t>(f);
      v.time = v.frame_index;
      v.u = static_cast<std::uint16_t>(j % kImageWidth);
      v.v = static_cast<std::uint16_t>(j / kImageWidth);
      for (int a = 0; a < 3; ++a) {
        v.position[a] = static_cast<float>(rng.uniform(boxes[cls].min[a], boxes[cls].max[a]));
      }
      v.label = static_cast<std::int32_t>(cls);
      if (cls < kk) {
        v.pred = static_cast<std::uint16_t>(cls);
        if (rng.uniform() < config.prediction_error_rate) {
          const auto other = rng.below(kk - 1);
          v.pred = static_cast<std::uint16_t>(other >= cls ? other + 1 : other);
        }
        v.cert = clamp01(rng.normal(config.cert_model.confident_mean, config.cert_model.sigma));
      } else {
        v.pred = config.novel_pred == NovelPred::uniform ? static_cast<std::uint16_t>(rng.below(kk)) : nearest[cls];
        v.cert = clamp01(rng.normal(config.cert_model.uncertain_mean, config.cert_model.sigma));
      }
      for (std::size_t k = 0; k < config.modalities.size(); ++k) {
        const double sigma = config.modalities[k].noise_sigma.value_or(config.descriptor_noise_sigma);
        auto out = b.descriptors[k].row(row);
        for (std::size_t d = 0; d < out.size(); ++d) {
          out[d] = static_cast<float>(centers[k][cls][d] + sigma * rng.normal());
        }
      }
      b.vertices.push_back(v);
    }
    b.frame_offsets.push_back(b.vertices.size());
    b.frame_has_labels.push_back(true);
  }
  m.validate();
  return b;
}

SceneBundle generate(const SynthConfig& config, const std::filesystem::path& out) {
  auto bundle = generate(config);
  save_scene(bundle, out);
  return bundle;
}

}  // namespace scim
