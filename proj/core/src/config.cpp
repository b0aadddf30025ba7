#include "scim/config.hpp"

#include <algorithm>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "scim/errors.hpp"
#include "scim/scene.hpp"

namespace scim {

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
void read(const json& j, std::string_view key, T& out) {
  const auto it = j.find(key);
  if (it != j.end()) out = it->template get<T>();
}

void read(const json& j, std::string_view key, std::optional<double>& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_null()) {
    out.reset();
  } else {
    out = it->get<double>();
  }
}

void read(const json& j, std::string_view key, std::pair<double, double>& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  const auto v = it->get<std::vector<double>>();
  if (v.size() != 2) throw ValidationError("config: range '" + std::string(key) + "' needs [lo, hi]");
  out = {v[0], v[1]};
}

const json& section(const json& j, std::string_view key, std::span<const std::string_view> allowed) {
  static const json empty = json::object();
  const auto it = j.find(key);
  if (it == j.end()) return empty;
  reject_unknown_keys(*it, allowed, "config." + std::string(key));
  return *it;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::string>& lines) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, lines);
  } else {
    lines.push_back(prefix + " = " + j.dump());
  }
}

}  // namespace

Backend backend_from_name(std::string_view name) {
  if (name == "hdbscan") return Backend::hdbscan;
  if (name == "mcl") return Backend::mcl;
  if (name == "dbscan") return Backend::dbscan;
  throw ValidationError("unknown backend '" + std::string(name) + "' (expected hdbscan, mcl or dbscan)");
}

void PipelineConfig::validate() const {
  if (subsample_frame_stride == 0 || subsample_points_per_frame == 0) {
    throw ValidationError("config: subsample stride and points_per_frame must be > 0");
  }
  if (nakajima_frame_stride == 0) throw ValidationError("config: baseline.nakajima_frame_stride must be > 0");
  if (reference_pairs == 0) throw ValidationError("config: harmonize.reference_pairs must be > 0");
  gp_config(0).validate();
  for (double p : {confidence_percentile, delta_percentile}) {
    if (!(p >= 0.0 && p <= 100.0)) throw ValidationError("config: percentiles must lie in [0,100]");
  }
  if (voxel_size && !(*voxel_size > 0.0)) throw ValidationError("config: map.voxel_size must be > 0");
  if (!(merge_iou > 0.0 && merge_iou <= 1.0)) throw ValidationError("config: pseudolabel.merge_iou must lie in (0,1]");
  for (const auto& r : {box.min_cluster_size, box.min_samples, box.inflation, box.eta}) {
    if (!(r.first <= r.second)) throw ValidationError("config: optimizer.box ranges need lo <= hi");
  }
  if (box.min_cluster_size.first < 2 || box.min_samples.first < 1) {
    throw ValidationError("config: optimizer.box min_cluster_size >= 2 and min_samples >= 1 required");
  }
  if (box.inflation.first <= 1.0) throw ValidationError("config: optimizer.box.inflation must exceed 1");
  if (pca_dim == 0) throw ValidationError("config: baseline.pca_dim must be > 0");
}

GPConfig PipelineConfig::gp_config(std::uint64_t seed) const {
  GPConfig g;
  g.length_scale = length_scale;
  g.noise_variance = noise_variance;
  g.jitter = jitter;
  g.init_random = init_random;
  g.candidates_per_step = candidates;
  g.budget = budget;
  g.seed = seed;
  return g;
}

json config_to_json(const PipelineConfig& c) {
  auto range = [](const std::pair<double, double>& r) { return json::array({r.first, r.second}); };
  return {
      {"modalities", c.modalities},
      {"backend", std::string(backend_name(c.backend))},
      {"subsample", {{"frame_stride", c.subsample_frame_stride}, {"points_per_frame", c.subsample_points_per_frame}}},
      {"harmonize", {{"reference_pairs", c.reference_pairs}}},
      {"optimizer",
       {{"budget", c.budget},
        {"init_random", c.init_random},
        {"candidates", c.candidates},
        {"length_scale", c.length_scale},
        {"noise_variance", c.noise_variance},
        {"jitter", c.jitter},
        {"confidence_percentile", c.confidence_percentile},
        {"delta_conf", optional_json(c.delta_conf)},
        {"noise_mode", c.noise_mode == NoiseMode::penalize ? "penalize" : "exclude"},
        {"optimize_weights", c.optimize_weights},
        {"box",
         {{"min_cluster_size", range(c.box.min_cluster_size)},
          {"min_samples", range(c.box.min_samples)},
          {"inflation", range(c.box.inflation)},
          {"eta", range(c.box.eta)}}}}},
      {"hdbscan", {{"min_cluster_size", c.hdbscan.min_cluster_size}, {"min_samples", c.hdbscan.min_samples}}},
      {"mcl",
       {{"inflation", c.mcl.inflation},
        {"eta", c.mcl.prune_threshold_eta},
        {"max_iters", c.mcl.max_iters},
        {"kernel_bandwidth", c.mcl.kernel_bandwidth}}},
      {"dbscan", {{"epsilon", c.dbscan.epsilon}, {"min_samples", c.dbscan.min_samples}}},
      {"map", {{"voxel_size", optional_json(c.voxel_size)}}},
      {"pseudolabel",
       {{"delta_percentile", c.delta_percentile},
        {"delta", optional_json(c.delta)},
        {"merge_iou", c.merge_iou},
        {"ignore_id", c.ignore_id}}},
      {"baseline",
       {{"outlier_cert_threshold", c.outlier_cert_threshold},
        {"pca_dim", c.pca_dim},
        {"nakajima_frame_stride", c.nakajima_frame_stride}}},
  };
}

PipelineConfig config_from_json(const json& j) {
  static constexpr std::string_view top[] = {"modalities", "backend", "subsample", "harmonize", "optimizer", "hdbscan",
                                             "mcl",        "dbscan",  "map",       "pseudolabel", "baseline"};
  static constexpr std::string_view subsample_keys[] = {"frame_stride", "points_per_frame"};
  static constexpr std::string_view harmonize_keys[] = {"reference_pairs"};
  static constexpr std::string_view optimizer_keys[] = {"budget",       "init_random", "candidates",
                                                        "length_scale", "noise_variance", "jitter",
                                                        "confidence_percentile", "delta_conf", "noise_mode",
                                                        "optimize_weights", "box"};
  static constexpr std::string_view box_keys[] = {"min_cluster_size", "min_samples", "inflation", "eta"};
  static constexpr std::string_view hdbscan_keys[] = {"min_cluster_size", "min_samples"};
  static constexpr std::string_view mcl_keys[] = {"inflation", "eta", "max_iters", "kernel_bandwidth"};
  static constexpr std::string_view dbscan_keys[] = {"epsilon", "min_samples"};
  static constexpr std::string_view map_keys[] = {"voxel_size"};
  static constexpr std::string_view pseudo_keys[] = {"delta_percentile", "delta", "merge_iou", "ignore_id"};
  static constexpr std::string_view baseline_keys[] = {"outlier_cert_threshold", "pca_dim", "nakajima_frame_stride"};

  reject_unknown_keys(j, top, "config");
  PipelineConfig c;
  try {
    read(j, "modalities", c.modalities);
    if (j.contains("backend")) c.backend = backend_from_name(j.at("backend").get<std::string>());

    const auto& s = section(j, "subsample", subsample_keys);
    read(s, "frame_stride", c.subsample_frame_stride);
    read(s, "points_per_frame", c.subsample_points_per_frame);

    read(section(j, "harmonize", harmonize_keys), "reference_pairs", c.reference_pairs);

    const auto& o = section(j, "optimizer", optimizer_keys);
    read(o, "budget", c.budget);
    read(o, "init_random", c.init_random);
    read(o, "candidates", c.candidates);
    read(o, "length_scale", c.length_scale);
    read(o, "noise_variance", c.noise_variance);
    read(o, "jitter", c.jitter);
    read(o, "confidence_percentile", c.confidence_percentile);
    read(o, "delta_conf", c.delta_conf);
    if (o.contains("noise_mode")) {
      const auto mode = o.at("noise_mode").get<std::string>();
      if (mode == "penalize") {
        c.noise_mode = NoiseMode::penalize;
      } else if (mode == "exclude") {
        c.noise_mode = NoiseMode::exclude;
      } else {
        throw ValidationError("config: optimizer.noise_mode must be 'penalize' or 'exclude'");
      }
    }
    read(o, "optimize_weights", c.optimize_weights);
    if (o.contains("box")) {
      const auto& b = o.at("box");
      reject_unknown_keys(b, box_keys, "config.optimizer.box");
      read(b, "min_cluster_size", c.box.min_cluster_size);
      read(b, "min_samples", c.box.min_samples);
      read(b, "inflation", c.box.inflation);
      read(b, "eta", c.box.eta);
    }

    const auto& h = section(j, "hdbscan", hdbscan_keys);
    read(h, "min_cluster_size", c.hdbscan.min_cluster_size);
    read(h, "min_samples", c.hdbscan.min_samples);

    const auto& m = section(j, "mcl", mcl_keys);
    read(m, "inflation", c.mcl.inflation);
    read(m, "eta", c.mcl.prune_threshold_eta);
    read(m, "max_iters", c.mcl.max_iters);
    read(m, "kernel_bandwidth", c.mcl.kernel_bandwidth);

    const auto& d = section(j, "dbscan", dbscan_keys);
    read(d, "epsilon", c.dbscan.epsilon);
    read(d, "min_samples", c.dbscan.min_samples);

    read(section(j, "map", map_keys), "voxel_size", c.voxel_size);

    const auto& p = section(j, "pseudolabel", pseudo_keys);
    read(p, "delta_percentile", c.delta_percentile);
    read(p, "delta", c.delta);
    read(p, "merge_iou", c.merge_iou);
    read(p, "ignore_id", c.ignore_id);

    const auto& bl = section(j, "baseline", baseline_keys);
    read(bl, "outlier_cert_threshold", c.outlier_cert_threshold);
    read(bl, "pca_dim", c.pca_dim);
    read(bl, "nakajima_frame_stride", c.nakajima_frame_stride);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json(path)); }

std::string config_help() {
  std::vector<std::string> lines;
  flatten(config_to_json(PipelineConfig{}), "", lines);
  std::sort(lines.begin(), lines.end());
  std::ostringstream out;
  for (const auto& l : lines) out << "  " << l << '\n';
  return out.str();
}

}  // namespace scim
