#include "scim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>

#include "scim/descriptors.hpp"
#include "scim/errors.hpp"
#include "scim/graph.hpp"
#include "scim/rng.hpp"
#include "scim/tensorio.hpp"

namespace scim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kNakajimaNote =
    "entropy h(v) = 1 - min-max normalized certainty; per-class probabilities are not available";
constexpr const char* kUhlemeyerNote = "t-SNE step omitted; distances over PCA-reduced imgn descriptors";

void log_stage(std::string_view stage, std::string_view detail = {}) {
  std::cerr << "[scim] " << stage;
  if (!detail.empty()) std::cerr << ": " << detail;
  std::cerr << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

json decoded_to_json(const DecodedPoint& p) {
  json j = json::object();
  for (const auto& [name, value] : p.values) j[name] = value;
  return j;
}

json trace_to_json(const OptimizeResult& result, const ParamSpace& space) {
  json entries = json::array();
  for (const auto& e : result.trace.evaluations) {
    json je = {{"theta", e.theta},
               {"decoded", decoded_to_json(space.decode(e.theta))},
               {"objective", e.objective},
               {"failed", e.failed},
               {"random_phase", e.random_phase}};
    if (e.failed) je["error"] = e.error;
    entries.push_back(std::move(je));
  }
  return entries;
}

json alphas_to_json(const HarmonizationFactors& alphas) {
  json j = json::object();
  for (const auto& s : alphas.scales) {
    j[s.modality] = {{"alpha", s.alpha}, {"quantile", s.quantile}, {"degenerate", s.degenerate}};
  }
  return j;
}

HarmonizationFactors alphas_from_json(const json& j) {
  HarmonizationFactors h;
  for (const auto& [name, v] : j.items()) {
    h.scales.push_back({name, v.at("alpha").get<double>(), v.at("quantile").get<double>(),
                        v.at("degenerate").get<bool>()});
  }
  return h;
}

SubsampleSpec subsample_spec(const PipelineConfig& config, std::size_t stride, std::uint64_t seed) {
  return {stride, config.subsample_points_per_frame, stage_seed(seed, "subsample")};
}

std::vector<std::uint8_t> confident_mask(const SceneBundle& bundle, std::span<const std::size_t> rows, double delta) {
  std::vector<std::uint8_t> mask;
  for (auto i : rows) mask.push_back(static_cast<double>(bundle.vertices[i].cert) > delta ? 1 : 0);
  return mask;
}

/// Renumbers cluster ids by first member over the whole scene, the order an
/// assignments file is read back in.
ClusterSolution scene_canonical(const ClusterSolution& solution) {
  auto out = canonicalize({solution.assignment.begin(), solution.assignment.end()}, Backend::extended,
                          solution.params_used);
  out.converged = solution.converged;
  return out;
}

/// Map, merge, pseudo-labels and metrics shared by every method.
void finish_outputs(const PreparedScene& scene, const ClusterSolution& extended, const PipelineConfig& config,
                    const fs::path& out, std::string_view method, const json& notes) {
  const auto solution = scene_canonical(extended);
  // Render from the dumped map so that the stepwise subcommands, which read
  // the f32 mean certainties back, see exactly the same values.
  save_map(run_map(scene.bundle, config).map, out / "map");
  MapStage map{load_map(out / "map"), {}};
  map.render = render(map.map, scene.bundle);
  save_assignments(solution, out / "assignments.tns");
  log_stage("pseudolabel");
  const auto pseudo = run_pseudolabel(scene, map, solution, config);
  save_pseudolabels(scene.bundle, pseudo.frames, pseudo.merged, pseudo.config, out / "pseudo");
  if (const auto metrics = run_eval(scene, flatten_predictions(pseudo.frames, pseudo.config.ignore_id))) {
    auto j = metrics_to_json(*metrics);
    j["method"] = method;
    j["notes"] = notes;
    write_json(out / "metrics.json", j);
    log_stage("eval", "miou " + std::to_string(metrics->miou));
  }
}

}  // namespace

PreparedScene prepare_scene(SceneBundle raw, const PipelineConfig& config) {
  PreparedScene s;
  s.bundle = std::move(raw);
  for (auto& d : s.bundle.descriptors) d = l2_normalize(d);
  if (config.modalities.empty()) {
    for (const auto& m : s.bundle.manifest.modalities) s.modalities.push_back(m.name);
  } else {
    for (const auto& m : config.modalities) {
      s.bundle.modality(m);
      if (std::find(s.modalities.begin(), s.modalities.end(), m) != s.modalities.end()) {
        throw ValidationError("config: modality '" + m + "' listed twice");
      }
      s.modalities.push_back(m);
    }
  }
  const auto& man = s.bundle.manifest;
  s.outlier_ids = man.outlier_class_ids();
  std::sort(s.outlier_ids.begin(), s.outlier_ids.end());
  const std::size_t known = man.classes.size() - s.outlier_ids.size();
  for (std::size_t i = 0; i < s.outlier_ids.size(); ++i) {
    if (s.outlier_ids[i] != static_cast<std::int32_t>(known + i)) {
      throw ValidationError("manifest: outlier classes must follow the known classes");
    }
  }
  s.known_classes.assign(man.classes.begin(), man.classes.begin() + static_cast<std::ptrdiff_t>(known));
  for (const auto& v : s.bundle.vertices) {
    if (v.pred >= known) throw ValidationError("scene: prediction of an outlier class at a vertex");
  }
  return s;
}

PreparedScene prepare_scene(const fs::path& scene_dir, const PipelineConfig& config) {
  return prepare_scene(load_scene(scene_dir), config);
}

double resolve_delta_conf(const SceneBundle& bundle, const PipelineConfig& config) {
  if (config.delta_conf) return *config.delta_conf;
  std::vector<double> certs;
  certs.reserve(bundle.vertices.size());
  for (const auto& v : bundle.vertices) certs.push_back(v.cert);
  return nearest_rank_percentile(std::move(certs), config.confidence_percentile);
}

HarmonizationFactors compute_alphas(const SceneBundle& bundle, std::span<const std::string> modalities,
                                    double delta_conf, const PipelineConfig& config, std::uint64_t seed) {
  const auto candidates = confident_subset(bundle, delta_conf);
  const auto pairs = sample_reference_pairs(bundle, candidates, config.reference_pairs, stage_seed(seed, "harmonize"));
  if (pairs.empty()) {
    throw ValidationError("harmonize: no two confident vertices share a prediction; lower delta_conf");
  }
  return harmonize(bundle, modalities, pairs);
}

ClusteringParams base_params(const PipelineConfig& config, std::span<const std::string> modalities) {
  ClusteringParams p;
  p.weights = EdgeWeights::uniform(modalities);
  p.backend = config.backend;
  p.hdbscan = config.hdbscan;
  p.mcl = config.mcl;
  p.dbscan = config.dbscan;
  return p;
}

OptimizeStage run_optimize(const PreparedScene& scene, const PipelineConfig& config, std::uint64_t seed) {
  const auto& bundle = scene.bundle;
  OptimizeStage st;
  st.fitted.delta_conf = resolve_delta_conf(bundle, config);
  st.fitted.alphas = compute_alphas(bundle, scene.modalities, st.fitted.delta_conf, config, seed);
  st.fitted.sampled = subsample(bundle, subsample_spec(config, config.subsample_frame_stride, seed));
  log_stage("optimize", std::to_string(st.fitted.sampled.size()) + " sampled vertices");

  auto problem = ClusteringProblem::fused(bundle, st.fitted.sampled, scene.modalities, st.fitted.alphas,
                                          st.fitted.delta_conf);
  problem.noise_mode = config.noise_mode;
  const auto base = base_params(config, scene.modalities);
  st.space = make_param_space(config.backend, scene.modalities, config.box,
                              config.optimize_weights && scene.modalities.size() > 1);
  st.result = optimize(st.space, config.gp_config(stage_seed(seed, "optimizer")), [&](const DecodedPoint& p) {
    return objective(params_from_point(p, base), problem);
  });
  st.fitted.params = params_from_point(st.result.best, base);

  const auto& best = st.result.trace.evaluations[st.result.trace.best_index];
  st.params_json = fitted_to_json(st.fitted);
  st.params_json["method"] = "scim";
  st.params_json["seed"] = seed;
  st.params_json["subsample"] = {{"frame_stride", config.subsample_frame_stride},
                                 {"points_per_frame", config.subsample_points_per_frame}};
  st.params_json["trace"] = trace_to_json(st.result, st.space);
  st.params_json["best_index"] = st.result.trace.best_index;
  st.params_json["best_objective"] = best.objective;
  st.params_json["config"] = config_to_json(config);
  log_stage("optimize", "best objective " + std::to_string(best.objective));
  return st;
}

json fitted_to_json(const FittedParams& f) {
  return {{"params", params_to_json(f.params)},
          {"alphas", alphas_to_json(f.alphas)},
          {"sampled", f.sampled},
          {"delta_conf", f.delta_conf}};
}

FittedParams fitted_from_json(const json& j) {
  FittedParams f;
  try {
    f.params = params_from_json(j.at("params"));
    f.alphas = alphas_from_json(j.at("alphas"));
    f.sampled = j.at("sampled").get<std::vector<std::size_t>>();
    f.delta_conf = j.at("delta_conf").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("params.json: ") + e.what());
  }
  return f;
}

ClusterSolution run_cluster(const PreparedScene& scene, const FittedParams& fitted) {
  const auto& bundle = scene.bundle;
  for (auto i : fitted.sampled) {
    if (i >= bundle.vertices.size()) throw ValidationError("params.json: sampled index out of range for this scene");
  }
  std::vector<std::string> modalities;
  for (const auto& [name, w] : fitted.params.weights.weights) modalities.push_back(name);
  const auto problem = ClusteringProblem::fused(bundle, fitted.sampled, modalities, fitted.alphas, fitted.delta_conf);
  const auto sample_solution = problem.cluster(fitted.params);
  const FusedEdge edge(bundle, fitted.params.weights, fitted.alphas);
  log_stage("cluster", std::to_string(sample_solution.n_clusters) + " clusters on the sample");
  return scene_canonical(nn_extend(sample_solution, fitted.sampled, edge, bundle.vertices.size()));
}

void save_assignments(const ClusterSolution& solution, const fs::path& path) {
  write_tensor(path, Tensor::from({static_cast<std::uint64_t>(solution.size())}, solution.assignment));
}

ClusterSolution load_assignments(const fs::path& path, std::size_t expected_vertices) {
  const auto t = read_tensor(path);
  if (!t.holds<std::int32_t>() || t.ndim() != 1 || t.dims()[0] != expected_vertices) {
    throw ValidationError(path.string() + ": expected " + std::to_string(expected_vertices) + " i32 assignments");
  }
  const auto& a = t.values<std::int32_t>();
  std::vector<std::int64_t> raw(a.begin(), a.end());
  for (auto v : raw) {
    if (v < kNoise) throw ValidationError(path.string() + ": negative cluster id other than noise");
  }
  return canonicalize(raw, Backend::extended, json::object());
}

MapStage run_map(const SceneBundle& bundle, const PipelineConfig& config) {
  MapStage st{build_map(bundle, config.voxel_size.value_or(bundle.manifest.voxel_size)), {}};
  st.render = render(st.map, bundle);
  log_stage("map", std::to_string(st.map.size()) + " voxels");
  return st;
}

PseudoStage run_pseudolabel(const PreparedScene& scene, const MapStage& map, const ClusterSolution& solution,
                            const PipelineConfig& config) {
  PseudoStage st{{}, MergeResult{{}, ClassCatalog({}), {}}, {}};
  st.config.delta = config.delta ? *config.delta : default_delta(map.map, config.delta_percentile);
  st.config.merge_iou = config.merge_iou;
  st.config.ignore_id = config.ignore_id;
  if (config.ignore_id < scene.known_classes.size()) {
    throw ValidationError("config: pseudolabel.ignore_id collides with a known class id");
  }
  st.merged = merge_clusters(solution, map.render, scene.known_classes, st.config);
  st.frames = make_pseudolabels(scene.bundle, map.render, solution, st.merged, st.config);
  return st;
}

std::vector<std::int32_t> flatten_predictions(std::span<const PseudoLabelFrame> frames, std::uint16_t ignore_id) {
  std::vector<std::int32_t> out;
  for (const auto& f : frames) {
    for (auto v : f.labels) out.push_back(v == ignore_id ? kNoise : static_cast<std::int32_t>(v));
  }
  return out;
}

std::optional<OpenWorldMetrics> run_eval(const PreparedScene& scene, std::span<const std::int32_t> predictions) {
  if (!scene.bundle.has_labels()) return std::nullopt;
  if (predictions.size() != scene.bundle.vertices.size()) {
    throw ValidationError("eval: prediction count does not match the scene");
  }
  std::vector<std::int32_t> labels;
  labels.reserve(predictions.size());
  for (const auto& v : scene.bundle.vertices) labels.push_back(v.label);
  const ClassCatalog catalog(scene.known_classes);
  return evaluate_openworld(labels, predictions, catalog, scene.outlier_ids, scene.bundle.manifest.classes);
}

void run_pipeline(const fs::path& scene_dir, const fs::path& out, const PipelineConfig& config, std::uint64_t seed) {
  config.validate();
  const auto scene = prepare_scene(scene_dir, config);
  ensure_dir(out);
  const auto opt = run_optimize(scene, config, seed);
  write_json(out / "params.json", opt.params_json);
  const auto solution = run_cluster(scene, opt.fitted);
  finish_outputs(scene, solution, config, out, "scim", json::array());
}

BaselineMethod baseline_from_name(std::string_view name) {
  if (name == "nakajima") return BaselineMethod::nakajima;
  if (name == "uhlemeyer") return BaselineMethod::uhlemeyer;
  throw ValidationError("unknown baseline '" + std::string(name) + "' (expected nakajima or uhlemeyer)");
}

void run_baseline(BaselineMethod method, const fs::path& scene_dir, const fs::path& out, const PipelineConfig& config,
                  std::uint64_t seed) {
  config.validate();
  const auto scene = prepare_scene(scene_dir, config);
  const auto& bundle = scene.bundle;
  const double delta_conf = resolve_delta_conf(bundle, config);
  ClusterSolution solution;
  json params = {{"seed", seed}, {"delta_conf", delta_conf}, {"config", config_to_json(config)}};

  if (method == BaselineMethod::nakajima) {
    const auto sampled = subsample(bundle, subsample_spec(config, config.nakajima_frame_stride, seed));
    const auto h = certainty_entropy_proxy(bundle);
    auto graph = build_nakajima(bundle, sampled, h);
    const auto problem = ClusteringProblem::fixed(bundle, sampled, std::move(graph.fused), delta_conf);
    ClusteringParams base = base_params(config, {});
    base.backend = Backend::mcl;
    const auto space = make_param_space(Backend::mcl, {}, config.box, false);
    log_stage("baseline", "nakajima, " + std::to_string(sampled.size()) + " sampled vertices");
    const auto result = optimize(space, config.gp_config(stage_seed(seed, "optimizer")), [&](const DecodedPoint& p) {
      return objective(params_from_point(p, base), problem);
    });
    const auto best = params_from_point(result.best, base);
    const auto sample_solution = problem.cluster(best);
    const NakajimaEdge edge(bundle, h);
    solution = nn_extend(sample_solution, sampled, edge, bundle.vertices.size());
    params["method"] = "nakajima";
    params["params"] = params_to_json(best);
    params["sampled"] = sampled;
    params["trace"] = trace_to_json(result, space);
    params["best_index"] = result.trace.best_index;
    params["best_objective"] = result.trace.evaluations[result.trace.best_index].objective;
    params["notes"] = json::array({kNakajimaNote});
  } else {
    const auto sampled = subsample(bundle, subsample_spec(config, config.subsample_frame_stride, seed));
    std::vector<std::size_t> outliers, outlier_sample;
    for (std::size_t i = 0; i < bundle.vertices.size(); ++i) {
      if (static_cast<double>(bundle.vertices[i].cert) < config.outlier_cert_threshold) outliers.push_back(i);
    }
    std::set_intersection(sampled.begin(), sampled.end(), outliers.begin(), outliers.end(),
                          std::back_inserter(outlier_sample));
    if (outlier_sample.empty()) {
      throw ValidationError("uhlemeyer: empty outlier set (every sampled vertex has certainty >= " +
                            std::to_string(config.outlier_cert_threshold) + ")");
    }
    log_stage("baseline", "uhlemeyer, " + std::to_string(outlier_sample.size()) + " sampled outliers");
    const auto edge = make_uhlemeyer_edge(bundle, outlier_sample, config.pca_dim);
    const auto dist = edge_matrix(edge, outlier_sample);
    const auto sample_solution = dbscan(dist, config.dbscan);
    solution = nn_extend_subset(sample_solution, outlier_sample, edge, bundle.vertices.size(), outliers);
    ClusteringParams used = base_params(config, {});
    used.backend = Backend::dbscan;
    params["method"] = "uhlemeyer";
    params["params"] = params_to_json(used);
    params["sampled"] = outlier_sample;
    params["outlier_count"] = outliers.size();
    params["pca_dim"] = edge.projected().cols;
    params["notes"] = json::array({kUhlemeyerNote});
  }
  ensure_dir(out);
  write_json(out / "params.json", params);
  finish_outputs(scene, solution, config, out, params["method"].get<std::string>(), params["notes"]);
}

}  // namespace scim
