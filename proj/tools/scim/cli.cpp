#include "scim/cli.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scim/config.hpp"
#include "scim/errors.hpp"
#include "scim/pipeline.hpp"
#include "scim/synthgen.hpp"
#include "scim/tensorio.hpp"

namespace scim::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string scene;
  std::string out;
  std::string config;
  std::string params;
  std::string map;
  std::string assignments;
  std::string pred;
  std::string method;
  std::optional<std::uint64_t> seed;
};

PipelineConfig pipeline_config(const Options& o) {
  return o.config.empty() ? PipelineConfig{} : load_config(o.config);
}

std::uint64_t seed_of(const Options& o) { return o.seed.value_or(0); }

void ensure_parent(const fs::path& file) {
  if (!file.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  if (ec) throw IoError("cannot create " + file.parent_path().string() + ": " + ec.message());
}

void cmd_synth(const Options& o) {
  SynthConfig config = o.config.empty() ? SynthConfig{} : synth_config_from_json(read_json(o.config));
  if (o.seed) config.seed = *o.seed;
  generate(config, o.out);
}

void cmd_map(const Options& o) {
  const auto config = pipeline_config(o);
  const auto bundle = load_scene(o.scene);
  save_map(run_map(bundle, config).map, o.out);
}

void cmd_optimize(const Options& o) {
  const auto config = pipeline_config(o);
  const auto scene = prepare_scene(fs::path(o.scene), config);
  const auto st = run_optimize(scene, config, seed_of(o));
  ensure_parent(o.out);
  write_json(o.out, st.params_json);
}

void cmd_cluster(const Options& o) {
  const auto config = pipeline_config(o);
  const auto scene = prepare_scene(fs::path(o.scene), config);
  const auto fitted = fitted_from_json(read_json(o.params));
  ensure_parent(o.out);
  save_assignments(run_cluster(scene, fitted), o.out);
}

void cmd_pseudolabel(const Options& o) {
  const auto config = pipeline_config(o);
  const auto scene = prepare_scene(fs::path(o.scene), config);
  MapStage map{load_map(o.map), {}};
  map.render = render(map.map, scene.bundle);
  const auto solution = load_assignments(o.assignments, scene.bundle.vertices.size());
  const auto st = run_pseudolabel(scene, map, solution, config);
  save_pseudolabels(scene.bundle, st.frames, st.merged, st.config, o.out);
}

void cmd_eval(const Options& o) {
  const auto config = pipeline_config(o);
  const auto scene = prepare_scene(fs::path(o.scene), config);
  std::vector<std::int32_t> predictions;
  if (fs::is_directory(o.pred)) {
    predictions = load_pseudolabel_predictions(scene.bundle, o.pred);
  } else {
    const auto t = read_tensor(o.pred);
    if (!t.holds<std::int32_t>() || t.ndim() != 1) throw ValidationError(o.pred + ": expected a 1-D i32 tensor");
    predictions = t.values<std::int32_t>();
  }
  const auto metrics = run_eval(scene, predictions);
  if (!metrics) throw ValidationError("eval: the scene has no labels");
  ensure_parent(o.out);
  write_json(o.out, metrics_to_json(*metrics));
}

void cmd_pipeline(const Options& o) { run_pipeline(o.scene, o.out, pipeline_config(o), seed_of(o)); }

void cmd_baseline(const Options& o) {
  run_baseline(baseline_from_name(o.method), o.scene, o.out, pipeline_config(o), seed_of(o));
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"scim: open-world semantic pseudo-labels from multi-descriptor clustering"};
  app.require_subcommand(1);
  app.footer("Config file keys (JSON, every key optional) and defaults:\n" + config_help());

  Options o;
  std::function<void(const Options&)> action;

  auto add = [&](const std::string& name, const std::string& help, void (*fn)(const Options&)) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };
  auto scene_opt = [&](CLI::App* s) { s->add_option("--scene", o.scene, "Scene directory")->required(); };
  auto config_opt = [&](CLI::App* s) { s->add_option("--config", o.config, "Pipeline config JSON"); };
  auto seed_opt = [&](CLI::App* s) { s->add_option("--seed", o.seed, "Global seed (default 0)"); };

  auto* synth = add("synth", "Generate a synthetic scene", cmd_synth);
  synth->add_option("--config", o.config, "Synthetic scene config JSON");
  synth->add_option("--out", o.out, "Output scene directory")->required();
  seed_opt(synth);

  auto* map = add("map", "Build and dump the voxel map", cmd_map);
  scene_opt(map);
  map->add_option("--out", o.out, "Output map directory")->required();
  config_opt(map);

  auto* optimize = add("optimize", "Optimize clustering parameters, write params.json", cmd_optimize);
  scene_opt(optimize);
  optimize->add_option("--out", o.out, "Output params.json")->required();
  config_opt(optimize);
  seed_opt(optimize);

  auto* cluster = add("cluster", "Cluster and extend to all vertices, write an assignments tensor", cmd_cluster);
  scene_opt(cluster);
  cluster->add_option("--params", o.params, "params.json from optimize")->required();
  cluster->add_option("--out", o.out, "Output assignments .tns")->required();
  config_opt(cluster);

  auto* pseudo = add("pseudolabel", "Merge clusters with the map and write pseudo-labels", cmd_pseudolabel);
  scene_opt(pseudo);
  pseudo->add_option("--map", o.map, "Map directory from map")->required();
  pseudo->add_option("--assignments", o.assignments, "Assignments .tns from cluster")->required();
  pseudo->add_option("--out", o.out, "Output pseudo-label directory")->required();
  config_opt(pseudo);

  auto* eval = add("eval", "Evaluate predictions against scene labels, write metrics.json", cmd_eval);
  scene_opt(eval);
  eval->add_option("--pred", o.pred, "Pseudo-label directory or 1-D i32 prediction tensor")->required();
  eval->add_option("--out", o.out, "Output metrics.json")->required();
  config_opt(eval);

  auto* pipeline = add("pipeline", "Run every stage in order", cmd_pipeline);
  scene_opt(pipeline);
  pipeline->add_option("--out", o.out, "Output directory")->required();
  config_opt(pipeline);
  seed_opt(pipeline);

  auto* baseline = add("baseline", "Run a baseline edge function and backend", cmd_baseline);
  baseline->add_option("--method", o.method, "nakajima or uhlemeyer")
      ->required()
      ->check(CLI::IsMember({"nakajima", "uhlemeyer"}));
  scene_opt(baseline);
  baseline->add_option("--out", o.out, "Output directory")->required();
  config_opt(baseline);
  seed_opt(baseline);

  for (auto* sub : app.get_subcommands({})) sub->footer(app.get_footer());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    action(o);
    return 0;
  } catch (const IoError& e) {
    err << "scim: I/O error: " << e.what() << '\n';
    return 2;
  } catch (const TensorError& e) {
    err << "scim: " << (e.kind() == TensorError::Kind::io ? "I/O error: " : "error: ") << e.what() << '\n';
    return e.kind() == TensorError::Kind::io ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "scim: I/O error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "scim: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace scim::cli
