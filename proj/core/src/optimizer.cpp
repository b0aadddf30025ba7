#include "scim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "scim/errors.hpp"
#include "scim/evaluation.hpp"
#include "scim/rng.hpp"

namespace scim {

using nlohmann::json;

std::optional<double> DecodedPoint::get(std::string_view name) const {
  for (const auto& [k, v] : values) {
    if (k == name) return v;
  }
  return std::nullopt;
}

void ParamSpace::validate() const {
  if (dims.empty()) throw ValidationError("parameter space has no dimensions");
  for (const auto& d : dims) {
    if (!(d.lower < d.upper)) throw ValidationError("parameter '" + d.name + "' needs lower < upper");
  }
}

DecodedPoint ParamSpace::decode(std::span<const double> unit) const {
  if (unit.size() != dims.size()) throw ValidationError("decode: point dimension mismatch");
  DecodedPoint out;
  double weight_sum = 0.0;
  std::size_t weight_count = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k].simplex) {
      weight_sum += std::clamp(unit[k], 0.0, 1.0);
      ++weight_count;
    }
  }
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto& d = dims[k];
    const double u = std::clamp(unit[k], 0.0, 1.0);
    double value;
    if (d.simplex) {
      value = weight_sum < 1e-6 ? 1.0 / static_cast<double>(weight_count) : u / weight_sum;
    } else {
      value = d.lower + u * (d.upper - d.lower);
      if (d.integer) value = std::clamp(std::round(value), std::ceil(d.lower), std::floor(d.upper));
    }
    out.values.emplace_back(d.name, value);
  }
  return out;
}

void GPConfig::validate() const {
  if (budget < init_random) throw ValidationError("optimizer: budget must be >= init_random");
  if (init_random < 1) throw ValidationError("optimizer: init_random must be >= 1");
  if (!(length_scale > 0.0)) throw ValidationError("optimizer: length_scale must be positive");
  if (!(noise_variance >= 0.0) || !(jitter >= 0.0)) throw ValidationError("optimizer: negative noise");
  if (candidates_per_step < 1) throw ValidationError("optimizer: candidates_per_step must be >= 1");
}

double matern52(double r, double length_scale) {
  const double s = std::sqrt(5.0) * r / length_scale;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double expected_improvement(double mean, double sd, double best) {
  const double gain = mean - best;
  if (!(sd > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return gain * cdf + sd * pdf;
}

struct GaussianProcess::Impl {
  GPConfig config;
  Eigen::MatrixXd x;  // one observation per row
  double mean = 0.0;
  double signal = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd weights;  // K^-1 (y - mean)

  double kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    return signal * matern52((a - b).norm(), config.length_scale);
  }
};

GaussianProcess::GaussianProcess(const GPConfig& config, std::vector<std::vector<double>> x, std::vector<double> y)
    : impl_(std::make_unique<Impl>()) {
  if (x.empty() || x.size() != y.size()) throw ValidationError("gp: need matching non-empty x and y");
  auto& s = *impl_;
  s.config = config;
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(x.front().size());
  s.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) s.x(i, k) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  s.mean = yv.mean();
  const double var = (yv.array() - s.mean).square().mean();
  s.signal = var > 1e-12 ? var : 1.0;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      k(i, j) = k(j, i) = s.kernel(s.x.row(i), s.x.row(j));
    }
    k(i, i) += config.noise_variance + config.jitter;
  }
  s.llt.compute(k);
  if (s.llt.info() != Eigen::Success) throw ValidationError("gp: kernel matrix is not positive definite");
  s.weights = s.llt.solve((yv.array() - s.mean).matrix());
}

GaussianProcess::~GaussianProcess() = default;
GaussianProcess::GaussianProcess(GaussianProcess&&) noexcept = default;
GaussianProcess& GaussianProcess::operator=(GaussianProcess&&) noexcept = default;

double GaussianProcess::signal_variance() const { return impl_->signal; }

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> x) const {
  return predict_batch({std::vector<double>(x.begin(), x.end())}).front();
}

std::vector<GaussianProcess::Prediction> GaussianProcess::predict_batch(
    const std::vector<std::vector<double>>& points) const {
  const auto& s = *impl_;
  const auto n = s.x.rows();
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cross(n, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::RowVectorXd p = Eigen::Map<const Eigen::RowVectorXd>(points[static_cast<std::size_t>(c)].data(), s.x.cols());
    for (Eigen::Index i = 0; i < n; ++i) cross(i, c) = s.kernel(s.x.row(i), p);
  }
  const Eigen::MatrixXd v = s.llt.matrixL().solve(cross);
  std::vector<Prediction> out(points.size());
  for (Eigen::Index c = 0; c < m; ++c) {
    const double mean = s.mean + cross.col(c).dot(s.weights);
    const double var = std::max(s.signal - v.col(c).squaredNorm(), 0.0);
    out[static_cast<std::size_t>(c)] = {mean, std::sqrt(var)};
  }
  return out;
}

OptimizeResult optimize(const ParamSpace& space, const GPConfig& config, const ObjectiveFn& objective) {
  space.validate();
  config.validate();
  Rng rng(config.seed);
  const std::size_t dim = space.size();
  OptimizeResult result;
  auto& trace = result.trace;

  auto evaluate = [&](std::vector<double> theta, bool random_phase) {
    TraceEntry entry;
    entry.theta = std::move(theta);
    entry.random_phase = random_phase;
    try {
      entry.objective = objective(space.decode(entry.theta));
      if (!std::isfinite(entry.objective)) throw ValidationError("objective returned a non-finite value");
    } catch (const std::exception& e) {
      entry.objective = 0.0;
      entry.failed = true;
      entry.error = e.what();
    }
    if (trace.evaluations.empty() || entry.objective > trace.evaluations[trace.best_index].objective) {
      trace.best_index = trace.evaluations.size();
    }
    trace.evaluations.push_back(std::move(entry));
  };
  auto uniform_point = [&] {
    std::vector<double> p(dim);
    for (auto& x : p) x = rng.uniform();
    return p;
  };

  for (std::size_t i = 0; i < config.init_random; ++i) evaluate(uniform_point(), true);

  std::vector<std::vector<double>> candidates(config.candidates_per_step);
  while (trace.evaluations.size() < config.budget) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (const auto& e : trace.evaluations) {
      xs.push_back(e.theta);
      ys.push_back(e.objective);
    }
    const GaussianProcess gp(config, std::move(xs), std::move(ys));
    const double incumbent = trace.evaluations[trace.best_index].objective;
    for (auto& c : candidates) c = uniform_point();
    const auto posterior = gp.predict_batch(candidates);
    std::size_t pick = 0;
    double best_ei = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double ei = expected_improvement(posterior[c].mean, posterior[c].sd, incumbent);
      if (ei > best_ei) {
        best_ei = ei;
        pick = c;
      }
    }
    evaluate(candidates[pick], false);
  }
  result.best = space.decode(trace.evaluations[trace.best_index].theta);
  return result;
}

// ---------------------------------------------------------------------------

json params_to_json(const ClusteringParams& p) {
  json weights = json::object();
  for (const auto& [name, w] : p.weights.weights) weights[name] = w;
  json modalities = json::array();
  for (const auto& [name, w] : p.weights.weights) modalities.push_back(name);
  return {{"backend", std::string(backend_name(p.backend))},
          {"modalities", modalities},
          {"weights", weights},
          {"hdbscan", {{"min_cluster_size", p.hdbscan.min_cluster_size}, {"min_samples", p.hdbscan.min_samples}}},
          {"mcl",
           {{"inflation", p.mcl.inflation},
            {"eta", p.mcl.prune_threshold_eta},
            {"max_iters", p.mcl.max_iters},
            {"kernel_bandwidth", p.mcl.kernel_bandwidth}}},
          {"dbscan", {{"epsilon", p.dbscan.epsilon}, {"min_samples", p.dbscan.min_samples}}}};
}

ClusteringParams params_from_json(const json& j) {
  ClusteringParams p;
  try {
    const auto backend = j.at("backend").get<std::string>();
    if (backend == "hdbscan") p.backend = Backend::hdbscan;
    else if (backend == "mcl") p.backend = Backend::mcl;
    else if (backend == "dbscan") p.backend = Backend::dbscan;
    else throw ValidationError("params: unknown backend '" + backend + "'");
    for (const auto& name : j.at("modalities")) {
      const auto n = name.get<std::string>();
      p.weights.weights.emplace_back(n, j.at("weights").at(n).get<double>());
    }
    const auto& h = j.at("hdbscan");
    p.hdbscan = {h.at("min_cluster_size").get<std::size_t>(), h.at("min_samples").get<std::size_t>()};
    const auto& m = j.at("mcl");
    p.mcl = {m.at("inflation").get<double>(), m.at("eta").get<double>(), m.at("max_iters").get<std::size_t>(),
             m.at("kernel_bandwidth").get<double>()};
    const auto& d = j.at("dbscan");
    p.dbscan = {d.at("epsilon").get<double>(), d.at("min_samples").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("params: ") + e.what());
  }
  return p;
}

ClusteringParams params_from_point(const DecodedPoint& point, const ClusteringParams& base) {
  ClusteringParams p = base;
  EdgeWeights weights;
  for (const auto& [name, value] : point.values) {
    if (name.starts_with(kWeightPrefix)) {
      weights.weights.emplace_back(name.substr(kWeightPrefix.size()), value);
    } else if (name == "min_cluster_size") {
      p.hdbscan.min_cluster_size = static_cast<std::size_t>(value);
    } else if (name == "min_samples") {
      p.hdbscan.min_samples = static_cast<std::size_t>(value);
    } else if (name == "inflation") {
      p.mcl.inflation = value;
    } else if (name == "eta") {
      p.mcl.prune_threshold_eta = value;
    } else if (name == "epsilon") {
      p.dbscan.epsilon = value;
    } else {
      throw ValidationError("unknown parameter '" + name + "'");
    }
  }
  if (!weights.weights.empty()) p.weights = std::move(weights);
  return p;
}

ClusterSolution run_backend(const DistanceMatrix& dist, const ClusteringParams& params) {
  switch (params.backend) {
    case Backend::hdbscan: return hdbscan(dist, params.hdbscan);
    case Backend::dbscan: return dbscan(dist, params.dbscan);
    case Backend::mcl: return mcl(dist, params.mcl);
    case Backend::extended: break;
  }
  throw ValidationError("run_backend: not a clustering backend");
}

ParamSpace make_param_space(Backend backend, std::span<const std::string> modalities, const SearchBox& box,
                            bool with_weights) {
  ParamSpace space;
  if (with_weights) {
    for (const auto& m : modalities) space.dims.push_back({std::string(kWeightPrefix) + m, 0.0, 1.0, false, true});
  }
  switch (backend) {
    case Backend::hdbscan:
      space.dims.push_back({"min_cluster_size", box.min_cluster_size.first, box.min_cluster_size.second, true, false});
      space.dims.push_back({"min_samples", box.min_samples.first, box.min_samples.second, true, false});
      break;
    case Backend::mcl:
      space.dims.push_back({"inflation", box.inflation.first, box.inflation.second, false, false});
      space.dims.push_back({"eta", box.eta.first, box.eta.second, false, false});
      break;
    case Backend::dbscan:
    case Backend::extended:
      break;
  }
  return space;
}

double prediction_miou(std::span<const std::int32_t> assignment, std::span<const std::uint16_t> preds,
                       std::span<const std::uint8_t> confident, NoiseMode mode) {
  if (assignment.size() != preds.size() || confident.size() != preds.size()) {
    throw ValidationError("objective: length mismatch");
  }
  std::vector<std::int32_t> classes;
  std::vector<std::int32_t> clusters;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!confident[i]) continue;
    if (mode == NoiseMode::exclude && assignment[i] < 0) continue;
    classes.push_back(preds[i]);
    clusters.push_back(assignment[i]);
  }
  if (classes.empty()) {
    throw ValidationError("objective: no confident vertices in the sample; lower delta_conf");
  }
  const auto table = contingency(classes, clusters);
  const auto match = constrained_hungarian(table);

  std::vector<std::int32_t> class_ids = classes;
  std::sort(class_ids.begin(), class_ids.end());
  class_ids.erase(std::unique(class_ids.begin(), class_ids.end()), class_ids.end());
  std::vector<std::int64_t> col_total(table.cols(), 0);
  for (const auto& row : table.counts) {
    for (std::size_t c = 0; c < row.size(); ++c) col_total[c] += row[c];
  }
  double sum = 0.0;
  for (auto cls : class_ids) {
    const auto class_total = static_cast<std::int64_t>(std::count(classes.begin(), classes.end(), cls));
    const auto row_it = std::find(table.label_ids.begin(), table.label_ids.end(), cls);
    if (row_it == table.label_ids.end()) continue;  // every member is noise: IoU 0
    const auto row = static_cast<std::size_t>(row_it - table.label_ids.begin());
    if (auto col = match.cluster_of(row)) {
      const auto inter = table.counts[row][*col];
      sum += static_cast<double>(inter) / static_cast<double>(class_total + col_total[*col] - inter);
    }
  }
  return sum / static_cast<double>(class_ids.size());
}

ClusteringProblem ClusteringProblem::fused(const SceneBundle& bundle, std::vector<std::size_t> sampled,
                                           std::vector<std::string> modalities, HarmonizationFactors alphas,
                                           double delta_conf) {
  ClusteringProblem p;
  p.bundle = &bundle;
  p.sampled = std::move(sampled);
  p.modalities = std::move(modalities);
  p.alphas = std::move(alphas);
  for (const auto& m : p.modalities) p.per_modality.push_back(pairwise_distances(bundle.modality(m), p.sampled));
  for (auto i : p.sampled) {
    p.confident.push_back(static_cast<double>(bundle.vertices[i].cert) > delta_conf ? 1 : 0);
    p.preds.push_back(bundle.vertices[i].pred);
  }
  return p;
}

ClusteringProblem ClusteringProblem::fixed(const SceneBundle& bundle, std::vector<std::size_t> sampled,
                                           DistanceMatrix graph, double delta_conf) {
  ClusteringProblem p;
  p.bundle = &bundle;
  p.sampled = std::move(sampled);
  p.fixed_graph = std::move(graph);
  for (auto i : p.sampled) {
    p.confident.push_back(static_cast<double>(bundle.vertices[i].cert) > delta_conf ? 1 : 0);
    p.preds.push_back(bundle.vertices[i].pred);
  }
  return p;
}

DistanceMatrix ClusteringProblem::graph_for(const ClusteringParams& params) const {
  if (fixed_graph) return *fixed_graph;
  // Weights are matched to the precomputed matrices by modality name.
  EdgeWeights ordered;
  for (const auto& m : modalities) {
    double w = 0.0;
    for (const auto& [name, value] : params.weights.weights) {
      if (name == m) w = value;
    }
    ordered.weights.emplace_back(m, w);
  }
  return combine_fused(per_modality, ordered, alphas);
}

ClusterSolution ClusteringProblem::cluster(const ClusteringParams& params) const {
  return run_backend(graph_for(params), params);
}

double objective(const ClusteringParams& params, const ClusteringProblem& problem) {
  if (std::none_of(problem.confident.begin(), problem.confident.end(), [](std::uint8_t b) { return b != 0; })) {
    throw ValidationError("objective: no confident vertices in the sample; lower delta_conf");
  }
  const auto solution = problem.cluster(params);
  return prediction_miou(solution.assignment, problem.preds, problem.confident, problem.noise_mode);
}

}  // namespace scim
