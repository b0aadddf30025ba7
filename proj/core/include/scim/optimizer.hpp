#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scim/clustering.hpp"
#include "scim/descriptors.hpp"
#include "scim/graph.hpp"
#include "scim/scene.hpp"

namespace scim {

// ---------------------------------------------------------------------------
// Search space

struct ParamDim {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool integer = false;
  /// Weight dimension: decoded jointly with the other simplex dims by normalizing their sum.
  bool simplex = false;
};

/// A decoded point: named values, weights already on the simplex, integers rounded.
struct DecodedPoint {
  std::vector<std::pair<std::string, double>> values;

  std::optional<double> get(std::string_view name) const;
};

struct ParamSpace {
  std::vector<ParamDim> dims;

  std::size_t size() const { return dims.size(); }
  void validate() const;
  /// Maps a point of the unit box to parameter values.
  DecodedPoint decode(std::span<const double> unit) const;
};

/// Weight dims are named "w:<modality>".
inline constexpr std::string_view kWeightPrefix = "w:";

// ---------------------------------------------------------------------------
// Gaussian-process surrogate and acquisition

struct GPConfig {
  double length_scale = 0.2;
  double noise_variance = 1e-4;
  double jitter = 1e-8;
  std::size_t init_random = 20;
  std::size_t candidates_per_step = 1024;
  std::size_t budget = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Matern-5/2 kernel with unit signal variance in terms of distance r.
double matern52(double r, double length_scale);

/// EI for maximization; sd == 0 gives max(mean - best, 0).
double expected_improvement(double mean, double sd, double best);

/// Exact GP regression with constant mean (sample mean) and signal variance
/// equal to the sample variance of the targets.
class GaussianProcess {
 public:
  GaussianProcess(const GPConfig& config, std::vector<std::vector<double>> x, std::vector<double> y);
  ~GaussianProcess();
  GaussianProcess(GaussianProcess&&) noexcept;
  GaussianProcess& operator=(GaussianProcess&&) noexcept;

  struct Prediction {
    double mean = 0.0;
    double sd = 0.0;
  };
  Prediction predict(std::span<const double> x) const;
  /// Posterior for many points at once (rows of `points`).
  std::vector<Prediction> predict_batch(const std::vector<std::vector<double>>& points) const;
  double signal_variance() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct TraceEntry {
  std::vector<double> theta;  // unit box
  double objective = 0.0;
  bool failed = false;
  std::string error;
  bool random_phase = true;
};

struct OptimizerTrace {
  std::vector<TraceEntry> evaluations;
  std::size_t best_index = 0;
};

struct OptimizeResult {
  DecodedPoint best;
  OptimizerTrace trace;
};

/// Objectives that throw are recorded as 0.0 with the failure flag.
using ObjectiveFn = std::function<double(const DecodedPoint&)>;

/// init_random seeded-uniform evaluations, then budget - init_random GP/EI
/// steps over candidates_per_step seeded-uniform candidates each.
OptimizeResult optimize(const ParamSpace& space, const GPConfig& config, const ObjectiveFn& objective);

// ---------------------------------------------------------------------------
// Clustering parameters and the confident-prediction objective

struct ClusteringParams {
  EdgeWeights weights;
  Backend backend = Backend::hdbscan;
  HDBSCANParams hdbscan;
  MCLParams mcl;
  DBSCANParams dbscan;
};

nlohmann::json params_to_json(const ClusteringParams& params);
ClusteringParams params_from_json(const nlohmann::json& j);

/// Overlays decoded values (weights, min_cluster_size, min_samples, inflation, eta, epsilon) on `base`.
ClusteringParams params_from_point(const DecodedPoint& point, const ClusteringParams& base);

ClusterSolution run_backend(const DistanceMatrix& dist, const ClusteringParams& params);

struct SearchBox {
  std::pair<double, double> min_cluster_size{5, 100};
  std::pair<double, double> min_samples{2, 50};
  std::pair<double, double> inflation{1.4, 4.0};
  std::pair<double, double> eta{1e-4, 0.05};
};

/// Weights for `modalities` (omitted when `with_weights` is false) followed
/// by the backend's hyperparameters.
ParamSpace make_param_space(Backend backend, std::span<const std::string> modalities, const SearchBox& box,
                            bool with_weights = true);

enum class NoiseMode { penalize, exclude };

/// mIoU between a clustering and the predicted classes of the confident
/// vertices, after an optimal (unconstrained) cluster<->class matching.
/// Under NoiseMode::penalize noise vertices stay in their class's union.
/// Throws ValidationError if no vertex is confident.
double prediction_miou(std::span<const std::int32_t> assignment, std::span<const std::uint16_t> preds,
                       std::span<const std::uint8_t> confident, NoiseMode mode = NoiseMode::penalize);

/// The subsampled graph context shared by all objective evaluations.
struct ClusteringProblem {
  const SceneBundle* bundle = nullptr;
  std::vector<std::size_t> sampled;
  std::vector<std::string> modalities;
  std::vector<DistanceMatrix> per_modality;  // raw distances over `sampled`
  HarmonizationFactors alphas;
  std::optional<DistanceMatrix> fixed_graph;  // used instead of fused distances when set
  std::vector<std::uint8_t> confident;        // over `sampled`, 1 = cert > delta_conf
  std::vector<std::uint16_t> preds;           // over `sampled`
  NoiseMode noise_mode = NoiseMode::penalize;

  static ClusteringProblem fused(const SceneBundle& bundle, std::vector<std::size_t> sampled,
                                 std::vector<std::string> modalities, HarmonizationFactors alphas,
                                 double delta_conf);
  static ClusteringProblem fixed(const SceneBundle& bundle, std::vector<std::size_t> sampled, DistanceMatrix graph,
                                 double delta_conf);

  DistanceMatrix graph_for(const ClusteringParams& params) const;
  ClusterSolution cluster(const ClusteringParams& params) const;
};

/// Clusters the sample with `params` and scores it with prediction_miou.
double objective(const ClusteringParams& params, const ClusteringProblem& problem);

}  // namespace scim
