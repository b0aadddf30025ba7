#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scim/scene.hpp"
#include "scim/solution.hpp"

namespace scim {

/// Label x cluster co-occurrence counts over vertices that are both labeled
/// (label >= 0) and assigned (cluster >= 0). Rows and columns are sorted ids.
struct ContingencyTable {
  std::vector<std::int32_t> label_ids;
  std::vector<std::int32_t> cluster_ids;
  std::vector<std::vector<std::int64_t>> counts;  // [label row][cluster column]
  /// Per cluster column: the label id the cluster is bound to, if supervised.
  std::vector<std::optional<std::int32_t>> supervised;

  std::int64_t total() const;
  std::size_t rows() const { return label_ids.size(); }
  std::size_t cols() const { return cluster_ids.size(); }
  /// True when column c may be matched to row l.
  bool allowed(std::size_t l, std::size_t c) const;
};

/// Throws ValidationError on a length mismatch. All columns start unsupervised.
ContingencyTable contingency(std::span<const std::int32_t> labels, std::span<const std::int32_t> clusters);

struct MatchResult {
  /// (label row, cluster column) pairs with a positive count.
  std::vector<std::pair<std::size_t, std::size_t>> matching;
  std::vector<std::size_t> unmatched_labels;
  std::vector<std::size_t> dropped_clusters;
  std::int64_t total = 0;

  std::optional<std::size_t> cluster_of(std::size_t label_row) const;
  std::optional<std::size_t> label_of(std::size_t cluster_col) const;
};

/// Minimum-cost perfect assignment on a square integer matrix (Kuhn-Munkres
/// with potentials). Returns column per row.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost);

/// Maximum-count label<->cluster matching where a supervised cluster may only
/// take its bound label or be dropped. Among optimal matchings the one that
/// is lexicographically smallest over labels in row order is returned, each
/// label preferring lower cluster columns and being unmatched last.
MatchResult constrained_hungarian(const ContingencyTable& table);

/// Intersection over union of the masks label == class_id and prediction == class_id.
/// nullopt when both masks are empty.
std::optional<double> iou_per_class(std::span<const std::int32_t> labels, std::span<const std::int32_t> predictions,
                                    std::int32_t class_id);

struct VMeasure {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v = 0.0;
};

/// Natural-log homogeneity, completeness and their harmonic mean over jointly
/// labeled and assigned vertices. Throws ValidationError if there are none.
VMeasure v_measure(std::span<const std::int32_t> labels, std::span<const std::int32_t> clusters);
double v_score(std::span<const std::int32_t> labels, std::span<const std::int32_t> clusters);

struct ClassIoU {
  std::int32_t class_id = 0;
  std::string name;
  std::optional<double> iou;
};

struct OpenWorldMetrics {
  std::vector<ClassIoU> per_class;           // classes present in the labels
  double miou = 0.0;                         // over labeled classes
  double miou_known = 0.0;                   // labeled classes that are not outlier classes
  std::vector<ClassIoU> outlier;             // per requested outlier class
  std::optional<double> mean_outlier_iou;
  double v_score = 0.0;
  ContingencyTable table;
  MatchResult match;
  std::vector<std::int32_t> relabeled;       // -1 noise/ignored, -2 unmatched cluster
};

inline constexpr std::int32_t kUnmatchedPrediction = -2;

/// Known-class predictions (id < known_count) are supervised clusters bound
/// to their own id; novel ids are free clusters. Predictions are relabeled
/// through the matching before IoUs are computed.
OpenWorldMetrics evaluate_openworld(std::span<const std::int32_t> labels, std::span<const std::int32_t> predictions,
                                    const ClassCatalog& catalog, std::span<const std::int32_t> outlier_classes,
                                    std::span<const std::string> class_names = {});

nlohmann::json metrics_to_json(const OpenWorldMetrics& metrics);

}  // namespace scim
