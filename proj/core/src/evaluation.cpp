#include "scim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "scim/errors.hpp"

namespace scim {

std::int64_t ContingencyTable::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

bool ContingencyTable::allowed(std::size_t l, std::size_t c) const {
  return !supervised[c] || *supervised[c] == label_ids[l];
}

ContingencyTable contingency(std::span<const std::int32_t> labels, std::span<const std::int32_t> clusters) {
  if (labels.size() != clusters.size()) throw ValidationError("contingency: length mismatch");
  std::map<std::int32_t, std::size_t> label_row;
  std::map<std::int32_t, std::size_t> cluster_col;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || clusters[i] < 0) continue;
    label_row.emplace(labels[i], 0);
    cluster_col.emplace(clusters[i], 0);
  }
  ContingencyTable t;
  for (auto& [id, row] : label_row) {
    row = t.label_ids.size();
    t.label_ids.push_back(id);
  }
  for (auto& [id, col] : cluster_col) {
    col = t.cluster_ids.size();
    t.cluster_ids.push_back(id);
  }
  t.counts.assign(t.label_ids.size(), std::vector<std::int64_t>(t.cluster_ids.size(), 0));
  t.supervised.assign(t.cluster_ids.size(), std::nullopt);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || clusters[i] < 0) continue;
    ++t.counts[label_row[labels[i]]][cluster_col[clusters[i]]];
  }
  return t;
}

std::optional<std::size_t> MatchResult::cluster_of(std::size_t label_row) const {
  for (const auto& [l, c] : matching) {
    if (l == label_row) return c;
  }
  return std::nullopt;
}

std::optional<std::size_t> MatchResult::label_of(std::size_t cluster_col) const {
  for (const auto& [l, c] : matching) {
    if (c == cluster_col) return l;
  }
  return std::nullopt;
}

namespace {

struct AssignmentSolution {
  std::vector<std::size_t> col_of_row;
  std::vector<std::int64_t> u;  // row potentials, 1-based
  std::vector<std::int64_t> v;  // column potentials, 1-based
  std::int64_t cost = 0;
};

// Shortest augmenting path Hungarian algorithm; on return
// cost[i][j] - u[i] - v[j] >= 0 with equality on assigned cells.
AssignmentSolution hungarian_min(const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = cost.size();
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  AssignmentSolution s;
  s.u.assign(n + 1, 0);
  s.v.assign(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - s.u[i0] - s.v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          s.u[p[j]] += delta;
          s.v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  s.col_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) s.col_of_row[p[j] - 1] = j - 1;
  }
  for (std::size_t i = 0; i < n; ++i) s.cost += cost[i][s.col_of_row[i]];
  return s;
}

constexpr std::int64_t kFree = -1;
constexpr std::int64_t kForcedUnmatched = -2;

}  // namespace

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost) {
  for (const auto& row : cost) {
    if (row.size() != cost.size()) throw ValidationError("solve_assignment: matrix must be square");
  }
  return hungarian_min(cost).col_of_row;
}

MatchResult constrained_hungarian(const ContingencyTable& table) {
  const std::size_t rows = table.rows();
  const std::size_t cols = table.cols();
  const std::size_t n = rows + cols;
  // Padding with a dummy column per label and a dummy row per cluster lets
  // any label stay unmatched and any cluster be dropped.
  const std::int64_t forbidden = table.total() + 1;
  std::vector<std::int64_t> forced(rows, kFree);

  auto build = [&] {
    std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t l = 0; l < rows; ++l) {
      for (std::size_t c = 0; c < cols; ++c) {
        const bool ok = table.allowed(l, c) && (forced[l] == kFree || forced[l] == static_cast<std::int64_t>(c));
        cost[l][c] = ok ? -table.counts[l][c] : forbidden;
      }
      if (forced[l] >= 0) {
        for (std::size_t c = cols; c < n; ++c) cost[l][c] = forbidden;
      }
    }
    return cost;
  };

  auto cost = build();
  auto best = hungarian_min(cost);
  const std::int64_t optimum = -best.cost;

  for (std::size_t l = 0; l < rows; ++l) {
    const std::size_t current = best.col_of_row[l];
    const bool current_real = current < cols && table.counts[l][current] > 0;
    // Only columns below the current choice can win the tie-break, and only
    // those with zero reduced cost can belong to an optimal assignment.
    const std::size_t limit = current_real ? current : cols;
    bool committed = false;
    for (std::size_t c = 0; c < limit && !committed; ++c) {
      if (!table.allowed(l, c) || table.counts[l][c] <= 0) continue;
      if (cost[l][c] - best.u[l + 1] - best.v[c + 1] != 0) continue;
      forced[l] = static_cast<std::int64_t>(c);
      auto trial_cost = build();
      auto trial = hungarian_min(trial_cost);
      if (-trial.cost == optimum) {
        committed = true;
        cost = std::move(trial_cost);
        best = std::move(trial);
      } else {
        forced[l] = kFree;
      }
    }
    if (!committed) {
      forced[l] = current_real ? static_cast<std::int64_t>(current) : kForcedUnmatched;
      cost = build();
      best = hungarian_min(cost);
    }
  }

  MatchResult result;
  result.total = optimum;
  std::vector<bool> cluster_used(cols, false);
  for (std::size_t l = 0; l < rows; ++l) {
    const std::size_t c = best.col_of_row[l];
    if (c < cols && table.counts[l][c] > 0 && table.allowed(l, c)) {
      result.matching.emplace_back(l, c);
      cluster_used[c] = true;
    } else {
      result.unmatched_labels.push_back(l);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!cluster_used[c]) result.dropped_clusters.push_back(c);
  }
  return result;
}

std::optional<double> iou_per_class(std::span<const std::int32_t> labels, std::span<const std::int32_t> predictions,
                                    std::int32_t class_id) {
  if (labels.size() != predictions.size()) throw ValidationError("iou: length mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool a = labels[i] == class_id;
    const bool b = predictions[i] == class_id;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

VMeasure v_measure(std::span<const std::int32_t> labels, std::span<const std::int32_t> clusters) {
  const auto t = contingency(labels, clusters);
  const double total = static_cast<double>(t.total());
  if (total == 0.0) throw ValidationError("v_score: no labeled and assigned vertices");
  std::vector<double> row_sum(t.rows(), 0.0), col_sum(t.cols(), 0.0);
  for (std::size_t l = 0; l < t.rows(); ++l) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      row_sum[l] += static_cast<double>(t.counts[l][c]);
      col_sum[c] += static_cast<double>(t.counts[l][c]);
    }
  }
  auto entropy = [&](const std::vector<double>& sums) {
    double h = 0.0;
    for (double s : sums) {
      if (s > 0.0) h -= s / total * std::log(s / total);
    }
    return h;
  };
  const double h_label = entropy(row_sum);
  const double h_cluster = entropy(col_sum);
  double h_label_given_cluster = 0.0;
  double h_cluster_given_label = 0.0;
  for (std::size_t l = 0; l < t.rows(); ++l) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const double n = static_cast<double>(t.counts[l][c]);
      if (n == 0.0) continue;
      h_label_given_cluster -= n / total * std::log(n / col_sum[c]);
      h_cluster_given_label -= n / total * std::log(n / row_sum[l]);
    }
  }
  VMeasure m;
  m.homogeneity = h_label == 0.0 ? 1.0 : 1.0 - h_label_given_cluster / h_label;
  m.completeness = h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_label / h_cluster;
  const double s = m.homogeneity + m.completeness;
  m.v = s == 0.0 ? 0.0 : 2.0 * m.homogeneity * m.completeness / s;
  return m;
}

double v_score(std::span<const std::int32_t> labels, std::span<const std::int32_t> clusters) {
  return v_measure(labels, clusters).v;
}

OpenWorldMetrics evaluate_openworld(std::span<const std::int32_t> labels, std::span<const std::int32_t> predictions,
                                    const ClassCatalog& catalog, std::span<const std::int32_t> outlier_classes,
                                    std::span<const std::string> class_names) {
  if (labels.size() != predictions.size()) throw ValidationError("evaluate: length mismatch");
  OpenWorldMetrics m;
  m.table = contingency(labels, predictions);
  for (std::size_t c = 0; c < m.table.cols(); ++c) {
    const auto id = m.table.cluster_ids[c];
    if (catalog.is_known(id)) m.table.supervised[c] = id;
  }
  m.match = constrained_hungarian(m.table);

  std::map<std::int32_t, std::int32_t> relabel;
  for (const auto& [l, c] : m.match.matching) relabel[m.table.cluster_ids[c]] = m.table.label_ids[l];
  std::vector<std::int32_t> lab;
  lab.reserve(labels.size());
  m.relabeled.assign(labels.size(), kNoise);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] >= 0) {
      auto it = relabel.find(predictions[i]);
      m.relabeled[i] = it == relabel.end() ? kUnmatchedPrediction : it->second;
    }
  }
  std::vector<std::int32_t> sub_labels;
  std::vector<std::int32_t> sub_pred;
  std::vector<std::int32_t> assigned_labels;
  std::vector<std::int32_t> assigned_pred;
  std::vector<std::int32_t> present;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    sub_labels.push_back(labels[i]);
    sub_pred.push_back(m.relabeled[i]);
    present.push_back(labels[i]);
    if (predictions[i] >= 0) {
      assigned_labels.push_back(labels[i]);
      assigned_pred.push_back(predictions[i]);
    }
  }
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());

  auto name_of = [&](std::int32_t id) {
    if (id >= 0 && static_cast<std::size_t>(id) < class_names.size()) return class_names[static_cast<std::size_t>(id)];
    return catalog.name(id);
  };
  auto is_outlier = [&](std::int32_t id) {
    return std::find(outlier_classes.begin(), outlier_classes.end(), id) != outlier_classes.end();
  };

  double sum = 0.0, sum_known = 0.0;
  std::size_t count = 0, count_known = 0;
  for (auto id : present) {
    ClassIoU entry{id, name_of(id), iou_per_class(sub_labels, sub_pred, id)};
    if (entry.iou) {
      sum += *entry.iou;
      ++count;
      if (!is_outlier(id)) {
        sum_known += *entry.iou;
        ++count_known;
      }
    }
    m.per_class.push_back(std::move(entry));
  }
  m.miou = count ? sum / static_cast<double>(count) : 0.0;
  m.miou_known = count_known ? sum_known / static_cast<double>(count_known) : 0.0;

  double out_sum = 0.0;
  std::size_t out_count = 0;
  for (auto o : outlier_classes) {
    ClassIoU entry{o, name_of(o), std::nullopt};
    if (std::binary_search(present.begin(), present.end(), o)) {
      entry.iou = iou_per_class(sub_labels, sub_pred, o).value_or(0.0);
      out_sum += *entry.iou;
      ++out_count;
    }
    m.outlier.push_back(std::move(entry));
  }
  if (out_count) m.mean_outlier_iou = out_sum / static_cast<double>(out_count);
  m.v_score = assigned_labels.empty() ? 0.0 : v_score(assigned_labels, assigned_pred);
  return m;
}

nlohmann::json metrics_to_json(const OpenWorldMetrics& m) {
  using nlohmann::json;
  auto iou_json = [](const std::vector<ClassIoU>& list) {
    json arr = json::array();
    for (const auto& e : list) {
      arr.push_back({{"class_id", e.class_id}, {"name", e.name}, {"iou", e.iou ? json(*e.iou) : json(nullptr)}});
    }
    return arr;
  };
  json matching = json::array();
  for (const auto& [l, c] : m.match.matching) {
    matching.push_back({{"label", m.table.label_ids[l]},
                        {"prediction", m.table.cluster_ids[c]},
                        {"count", m.table.counts[l][c]}});
  }
  json dropped = json::array();
  for (auto c : m.match.dropped_clusters) dropped.push_back(m.table.cluster_ids[c]);
  return {{"per_class_iou", iou_json(m.per_class)},
          {"miou", m.miou},
          {"miou_known", m.miou_known},
          {"outlier_iou", iou_json(m.outlier)},
          {"mean_outlier_iou", m.mean_outlier_iou ? json(*m.mean_outlier_iou) : json(nullptr)},
          {"v_score", m.v_score},
          {"matching", matching},
          {"dropped_predictions", dropped},
          {"table", {{"label_ids", m.table.label_ids}, {"prediction_ids", m.table.cluster_ids},
                     {"counts", m.table.counts}}}};
}

}  // namespace scim
