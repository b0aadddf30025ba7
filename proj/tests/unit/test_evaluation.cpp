#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "scim/errors.hpp"
#include "scim/evaluation.hpp"
#include "support/fixtures.hpp"

using namespace scim;

namespace {

ContingencyTable table_from(const std::vector<std::vector<std::int64_t>>& counts) {
  // Expand counts into per-vertex labels and clusters.
  std::vector<std::int32_t> labels, clusters;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    for (std::size_t c = 0; c < counts[l].size(); ++c) {
      for (std::int64_t k = 0; k < counts[l][c]; ++k) {
        labels.push_back(static_cast<std::int32_t>(l));
        clusters.push_back(static_cast<std::int32_t>(c));
      }
    }
  }
  return contingency(labels, clusters);
}

ContingencyTable raw_table(const std::vector<std::vector<std::int64_t>>& counts) {
  ContingencyTable t;
  for (std::size_t l = 0; l < counts.size(); ++l) t.label_ids.push_back(static_cast<std::int32_t>(l));
  for (std::size_t c = 0; c < counts[0].size(); ++c) t.cluster_ids.push_back(static_cast<std::int32_t>(c));
  t.counts = counts;
  t.supervised.assign(t.cluster_ids.size(), std::nullopt);
  return t;
}

std::vector<int> cluster_of_label(const MatchResult& m, std::size_t rows) {
  std::vector<int> out(rows, -1);
  for (const auto& [l, c] : m.matching) out[l] = static_cast<int>(c);
  return out;
}

std::vector<std::int32_t> ints(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("contingency counts jointly labeled and assigned vertices") {
  const auto labels = ints({0, 0, 1, 1, -1, 2, 2});
  const auto clusters = ints({5, 5, 5, 7, 7, -1, 7});
  const auto t = contingency(labels, clusters);
  CHECK(t.label_ids == ints({0, 1, 2}));
  CHECK(t.cluster_ids == ints({5, 7}));
  CHECK(t.counts == std::vector<std::vector<std::int64_t>>{{2, 0}, {1, 1}, {0, 1}});
  CHECK(t.total() == 5);
  CHECK_THROWS_AS(contingency(ints({0}), ints({0, 1})), ValidationError);
}

TEST_CASE("contingency matches a direct count") {
  Rng rng(40);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<std::int32_t> labels(n), clusters(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<std::int32_t>(rng.below(6)) - 1;
      clusters[i] = static_cast<std::int32_t>(rng.below(8)) - 1;
    }
    const auto tab = contingency(labels, clusters);
    for (std::size_t l = 0; l < tab.rows(); ++l) {
      for (std::size_t c = 0; c < tab.cols(); ++c) {
        std::int64_t k = 0;
        for (std::size_t i = 0; i < n; ++i) k += labels[i] == tab.label_ids[l] && clusters[i] == tab.cluster_ids[c];
        CHECK(tab.counts[l][c] == k);
      }
    }
  }
}

TEST_CASE("assignment solver reaches the permutation optimum") {
  Rng rng(41);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(7);
    std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n));
    for (auto& row : cost) {
      for (auto& x : row) x = static_cast<std::int64_t>(rng.below(50)) - 20;
    }
    const auto cols = solve_assignment(cost);
    std::vector<bool> seen(n, false);
    std::int64_t total = 0;
    for (std::size_t r = 0; r < n; ++r) {
      REQUIRE(cols[r] < n);
      CHECK_FALSE(seen[cols[r]]);
      seen[cols[r]] = true;
      total += cost[r][cols[r]];
    }
    CHECK(total == oracle::brute_force_assignment_cost(cost));
  }
}

TEST_CASE("unconstrained matching examples") {
  auto m = constrained_hungarian(raw_table({{5, 0}, {0, 7}}));
  CHECK(m.total == 12);
  CHECK(cluster_of_label(m, 2) == std::vector<int>{0, 1});

  m = constrained_hungarian(raw_table({{3, 3}, {0, 1}}));
  CHECK(m.total == 4);
  CHECK(cluster_of_label(m, 2) == std::vector<int>{0, 1});

  // Ties break toward lower clusters for earlier labels.
  m = constrained_hungarian(raw_table({{2, 2}, {2, 2}}));
  CHECK(m.total == 4);
  CHECK(cluster_of_label(m, 2) == std::vector<int>{0, 1});

  // More clusters than labels: the spare cluster is dropped.
  m = constrained_hungarian(raw_table({{4, 1, 0}}));
  CHECK(cluster_of_label(m, 1) == std::vector<int>{0});
  CHECK(m.dropped_clusters == std::vector<std::size_t>{1, 2});
}

TEST_CASE("a bound cluster may only take its own label") {
  auto t = raw_table({{5, 0}, {0, 7}});
  t.supervised[0] = 1;
  const auto m = constrained_hungarian(t);
  CHECK(m.total == 7);
  CHECK(cluster_of_label(m, 2) == std::vector<int>{-1, 1});
  CHECK(m.unmatched_labels == std::vector<std::size_t>{0});
  CHECK(m.dropped_clusters == std::vector<std::size_t>{0});
}

TEST_CASE("zero-count pairs are never reported as matches") {
  const auto m = constrained_hungarian(raw_table({{0, 0}, {0, 3}}));
  CHECK(m.total == 3);
  CHECK(cluster_of_label(m, 2) == std::vector<int>{-1, 1});
}

TEST_CASE("constrained matching equals brute-force enumeration") {
  Rng rng(42);
  std::size_t unique_cases = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t rows = 1 + rng.below(7);
    const std::size_t cols = 1 + rng.below(7);
    std::vector<std::vector<std::int64_t>> counts(rows, std::vector<std::int64_t>(cols));
    for (auto& row : counts) {
      for (auto& x : row) x = rng.uniform() < 0.3 ? 0 : static_cast<std::int64_t>(rng.below(30));
    }
    auto table = raw_table(counts);
    std::vector<std::optional<int>> bound(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng.uniform() < 0.4) {
        bound[c] = static_cast<int>(rng.below(rows));
        table.supervised[c] = bound[c];
      }
    }
    const auto m = constrained_hungarian(table);
    const auto expected = oracle::brute_force_matching(counts, bound);
    CHECK(m.total == expected.value);
    std::int64_t recomputed = 0;
    std::vector<bool> used(cols, false);
    for (const auto& [l, c] : m.matching) {
      CHECK(table.allowed(l, c));
      CHECK(counts[l][c] > 0);
      CHECK_FALSE(used[c]);
      used[c] = true;
      recomputed += counts[l][c];
    }
    CHECK(recomputed == m.total);
    CHECK(m.unmatched_labels.size() + m.matching.size() == rows);
    CHECK(m.dropped_clusters.size() + m.matching.size() == cols);
    if (expected.unique) {
      ++unique_cases;
      CHECK(cluster_of_label(m, rows) == expected.cluster_of_label);
    }
  }
  CHECK(unique_cases > 100);
}

TEST_CASE("all clusters bound to distinct labels give the diagonal") {
  auto t = raw_table({{3, 9, 0}, {8, 2, 1}, {0, 0, 4}});
  for (std::size_t c = 0; c < 3; ++c) t.supervised[c] = static_cast<std::int32_t>(c);
  const auto m = constrained_hungarian(t);
  CHECK(m.total == 9);
  CHECK(cluster_of_label(m, 3) == std::vector<int>{0, 1, 2});
}

TEST_CASE("iou examples") {
  CHECK(*iou_per_class(ints({0, 0, 1, 1}), ints({0, 1, 1, 1}), 0) == doctest::Approx(0.5));
  CHECK(*iou_per_class(ints({0, 0, 1, 1}), ints({0, 1, 1, 1}), 1) == doctest::Approx(2.0 / 3.0));
  CHECK(*iou_per_class(ints({2, 2}), ints({2, 2}), 2) == 1.0);
  CHECK(*iou_per_class(ints({2, 2}), ints({0, 0}), 2) == 0.0);
  CHECK_FALSE(iou_per_class(ints({0, 1}), ints({0, 1}), 5).has_value());
}

TEST_CASE("v-measure canonical cases") {
  CHECK(v_score(ints({0, 0, 1, 1}), ints({3, 3, 8, 8})) == doctest::Approx(1.0));
  CHECK(v_score(ints({0, 0, 1, 1}), ints({0, 1, 0, 1})) == doctest::Approx(0.0));
  CHECK(v_score(ints({0, 0, 1, 1}), ints({0, 1, 2, 3})) == doctest::Approx(2.0 / 3.0));
  const auto m = v_measure(ints({0, 0, 1, 1}), ints({0, 1, 2, 3}));
  CHECK(m.homogeneity == doctest::Approx(1.0));
  CHECK(m.completeness == doctest::Approx(0.5));
  CHECK(v_score(ints({0, 0, 0}), ints({1, 1, 1})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(v_score(ints({-1, 0}), ints({0, -1})), ValidationError);
}

TEST_CASE("v-measure equals the entropy oracle") {
  Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(150);
    std::vector<std::int32_t> labels(n), clusters(n);
    std::vector<int> li(n), ci(n);
    const std::size_t lk = 1 + rng.below(6), ck = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      li[i] = labels[i] = static_cast<std::int32_t>(rng.below(lk));
      ci[i] = clusters[i] = static_cast<std::int32_t>(rng.below(ck));
    }
    const auto got = v_measure(labels, clusters);
    const auto want = oracle::v_measure(li, ci);
    CHECK(std::abs(got.homogeneity - want.h) <= 1e-9);
    CHECK(std::abs(got.completeness - want.c) <= 1e-9);
    CHECK(std::abs(got.v - want.v) <= 1e-9);
    // Symmetric in its arguments and invariant under duplicating every vertex.
    CHECK(std::abs(v_score(clusters, labels) - got.v) <= 1e-9);
    auto l2 = labels, c2 = clusters;
    l2.insert(l2.end(), labels.begin(), labels.end());
    c2.insert(c2.end(), clusters.begin(), clusters.end());
    CHECK(std::abs(v_score(l2, c2) - got.v) <= 1e-9);
  }
}

TEST_CASE("open-world evaluation on a small scene") {
  ClassCatalog cat({"a", "b"});
  const auto n1 = cat.add_novel();
  const auto n2 = cat.add_novel();
  // Class 2 is the outlier class; a novel id covers it, a second novel id is spurious.
  const auto labels = ints({0, 0, 0, 1, 1, 1, 2, 2, 2, 2, -1});
  const std::vector<std::int32_t> preds{0, 0, 1, 1, 1, 1, n1, n1, n1, n2, 0};
  const std::vector<std::int32_t> outliers{2};
  const auto m = evaluate_openworld(labels, preds, cat, outliers, std::vector<std::string>{"a", "b", "x"});
  REQUIRE(m.per_class.size() == 3);
  CHECK(*m.per_class[0].iou == doctest::Approx(2.0 / 3.0));
  CHECK(*m.per_class[1].iou == doctest::Approx(3.0 / 4.0));
  CHECK(*m.per_class[2].iou == doctest::Approx(3.0 / 4.0));
  CHECK(m.per_class[2].name == "x");
  CHECK(m.miou == doctest::Approx((2.0 / 3.0 + 0.75 + 0.75) / 3.0));
  CHECK(m.miou_known == doctest::Approx((2.0 / 3.0 + 0.75) / 2.0));
  CHECK(*m.mean_outlier_iou == doctest::Approx(0.75));
  CHECK(m.relabeled[9] == kUnmatchedPrediction);
  CHECK(m.relabeled[6] == 2);
}

TEST_CASE("known predictions cannot be matched to other classes") {
  ClassCatalog cat({"a", "b"});
  // Every class-1 vertex is predicted 0: the supervised cluster 0 stays with label 0.
  const auto labels = ints({0, 1, 1, 1});
  const auto preds = ints({0, 0, 0, 0});
  const auto m = evaluate_openworld(labels, preds, cat, {});
  CHECK(*m.per_class[0].iou == doctest::Approx(0.25));
  CHECK(*m.per_class[1].iou == 0.0);
}

TEST_CASE("open-world evaluation equals a reference evaluator") {
  Rng rng(44);
  for (int t = 0; t < 50; ++t) {
    ClassCatalog cat({"k0", "k1", "k2", "k3"});
    std::vector<std::int32_t> novel;
    for (int k = 0; k < 3; ++k) novel.push_back(cat.add_novel());
    const std::size_t n = 50 + rng.below(100);
    std::vector<std::int32_t> labels(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<std::int32_t>(rng.below(5));
      const auto r = rng.below(10);
      preds[i] = r < 6 ? static_cast<std::int32_t>(rng.below(4)) : r < 9 ? novel[rng.below(3)] : kNoise;
    }
    const std::vector<std::int32_t> outliers{4};
    const auto m = evaluate_openworld(labels, preds, cat, outliers);

    // Reference: brute-force constrained matching, relabel, per-class IoU.
    std::vector<std::int32_t> pred_ids;
    for (auto p : preds) {
      if (p >= 0) pred_ids.push_back(p);
    }
    std::sort(pred_ids.begin(), pred_ids.end());
    pred_ids.erase(std::unique(pred_ids.begin(), pred_ids.end()), pred_ids.end());
    std::vector<std::vector<std::int64_t>> counts(5, std::vector<std::int64_t>(pred_ids.size(), 0));
    for (std::size_t i = 0; i < n; ++i) {
      if (preds[i] < 0) continue;
      const auto c = std::lower_bound(pred_ids.begin(), pred_ids.end(), preds[i]) - pred_ids.begin();
      ++counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(c)];
    }
    std::vector<std::optional<int>> bound(pred_ids.size());
    for (std::size_t c = 0; c < pred_ids.size(); ++c) {
      if (pred_ids[c] < 4) bound[c] = pred_ids[c];
    }
    const auto best = oracle::brute_force_matching(counts, bound);
    CHECK(m.match.total == best.value);
    if (!best.unique) continue;
    std::map<std::int32_t, std::int32_t> relabel;
    for (int l = 0; l < 5; ++l) {
      if (best.cluster_of_label[l] >= 0) relabel[pred_ids[best.cluster_of_label[l]]] = l;
    }
    double sum = 0, known = 0;
    for (int cls = 0; cls < 5; ++cls) {
      std::size_t inter = 0, uni = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool a = labels[i] == cls;
        const bool b = preds[i] >= 0 && relabel.count(preds[i]) && relabel[preds[i]] == cls;
        inter += a && b;
        uni += a || b;
      }
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      sum += iou;
      if (cls < 4) known += iou;
      if (cls == 4) CHECK(*m.mean_outlier_iou == doctest::Approx(iou).epsilon(1e-12));
    }
    CHECK(m.miou == doctest::Approx(sum / 5).epsilon(1e-12));
    CHECK(m.miou_known == doctest::Approx(known / 4).epsilon(1e-12));
  }
}
