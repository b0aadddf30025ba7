#include <doctest.h>

#include <cmath>
#include <numeric>

#include "scim/descriptors.hpp"
#include "scim/errors.hpp"
#include "support/fixtures.hpp"

using namespace scim;

namespace {

DescriptorMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
  DescriptorMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.at(i, j) = static_cast<float>(rows[i][j]);
  }
  return m;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

double row_distance(const DescriptorMatrix& m, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.cols; ++k) {
    const double d = static_cast<double>(m.at(a, k)) - static_cast<double>(m.at(b, k));
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("l2_normalize") {
  const auto m = l2_normalize(matrix_of({{3, 4}, {0, 0}, {1, 0}}));
  CHECK(m.at(0, 0) == doctest::Approx(0.6));
  CHECK(m.at(0, 1) == doctest::Approx(0.8));
  CHECK(m.at(1, 0) == 0.0f);
  CHECK(m.at(1, 1) == 0.0f);
  CHECK(m.at(2, 0) == 1.0f);

  Rng rng(1);
  const auto r = l2_normalize(matrix_of(fixture::random_points(rng, 30, 7, 10.0)));
  for (std::size_t i = 0; i < r.rows; ++i) {
    double s = 0;
    for (auto x : r.row(i)) s += static_cast<double>(x) * x;
    CHECK(std::abs(std::sqrt(s) - 1.0) <= 1e-6);
  }
  CHECK(l2_normalize(r) == r);
}

TEST_CASE("pairwise distances") {
  const auto m = matrix_of({{0, 0}, {3, 4}, {3, 4}});
  const auto d = pairwise_distances(m, all_rows(3));
  CHECK(d(0, 1) == 5.0);
  CHECK(d(1, 2) == 0.0);
  CHECK(d(0, 0) == 0.0);

  Rng rng(2);
  const auto pts = fixture::random_points(rng, 10, 8);
  const auto mat = matrix_of(pts);
  const auto dist = pairwise_distances(mat, all_rows(10));
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(std::abs(dist(i, j) - row_distance(mat, i, j)) <= 1e-6);
      CHECK(dist(i, j) == dist(j, i));
    }
  }
}

TEST_CASE("pairwise distances respect the triangle inequality") {
  Rng rng(3);
  const auto mat = matrix_of(fixture::random_points(rng, 40, 5));
  const auto d = pairwise_distances(mat, all_rows(40));
  for (int t = 0; t < 2000; ++t) {
    const auto a = rng.below(40), b = rng.below(40), c = rng.below(40);
    CHECK(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
  }
}

TEST_CASE("distances over an index subset") {
  const auto m = matrix_of({{0, 0}, {1, 0}, {0, 2}, {5, 5}});
  const std::vector<std::size_t> idx{0, 2};
  const auto d = pairwise_distances(m, idx);
  CHECK(d.n == 2);
  CHECK(d(0, 1) == 2.0);
}

TEST_CASE("harmonization uses the nearest-rank 0.9 quantile") {
  std::vector<double> tenths;
  for (int i = 1; i <= 10; ++i) tenths.push_back(0.1 * i);
  const auto s = harmonize_distances(tenths);
  CHECK(s.quantile == doctest::Approx(0.9));
  CHECK(s.alpha == doctest::Approx(1 / 0.9));
  CHECK_FALSE(s.degenerate);

  const std::vector<double> twos(7, 2.0);
  CHECK(harmonize_distances(twos).alpha == 0.5);

  const std::vector<double> zeros(5, 0.0);
  const auto z = harmonize_distances(zeros);
  CHECK(z.alpha == 1.0);
  CHECK(z.degenerate);

  CHECK_THROWS_AS(harmonize_distances(std::vector<double>{}), ValidationError);
}

TEST_CASE("harmonization rank is ceil(0.9 P)") {
  for (std::size_t p = 1; p <= 1000; ++p) {
    CHECK(harmonization_rank(p) == static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(p) - 1e-9)));
  }
}

TEST_CASE("after scaling at least and at most ceil(0.9P) distances are <= 1 at the quantile rank") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t p = 1 + rng.below(300);
    std::vector<double> d(p);
    for (auto& x : d) x = rng.uniform(0.01, 5.0);
    const auto s = harmonize_distances(d);
    std::size_t at_most_one = 0;
    for (auto x : d) at_most_one += s.alpha * x <= 1.0 ? 1 : 0;
    std::size_t strictly_below = 0;
    for (auto x : d) strictly_below += x < s.quantile ? 1 : 0;
    const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(p) - 1e-9));
    CHECK(at_most_one >= rank);
    CHECK(strictly_below < rank);
    CHECK(p - at_most_one <= p - rank);
  }
}

TEST_CASE("harmonize from a distance matrix and reference pairs") {
  DistanceMatrix d(3);
  d.set(0, 1, 2.0);
  d.set(0, 2, 4.0);
  d.set(1, 2, 8.0);
  const std::vector<IndexPair> pairs{{0, 1}, {1, 2}, {0, 2}};
  const auto s = harmonize(d, pairs);
  CHECK(s.quantile == 8.0);
  CHECK(s.alpha == 0.125);
}

TEST_CASE("reference pairs share a prediction and are distinct vertices") {
  auto b = fixture::small_bundle({60});
  Rng rng(5);
  for (auto& v : b.vertices) v.pred = static_cast<std::uint16_t>(rng.below(2));
  const auto cand = all_rows(60);
  const auto pairs = sample_reference_pairs(b, cand, 500, 11);
  CHECK(pairs.size() == 500);
  for (const auto& [i, j] : pairs) {
    CHECK(i != j);
    CHECK(b.vertices[i].pred == b.vertices[j].pred);
  }
  CHECK(pairs == sample_reference_pairs(b, cand, 500, 11));

  auto lonely = fixture::small_bundle({2});
  lonely.vertices[1].pred = 1;
  CHECK(sample_reference_pairs(lonely, all_rows(2), 10, 1).empty());
}

TEST_CASE("pca of collinear points keeps pairwise distances") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({1.0 + 0.5 * i, 2.0 - 0.25 * i});
  const auto m = matrix_of(rows);
  const auto p = pca_reduce(m, 1);
  CHECK(p.cols == 1);
  for (std::size_t a = 0; a < m.rows; ++a) {
    for (std::size_t b = 0; b < m.rows; ++b) {
      CHECK(std::abs(row_distance(p, a, b) - row_distance(m, a, b)) <= 1e-5);
    }
  }
}

TEST_CASE("pca with full dimension is an isometry") {
  Rng rng(6);
  const auto m = matrix_of(fixture::random_points(rng, 30, 6));
  const auto p = pca_reduce(m, 6);
  for (std::size_t a = 0; a < m.rows; ++a) {
    for (std::size_t b = a + 1; b < m.rows; ++b) {
      CHECK(std::abs(row_distance(p, a, b) - row_distance(m, a, b)) <= 1e-6);
    }
  }
}

TEST_CASE("pca agrees with a Jacobi eigendecomposition") {
  Rng rng(7);
  const std::size_t n = 50, d = 10, k = 3;
  const auto pts = fixture::random_points(rng, n, d);
  const auto m = matrix_of(pts);
  const auto model = fit_pca(m, all_rows(n), k);

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += m.at(i, j);
  }
  for (auto& x : mean) x /= static_cast<double>(n);
  oracle::Matrix cov(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += (m.at(i, a) - mean[a]) * (m.at(i, b) - mean[b]);
    }
  }
  for (auto& row : cov) {
    for (auto& x : row) x /= static_cast<double>(n);
  }
  std::vector<double> values;
  oracle::Matrix vectors;
  oracle::jacobi_eigen(cov, values, vectors);

  REQUIRE(model.eigenvalues.size() == d);
  for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(model.eigenvalues[i] - values[i]) <= 1e-9);
  for (std::size_t c = 0; c < k; ++c) {
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += model.components[c][j] * vectors[c][j];
    CHECK(std::abs(std::abs(dot) - 1.0) <= 1e-6);
    // largest-magnitude loading is positive
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(model.components[c][j]) > std::abs(model.components[c][arg])) arg = j;
    }
    CHECK(model.components[c][arg] > 0.0);
  }

  // Mean squared reconstruction residual equals the discarded eigenvalue mass.
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = m.at(i, j) - mean[j];
    std::vector<double> rec(d, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      double proj = 0.0;
      for (std::size_t j = 0; j < d; ++j) proj += model.components[c][j] * x[j];
      for (std::size_t j = 0; j < d; ++j) rec[j] += proj * model.components[c][j];
    }
    for (std::size_t j = 0; j < d; ++j) residual += (x[j] - rec[j]) * (x[j] - rec[j]);
  }
  residual /= static_cast<double>(n);
  const double discarded = std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(k), values.end(), 0.0);
  CHECK(std::abs(residual - discarded) <= 1e-6);
}

TEST_CASE("pca is translation invariant") {
  Rng rng(8);
  auto pts = fixture::random_points(rng, 25, 5);
  const auto a = pca_reduce(matrix_of(pts), 3);
  for (auto& p : pts) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] += 3.0 + static_cast<double>(j);
  }
  const auto b = pca_reduce(matrix_of(pts), 3);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = i + 1; j < a.rows; ++j) {
      CHECK(std::abs(row_distance(a, i, j) - row_distance(b, i, j)) <= 1e-5);
    }
  }
}

TEST_CASE("pca rejects an invalid output dimension") {
  const auto m = matrix_of({{1, 2}, {3, 4}, {5, 7}});
  CHECK_THROWS_AS(pca_reduce(m, 0), ValidationError);
  CHECK_THROWS_AS(pca_reduce(m, 3), ValidationError);
}
