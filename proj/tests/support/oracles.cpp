#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace oracle {

double brute_force_mst_weight(const Matrix& w) {
  const std::size_t n = w.size();
  if (n < 2) return 0.0;
  if (n == 2) return w[0][1];
  const std::size_t len = n - 2;
  std::vector<std::size_t> seq(len, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    // Decode the Pruefer sequence into its tree.
    std::vector<std::size_t> degree(n, 1);
    for (auto s : seq) ++degree[s];
    double total = 0.0;
    std::set<std::size_t> leaves;
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] == 1) leaves.insert(i);
    }
    for (auto s : seq) {
      const std::size_t leaf = *leaves.begin();
      leaves.erase(leaves.begin());
      total += w[leaf][s];
      if (--degree[s] == 1) leaves.insert(s);
    }
    const std::size_t a = *leaves.begin();
    const std::size_t b = *std::next(leaves.begin());
    total += w[a][b];
    best = std::min(best, total);

    std::size_t k = 0;
    while (k < len && ++seq[k] == n) seq[k++] = 0;
    if (k == len) break;
  }
  return best;
}

std::vector<double> naive_single_linkage_heights(const Matrix& d) {
  const std::size_t n = d.size();
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  std::vector<double> heights;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 1;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double link = std::numeric_limits<double>::infinity();
        for (auto i : clusters[a]) {
          for (auto j : clusters[b]) link = std::min(link, d[i][j]);
        }
        if (link < best) {
          best = link;
          ba = a;
          bb = b;
        }
      }
    }
    heights.push_back(best);
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::sort(heights.begin(), heights.end());
  return heights;
}

std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto it = remap.find(labels[i]);
    if (it == remap.end()) it = remap.emplace(labels[i], static_cast<int>(remap.size())).first;
    out[i] = it->second;
  }
  return out;
}

std::vector<int> dbscan_closure(const Matrix& d, double eps, std::size_t min_samples) {
  const std::size_t n = d.size();
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) count += d[i][j] <= eps ? 1 : 0;
    core[i] = count >= min_samples;
  }
  // reach[i][j]: core i and core j connected through a chain of core points.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = core[i] && core[j] && d[i][j] <= eps;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    std::size_t root = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j]) {
        root = j;
        break;
      }
    }
    label[i] = static_cast<int>(root);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && d[i][j] <= eps) {
        label[i] = label[j];
        break;
      }
    }
  }
  return canonical(label);
}

Injection brute_force_matching(const std::vector<std::vector<std::int64_t>>& counts,
                               const std::vector<std::optional<int>>& bound_label) {
  const std::size_t rows = counts.size();
  const std::size_t cols = rows ? counts[0].size() : bound_label.size();
  Injection best;
  best.value = -1;
  std::vector<int> current(rows, -1);
  std::vector<bool> used(cols, false);
  std::size_t ties = 0;
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t l, std::int64_t value) {
    if (l == rows) {
      std::vector<int> cleaned = current;
      for (std::size_t r = 0; r < rows; ++r) {
        if (cleaned[r] >= 0 && counts[r][static_cast<std::size_t>(cleaned[r])] == 0) cleaned[r] = -1;
      }
      if (value > best.value) {
        best.value = value;
        best.cluster_of_label = cleaned;
        ties = 1;
      } else if (value == best.value && cleaned != best.cluster_of_label) {
        ++ties;
      }
      return;
    }
    current[l] = -1;
    rec(l + 1, value);
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c]) continue;
      if (bound_label[c] && *bound_label[c] != static_cast<int>(l)) continue;
      if (counts[l][c] == 0) continue;  // identical to leaving l unmatched
      used[c] = true;
      current[l] = static_cast<int>(c);
      rec(l + 1, value + counts[l][c]);
      used[c] = false;
    }
    current[l] = -1;
  };
  rec(0, 0);
  best.unique = ties == 1;
  return best;
}

std::int64_t brute_force_assignment_cost(const std::vector<std::vector<std::int64_t>>& cost) {
  std::vector<std::size_t> perm(cost.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  do {
    std::int64_t total = 0;
    for (std::size_t r = 0; r < perm.size(); ++r) total += cost[r][perm[r]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

VMeasure v_measure(const std::vector<int>& labels, const std::vector<int>& clusters) {
  const double n = static_cast<double>(labels.size());
  std::map<int, double> nl, nk;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    nl[labels[i]] += 1;
    nk[clusters[i]] += 1;
    joint[{labels[i], clusters[i]}] += 1;
  }
  double h_l = 0, h_k = 0, h_l_given_k = 0, h_k_given_l = 0;
  for (const auto& [l, c] : nl) h_l -= c / n * std::log(c / n);
  for (const auto& [k, c] : nk) h_k -= c / n * std::log(c / n);
  for (const auto& [lk, c] : joint) {
    h_l_given_k -= c / n * std::log(c / nk[lk.second]);
    h_k_given_l -= c / n * std::log(c / nl[lk.first]);
  }
  VMeasure out;
  out.h = h_l == 0 ? 1.0 : 1.0 - h_l_given_k / h_l;
  out.c = h_k == 0 ? 1.0 : 1.0 - h_k_given_l / h_k;
  out.v = out.h + out.c == 0 ? 0.0 : 2 * out.h * out.c / (out.h + out.c);
  return out;
}

void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  values.clear();
  vectors.assign(n, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    values.push_back(a[order[r]][order[r]]);
    for (std::size_t k = 0; k < n; ++k) vectors[r][k] = v[k][order[r]];
  }
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0)); }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  // Undefined for a constant series.
  const auto [alo, ahi] = std::minmax_element(a.begin(), a.end());
  const auto [blo, bhi] = std::minmax_element(b.begin(), b.end());
  if (a.empty() || *alo == *ahi || *blo == *bhi) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
