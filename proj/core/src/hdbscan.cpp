#include <algorithm>
#include <limits>
#include <numeric>

#include "scim/clustering.hpp"
#include "scim/errors.hpp"

namespace scim {
namespace hdbscan_detail {
namespace {

constexpr double kMaxLambda = 1e12;

double lambda_of(double height) { return height > 1.0 / kMaxLambda ? 1.0 / height : kMaxLambda; }

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  /// Returns the new root.
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    parent_[b] = a;
    return a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.n;
  std::vector<double> core(n, 0.0);
  if (k == 0 || n < k + 1) throw ValidationError("core_distances: need at least k+1 points");
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(dist(i, j));
    }
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    core[i] = row[k - 1];
  }
  return core;
}

DistanceMatrix mutual_reachability(const DistanceMatrix& dist, std::span<const double> core) {
  DistanceMatrix out(dist.n);
  for (std::size_t i = 0; i < dist.n; ++i) {
    for (std::size_t j = i + 1; j < dist.n; ++j) out.set(i, j, std::max({core[i], core[j], dist(i, j)}));
  }
  return out;
}

std::vector<WeightedEdge> minimum_spanning_tree(const DistanceMatrix& dist) {
  const std::size_t n = dist.n;
  std::vector<WeightedEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> via(n, 0);
  in_tree[0] = true;
  for (std::size_t j = 1; j < n; ++j) best[j] = dist(0, j);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
    }
    in_tree[next] = true;
    edges.push_back({via[next], next, best[next]});
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && dist(next, j) < best[j]) {
        best[j] = dist(next, j);
        via[j] = next;
      }
    }
  }
  return edges;
}

std::vector<Merge> single_linkage(std::size_t n, std::vector<WeightedEdge> mst) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const WeightedEdge& a, const WeightedEdge& b) { return a.weight < b.weight; });
  UnionFind uf(n);
  std::vector<std::size_t> node_of(n);
  std::vector<std::size_t> size_of(n, 1);
  std::iota(node_of.begin(), node_of.end(), std::size_t{0});
  std::vector<Merge> merges;
  merges.reserve(mst.size());
  for (const auto& e : mst) {
    const std::size_t ra = uf.find(e.a);
    const std::size_t rb = uf.find(e.b);
    if (ra == rb) throw ValidationError("single_linkage: input edges contain a cycle");
    Merge m{node_of[ra], node_of[rb], e.weight, size_of[ra] + size_of[rb]};
    const std::size_t root = uf.unite(ra, rb);
    node_of[root] = n + merges.size();
    size_of[root] = m.size;
    merges.push_back(m);
  }
  return merges;
}

CondensedTree condense(std::size_t n, std::span<const Merge> dendrogram, std::size_t min_cluster_size) {
  CondensedTree tree;
  tree.n_points = n;
  tree.n_clusters = 1;
  tree.birth_lambda = {0.0};
  if (n < 2) {
    if (n == 1) tree.entries.push_back({0, 0, false, kMaxLambda, 1});
    return tree;
  }
  if (dendrogram.size() != n - 1) throw ValidationError("condense: dendrogram must have n-1 merges");

  auto size_of = [&](std::size_t node) { return node < n ? std::size_t{1} : dendrogram[node - n].size; };
  auto emit_leaves = [&](std::size_t node, std::size_t cluster, double lambda) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        tree.entries.push_back({cluster, x, false, lambda, 1});
      } else {
        stack.push_back(dendrogram[x - n].right);
        stack.push_back(dendrogram[x - n].left);
      }
    }
  };

  std::vector<std::pair<std::size_t, std::size_t>> stack{{2 * n - 2, 0}};
  while (!stack.empty()) {
    const auto [node, cluster] = stack.back();
    stack.pop_back();
    const Merge& m = dendrogram[node - n];
    const double lambda = lambda_of(m.height);
    const std::size_t children[2] = {m.left, m.right};
    const bool split = size_of(m.left) >= min_cluster_size && size_of(m.right) >= min_cluster_size;
    // Pushed in reverse so the left child is expanded first.
    std::vector<std::pair<std::size_t, std::size_t>> next;
    for (std::size_t child : children) {
      if (split) {
        const std::size_t id = tree.n_clusters++;
        tree.birth_lambda.push_back(lambda);
        tree.entries.push_back({cluster, id, true, lambda, size_of(child)});
        next.emplace_back(child, id);
      } else if (size_of(child) >= min_cluster_size) {
        next.emplace_back(child, cluster);
      } else {
        emit_leaves(child, cluster, lambda);
      }
    }
    for (auto it = next.rbegin(); it != next.rend(); ++it) stack.push_back(*it);
  }
  return tree;
}

std::vector<double> stabilities(const CondensedTree& tree) {
  std::vector<double> stab(tree.n_clusters, 0.0);
  for (const auto& e : tree.entries) {
    stab[e.parent] += (e.lambda - tree.birth_lambda[e.parent]) * static_cast<double>(e.child_size);
  }
  return stab;
}

std::vector<std::int64_t> extract_eom(const CondensedTree& tree) {
  const std::size_t k = tree.n_clusters;
  const auto stab = stabilities(tree);
  std::vector<std::vector<std::size_t>> kids(k);
  std::vector<std::size_t> parent_of(k, 0);
  std::vector<std::size_t> home(tree.n_points, 0);
  for (const auto& e : tree.entries) {
    if (e.child_is_cluster) {
      kids[e.parent].push_back(e.child);
      parent_of[e.child] = e.parent;
    } else {
      home[e.child] = e.parent;
    }
  }

  std::vector<bool> selected(k, false);
  std::vector<double> subtree(k, 0.0);
  for (std::size_t c = k; c-- > 0;) {
    if (kids[c].empty()) {
      selected[c] = true;
      subtree[c] = stab[c];
      continue;
    }
    double below = 0.0;
    for (auto child : kids[c]) below += subtree[child];
    if (stab[c] >= below) {
      selected[c] = true;
      subtree[c] = stab[c];
      std::vector<std::size_t> stack(kids[c].begin(), kids[c].end());
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        selected[x] = false;
        stack.insert(stack.end(), kids[x].begin(), kids[x].end());
      }
    } else {
      subtree[c] = below;
    }
  }

  std::vector<std::int64_t> labels(tree.n_points, -1);
  for (std::size_t p = 0; p < tree.n_points; ++p) {
    std::size_t c = home[p];
    while (true) {
      if (selected[c]) {
        labels[p] = static_cast<std::int64_t>(c);
        break;
      }
      if (c == 0) break;
      c = parent_of[c];
    }
  }
  return labels;
}

}  // namespace hdbscan_detail

ClusterSolution hdbscan(const DistanceMatrix& dist, const HDBSCANParams& params) {
  using namespace hdbscan_detail;
  if (params.min_cluster_size < 2) throw ValidationError("hdbscan: min_cluster_size must be >= 2");
  if (params.min_samples < 1) throw ValidationError("hdbscan: min_samples must be >= 1");
  const nlohmann::json used = {{"min_cluster_size", params.min_cluster_size}, {"min_samples", params.min_samples}};
  const std::size_t n = dist.n;
  if (n < params.min_samples + 1 || n < params.min_cluster_size) {
    return canonicalize(std::vector<std::int64_t>(n, -1), Backend::hdbscan, used);
  }
  const auto core = core_distances(dist, params.min_samples);
  const auto reach = mutual_reachability(dist, core);
  const auto dendrogram = single_linkage(n, minimum_spanning_tree(reach));
  const auto tree = condense(n, dendrogram, params.min_cluster_size);
  return canonicalize(extract_eom(tree), Backend::hdbscan, used);
}

}  // namespace scim
