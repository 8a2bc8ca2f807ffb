#include "dpsc/treecount.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>

#include "dpsc/heavy_path.hpp"
#include "dpsc/prefix_sums.hpp"

namespace dpsc {

Tree Tree::from_parent_array(std::vector<int> parent) {
  Tree t;
  t.parent = std::move(parent);
  t.children.assign(t.parent.size(), {});
  int root = -1;
  for (std::size_t v = 0; v < t.parent.size(); ++v) {
    const int p = t.parent[v];
    if (p == -1) {
      if (root != -1) throw std::invalid_argument("tree has two roots");
      root = static_cast<int>(v);
    } else if (p < 0 || p >= static_cast<int>(t.parent.size())) {
      throw std::invalid_argument("parent id out of range");
    } else {
      t.children[static_cast<std::size_t>(p)].push_back(static_cast<int>(v));
    }
  }
  if (root == -1) throw std::invalid_argument("tree has no root");
  t.root = root;
  // children ordered by id: push order above is already ascending
  std::size_t reachable = 0;
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    ++reachable;
    for (int c : t.children[static_cast<std::size_t>(v)]) stack.push_back(c);
  }
  if (reachable != t.parent.size()) throw std::invalid_argument("parent array contains a cycle or disconnected node");
  return t;
}

Tree Tree::from_stream(std::istream& in) {
  std::map<int, int> parent_of;
  int node, parent;
  while (in >> node >> parent) {
    if (node < 0) throw std::invalid_argument("node ids must be non-negative");
    if (!parent_of.emplace(node, parent).second) {
      throw std::invalid_argument("duplicate node id in tree file");
    }
  }
  if (parent_of.empty()) throw std::invalid_argument("empty tree file");
  std::vector<int> pa(parent_of.size(), -1);
  for (const auto& [v, p] : parent_of) {
    if (v >= static_cast<int>(pa.size())) {
      throw std::invalid_argument("node ids must be dense 0..N-1");
    }
    pa[static_cast<std::size_t>(v)] = p;
  }
  return from_parent_array(std::move(pa));
}

std::vector<int> Tree::leaves() const {
  std::vector<int> out;
  for (std::size_t v = 0; v < children.size(); ++v) {
    if (children[v].empty()) out.push_back(static_cast<int>(v));
  }
  return out;
}

int Tree::height() const {
  std::vector<int> depth(parent.size(), 0);
  int h = 0;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    h = std::max(h, depth[static_cast<std::size_t>(v)]);
    for (int c : children[static_cast<std::size_t>(v)]) {
      depth[static_cast<std::size_t>(c)] = depth[static_cast<std::size_t>(v)] + 1;
      stack.push_back(c);
    }
  }
  return h;
}

namespace {

void validate_monotonicity(const Tree& tree,
                           const std::vector<std::int64_t>& counts) {
  for (std::size_t v = 0; v < tree.size(); ++v) {
    if (tree.children[v].empty()) continue;
    std::int64_t child_sum = 0;
    for (int c : tree.children[v]) child_sum += counts[static_cast<std::size_t>(c)];
    if (counts[v] > child_sum) {
      throw std::invalid_argument("count function is not monotone: node exceeds its children's sum");
    }
  }
}

struct StagePlan {
  HeavyPathDecomposition hpd;
  std::vector<std::vector<std::int64_t>> diffs;
  std::vector<double> root_exact;
  std::size_t horizon = 0;
  double roots_l1 = 0.0;  // d * (ceil(log2 |V|) + 1)
  double diffs_l1 = 0.0;  // 2d * (ceil(log2 |V|) + 1)
};

StagePlan plan_stages(const Tree& tree, const std::vector<std::int64_t>& counts,
                      double d) {
  StagePlan plan;
  plan.hpd = heavy_path_decompose(tree.children, tree.root);
  plan.diffs.reserve(plan.hpd.paths.size());
  for (const auto& path : plan.hpd.paths) {
    plan.root_exact.push_back(static_cast<double>(counts[static_cast<std::size_t>(path[0])]));
    std::vector<std::int64_t> diff;
    for (std::size_t i = 1; i < path.size(); ++i) {
      diff.push_back(counts[static_cast<std::size_t>(path[i])] -
                     counts[static_cast<std::size_t>(path[i - 1])]);
    }
    std::size_t len = diff.size();
    plan.horizon = std::max(plan.horizon, len);
    plan.diffs.push_back(std::move(diff));
  }
  if (plan.horizon > 0) plan.horizon = std::bit_ceil(plan.horizon);
  // a unit of leaf change reaches at most ceil(log2 |V|)+1 heavy path roots,
  // and contributes at most twice per crossed path's difference sequence
  const double crossings = ceil_log2(tree.size()) + 1;
  plan.roots_l1 = d * crossings;
  plan.diffs_l1 = 2.0 * d * crossings;
  return plan;
}

TreeCountResult run(const Tree& tree, const std::vector<std::int64_t>& counts,
                    const TreeCountParams& params, const NoiseSource& noise,
                    bool pure) {
  if (counts.size() != tree.size()) {
    throw std::invalid_argument("counts must cover every node");
  }
  if (!(params.leaf_l1_sens > 0.0)) throw std::invalid_argument("leaf sensitivity d must be > 0");
  if (pure && params.delta != 0.0) throw std::invalid_argument("pure variant requires delta = 0");
  if (!pure && !(params.delta > 0.0)) throw std::invalid_argument("approximate variant requires delta > 0");
  if (params.validate_monotone) validate_monotonicity(tree, counts);

  StagePlan plan = plan_stages(tree, counts, params.leaf_l1_sens);
  const double eps2 = params.epsilon / 2.0;
  const double delta2 = params.delta / 2.0;
  const double beta2 = params.beta / 2.0;
  const std::size_t k = plan.hpd.path_count();

  TreeCountResult res;
  std::vector<double> roots;
  PrefixSums sums;
  if (pure) {
    roots = laplace_mechanism(plan.root_exact, plan.roots_l1, eps2, noise,
                              "treecount/roots");
    res.roots_bound = laplace_mechanism_bound(plan.roots_l1, eps2, k, beta2);
    if (plan.horizon > 0) {
      sums = binary_tree_prefix_sums(plan.diffs, plan.diffs_l1, eps2, noise,
                                     "treecount/sums");
      res.sums_bound =
          prefix_sums_bound(plan.diffs_l1, eps2, k, plan.horizon, beta2);
    } else {
      sums.sums.assign(plan.diffs.size(), {});
    }
  } else {
    const double roots_l2 =
        std::sqrt(plan.roots_l1 * params.node_cap);
    roots = gaussian_mechanism(plan.root_exact, roots_l2, eps2, delta2, noise,
                               "treecount/roots");
    res.roots_bound = gaussian_mechanism_bound(roots_l2, eps2, delta2, k, beta2);
    const double per_seq = std::min(2.0 * params.node_cap, plan.diffs_l1);
    if (plan.horizon > 0) {
      sums = binary_tree_prefix_sums_gaussian(plan.diffs, plan.diffs_l1,
                                              per_seq, eps2, delta2, noise,
                                              "treecount/sums");
      res.sums_bound = prefix_sums_gaussian_bound(
          plan.diffs_l1, per_seq, eps2, delta2, k, plan.horizon, beta2);
    } else {
      sums.sums.assign(plan.diffs.size(), {});
    }
  }

  res.estimates.assign(tree.size(), 0.0);
  for (std::size_t v = 0; v < tree.size(); ++v) {
    const int pid = plan.hpd.path_id[v];
    const int off = plan.hpd.path_offset[v];
    double e = roots[static_cast<std::size_t>(pid)];
    if (off > 0) {
      e += sums.sums[static_cast<std::size_t>(pid)][static_cast<std::size_t>(off - 1)];
    }
    res.estimates[v] = e;
  }
  res.error_bound = res.roots_bound + res.sums_bound;
  return res;
}

}  // namespace

TreeCountResult dp_tree_counts_pure(const Tree& tree,
                                    const std::vector<std::int64_t>& counts,
                                    const TreeCountParams& params,
                                    const NoiseSource& noise) {
  return run(tree, counts, params, noise, true);
}

TreeCountResult dp_tree_counts_approx(const Tree& tree,
                                      const std::vector<std::int64_t>& counts,
                                      const TreeCountParams& params,
                                      const NoiseSource& noise) {
  return run(tree, counts, params, noise, false);
}

ColoredDataset ColoredDataset::from_stream(std::istream& in) {
  ColoredDataset d;
  int leaf;
  std::int64_t color;
  while (in >> leaf >> color) d.items.push_back(Item{leaf, color});
  return d;
}

std::vector<std::int64_t> colored_counts(const Tree& tree,
                                         const ColoredDataset& data) {
  std::vector<std::set<std::int64_t>> colors(tree.size());
  for (const auto& item : data.items) {
    if (item.leaf < 0 || item.leaf >= static_cast<int>(tree.size()) ||
        !tree.children[static_cast<std::size_t>(item.leaf)].empty()) {
      throw std::invalid_argument("item assigned to a non-leaf or unknown node");
    }
    colors[static_cast<std::size_t>(item.leaf)].insert(item.color);
  }
  // merge child color sets upward, small into large
  std::vector<int> order;
  std::vector<int> stack{tree.root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : tree.children[static_cast<std::size_t>(v)]) stack.push_back(c);
  }
  std::vector<std::int64_t> out(tree.size());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& mine = colors[static_cast<std::size_t>(*it)];
    for (int c : tree.children[static_cast<std::size_t>(*it)]) {
      auto& theirs = colors[static_cast<std::size_t>(c)];
      if (theirs.size() > mine.size()) std::swap(mine, theirs);
      mine.insert(theirs.begin(), theirs.end());
      theirs.clear();
    }
    out[static_cast<std::size_t>(*it)] = static_cast<std::int64_t>(mine.size());
  }
  return out;
}

}  // namespace dpsc
