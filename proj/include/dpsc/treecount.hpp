#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dpsc/mechanisms.hpp"

namespace dpsc {

/// A rooted tree given by a parent array (parent[root] = -1). Children are
/// ordered by node id, which fixes heavy-path tie-breaks.
struct Tree {
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  int root = 0;

  static Tree from_parent_array(std::vector<int> parent);
  /// Text format: one `node_id parent_id` pair per line, root's parent -1.
  static Tree from_stream(std::istream& in);

  std::size_t size() const { return parent.size(); }
  std::vector<int> leaves() const;
  int height() const;
};

/// Estimates of a monotone counting function on every tree node.
///
/// The function must satisfy, for the caller's neighboring-dataset relation:
///   - c(v) <= sum of c over v's children, for every internal v;
///   - the leaf count vector changes by at most d in L1;
///   - a node's count changes at most as much as the leaf counts below it.
/// Estimates come from noisy heavy-path root counts (half the budget) plus
/// noisy prefix sums of the per-path difference sequences (other half).
struct TreeCountResult {
  std::vector<double> estimates;
  double error_bound = 0.0;  // max node error, holds w.p. >= 1-beta
  double roots_bound = 0.0;
  double sums_bound = 0.0;
};

struct TreeCountParams {
  double epsilon = 1.0;
  double delta = 0.0;      // > 0 for the approximate variant
  double beta = 0.05;
  double leaf_l1_sens = 2.0;  // d
  double node_cap = 1.0;      // per-node sensitivity bound (approx only)
  bool validate_monotone = false;
};

TreeCountResult dp_tree_counts_pure(const Tree& tree,
                                    const std::vector<std::int64_t>& counts,
                                    const TreeCountParams& params,
                                    const NoiseSource& noise);

TreeCountResult dp_tree_counts_approx(const Tree& tree,
                                      const std::vector<std::int64_t>& counts,
                                      const TreeCountParams& params,
                                      const NoiseSource& noise);

/// Items placed on leaves, each with a color.
struct ColoredDataset {
  struct Item {
    int leaf;
    std::int64_t color;
  };
  std::vector<Item> items;

  /// Text format: one `leaf_id color` pair per line.
  static ColoredDataset from_stream(std::istream& in);
};

/// Exact distinct-color counts per node: the number of distinct colors among
/// items at leaves in the node's subtree. Serves as the count callback for
/// the DP estimators and as the test oracle.
std::vector<std::int64_t> colored_counts(const Tree& tree,
                                         const ColoredDataset& data);

}  // namespace dpsc
