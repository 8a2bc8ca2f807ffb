#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dpsc {

inline int floor_log2(std::size_t x) {
  if (x == 0) throw std::invalid_argument("floor_log2(0)");
  return std::bit_width(x) - 1;
}

inline int ceil_log2(std::size_t x) {
  if (x == 0) throw std::invalid_argument("ceil_log2(0)");
  return x == 1 ? 0 : std::bit_width(x - 1);
}

/// Heavy path decomposition of a rooted tree. The heavy child of an internal
/// node is the child whose subtree holds the most nodes; among ties the one
/// listed first wins, so the decomposition is reproducible whenever children
/// are supplied in a deterministic order (by symbol for tries, by id
/// otherwise). Any root-to-leaf walk crosses at most ceil(log2 N) light
/// edges.
struct HeavyPathDecomposition {
  std::vector<std::vector<int>> paths;  // paths[p][0] is the path root
  std::vector<int> path_id;             // per node
  std::vector<int> path_offset;         // per node, 0 at the path root
  std::vector<std::size_t> subtree_size;

  std::size_t path_count() const { return paths.size(); }
};

/// `children[v]` lists v's children in tie-break order. Iterative throughout;
/// safe on degenerate chains of any length.
inline HeavyPathDecomposition heavy_path_decompose(
    const std::vector<std::vector<int>>& children, int root) {
  const std::size_t n = children.size();
  HeavyPathDecomposition hpd;
  hpd.path_id.assign(n, -1);
  hpd.path_offset.assign(n, -1);
  hpd.subtree_size.assign(n, 0);
  if (n == 0) return hpd;

  // post-order via explicit stack
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : children[v]) stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    std::size_t s = 1;
    for (int c : children[*it]) s += hpd.subtree_size[c];
    hpd.subtree_size[*it] = s;
  }

  std::vector<int> heavy(n, -1);
  for (int v : order) {
    std::size_t best = 0;
    for (int c : children[v]) {
      if (hpd.subtree_size[c] > best) {  // strict: first maximum wins ties
        best = hpd.subtree_size[c];
        heavy[v] = c;
      }
    }
  }

  // walk paths from each path root (nodes not reached by a heavy edge)
  std::vector<int> path_roots{root};
  for (std::size_t i = 0; i < path_roots.size(); ++i) {
    const int r = path_roots[i];
    const int pid = static_cast<int>(hpd.paths.size());
    hpd.paths.emplace_back();
    int v = r;
    int off = 0;
    while (v != -1) {
      hpd.paths.back().push_back(v);
      hpd.path_id[v] = pid;
      hpd.path_offset[v] = off++;
      for (int c : children[v]) {
        if (c != heavy[v]) path_roots.push_back(c);
      }
      v = heavy[v];
    }
  }
  return hpd;
}

/// Number of light edges on the root-to-node path (path transitions).
inline int light_edges_to(const HeavyPathDecomposition& hpd,
                          const std::vector<int>& parent, int node) {
  int crossings = 0;
  int v = node;
  while (parent[v] != -1) {
    if (hpd.path_id[parent[v]] != hpd.path_id[v]) ++crossings;
    v = parent[v];
  }
  return crossings;
}

}  // namespace dpsc
