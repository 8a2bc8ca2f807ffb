#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpsc/candidates.hpp"
#include "dpsc/corpus.hpp"
#include "dpsc/heavy_path.hpp"
#include "dpsc/mechanisms.hpp"
#include "dpsc/prefix_sums.hpp"
#include "dpsc/suffix_index.hpp"

namespace dpsc {

enum class Mode { Pure, Approx };

/// Trie over the candidate set with the exact capped count at every node.
/// Node 0 is the root (empty string); children are keyed by symbol.
class CandidateTrie {
 public:
  struct Node {
    int parent = -1;
    unsigned char symbol = 0;
    std::map<unsigned char, int> children;
    std::int64_t exact = 0;
  };

  CandidateTrie() { nodes_.emplace_back(); }

  static CandidateTrie from_candidates(const CandidateSet& cands,
                                       const SuffixIndex& idx,
                                       std::int64_t cap);
  /// Trie of explicit strings with exact counts (tests, q-gram pipelines).
  static CandidateTrie from_strings(const std::vector<Symbols>& strings,
                                    const SuffixIndex& idx, std::int64_t cap);

  int insert(const Symbols& s);
  std::optional<int> locate(const Symbols& s) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(int v) const { return nodes_[static_cast<std::size_t>(v)]; }
  Node& node(int v) { return nodes_[static_cast<std::size_t>(v)]; }

  /// Children lists ordered by symbol (the heavy tie-break order).
  std::vector<std::vector<int>> children_lists() const;
  Symbols string_of(int v) const;
  std::size_t depth_of(int v) const;

  /// Fills `exact` at every node from the index; the root gets the capped
  /// count of the empty pattern.
  void fill_exact_counts(const SuffixIndex& idx, std::int64_t cap);

 private:
  std::vector<Node> nodes_;
};

/// Difference sequences of the exact counts along each heavy path, entries
/// diff[i] = exact(v_i) - exact(v_{i-1}) <= 0.
std::vector<std::vector<std::int64_t>> difference_sequences(
    const CandidateTrie& trie, const HeavyPathDecomposition& hpd);

/// L1 sensitivity bound for the vector of heavy-path-root counts:
/// 2 * ell * (ceil(log2 |T|) + 1).
double root_counts_l1_sensitivity(std::size_t ell, std::size_t trie_size);

/// Error bound of the root-count stage, holding with probability >= 1-beta.
double root_counts_bound_pure(std::size_t ell, std::size_t trie_size,
                              std::size_t n_paths, double eps, double beta);
double root_counts_bound_gaussian(std::size_t ell, std::int64_t cap,
                                  std::size_t trie_size, std::size_t n_paths,
                                  double eps, double delta, double beta);

/// Noisy counts for the heavy path roots, indexed by path id.
std::vector<double> noisy_root_counts(const CandidateTrie& trie,
                                      const HeavyPathDecomposition& hpd,
                                      Mode mode, std::size_t ell,
                                      std::int64_t cap, double eps,
                                      double delta, const NoiseSource& noise);

/// Everything a serialized structure carries besides the node table.
struct StructureMeta {
  Mode mode = Mode::Pure;
  bool qgram = false;
  std::uint64_t q = 0;
  std::uint64_t n = 0;
  std::uint64_t ell = 0;
  std::uint64_t sigma = 0;
  std::int64_t cap = 1;
  double epsilon = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  bool zero_noise = false;
  std::int32_t abort_level = -1;  // -1: no size abort
  double alpha_candidates = 0.0;  // candidate-stage per-string bound
  double tau_candidates = 0.0;    // candidate acceptance threshold
  double alpha_node = 0.0;        // error bound at retained nodes
  double alpha_all = 0.0;         // bound covering absent patterns too
  double prune_threshold = 0.0;
};

/// The query-time artifact: a pruned trie of noisy counts. Immutable;
/// concurrent queries are safe.
class PrivateCountTrie {
 public:
  struct Node {
    int parent = -1;
    unsigned char symbol = 0;
    double count = 0.0;
  };

  PrivateCountTrie(std::vector<Node> nodes, Alphabet alphabet,
                   StructureMeta meta);

  /// Stored noisy count at the node spelling the pattern, 0 if absent.
  /// Counts are returned as stored; negative values are not clamped.
  double query(const Symbols& pattern) const;

  /// All retained strings with noisy count >= tau (the root/empty string is
  /// never reported). For q-gram structures only strings of length q are
  /// reported.
  std::vector<std::pair<Symbols, double>> mine(double tau) const;

  const StructureMeta& meta() const { return meta_; }
  const Alphabet& alphabet() const { return alphabet_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  std::map<std::pair<int, unsigned char>, int> child_;
  Alphabet alphabet_;
  StructureMeta meta_;
};

/// Combines noisy root counts with noisy prefix sums into per-node counts,
/// then prunes subtrees below the threshold. The root always survives.
PrivateCountTrie assemble(const CandidateTrie& trie,
                          const HeavyPathDecomposition& hpd,
                          const std::vector<double>& root_counts,
                          const PrefixSums& prefix_sums,
                          double prune_threshold, Alphabet alphabet,
                          StructureMeta meta);

struct BuildParams {
  Mode mode = Mode::Pure;
  double epsilon = 1.0;
  double delta = 0.0;
  double beta = 0.05;
  std::int64_t cap = -1;  // -1: substring count (cap = ell)
  std::uint64_t seed = 0;
  bool zero_noise = false;
  std::array<double, 3> stage_shares{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::optional<double> tau_override;    // candidate threshold (testing)
  std::optional<double> prune_override;  // prune threshold (testing)
};

/// Full pipeline: candidates -> trie with exact counts -> heavy paths ->
/// noisy roots -> noisy difference prefix sums -> assembly and pruning.
/// The three noisy stages split the budget by `stage_shares`.
PrivateCountTrie build_count_structure(const Database& db,
                                       const SuffixIndex& idx,
                                       const BuildParams& params);

}  // namespace dpsc
