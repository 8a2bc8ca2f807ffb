#include "dpsc/counting_trie.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpsc {

CandidateTrie CandidateTrie::from_candidates(const CandidateSet& cands,
                                             const SuffixIndex& idx,
                                             std::int64_t cap) {
  CandidateTrie trie;
  for (std::size_t m = 1; m <= cands.ell; ++m) {
    for (const auto& e : cands.of_length(m, idx)) trie.insert(e.str);
  }
  trie.fill_exact_counts(idx, cap);
  return trie;
}

CandidateTrie CandidateTrie::from_strings(const std::vector<Symbols>& strings,
                                          const SuffixIndex& idx,
                                          std::int64_t cap) {
  CandidateTrie trie;
  std::vector<Symbols> sorted = strings;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& s : sorted) trie.insert(s);
  trie.fill_exact_counts(idx, cap);
  return trie;
}

int CandidateTrie::insert(const Symbols& s) {
  int v = 0;
  for (unsigned char c : s) {
    auto& ch = nodes_[static_cast<std::size_t>(v)].children;
    auto it = ch.find(c);
    if (it == ch.end()) {
      const int nv = static_cast<int>(nodes_.size());
      ch.emplace(c, nv);
      Node node;
      node.parent = v;
      node.symbol = c;
      nodes_.push_back(std::move(node));
      v = nv;
    } else {
      v = it->second;
    }
  }
  return v;
}

std::optional<int> CandidateTrie::locate(const Symbols& s) const {
  int v = 0;
  for (unsigned char c : s) {
    const auto& ch = nodes_[static_cast<std::size_t>(v)].children;
    auto it = ch.find(c);
    if (it == ch.end()) return std::nullopt;
    v = it->second;
  }
  return v;
}

std::vector<std::vector<int>> CandidateTrie::children_lists() const {
  std::vector<std::vector<int>> out(nodes_.size());
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    out[v].reserve(nodes_[v].children.size());
    for (const auto& [sym, c] : nodes_[v].children) out[v].push_back(c);
  }
  return out;
}

Symbols CandidateTrie::string_of(int v) const {
  Symbols s;
  while (v != 0) {
    s.push_back(static_cast<char>(nodes_[static_cast<std::size_t>(v)].symbol));
    v = nodes_[static_cast<std::size_t>(v)].parent;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

std::size_t CandidateTrie::depth_of(int v) const {
  std::size_t d = 0;
  while (v != 0) {
    v = nodes_[static_cast<std::size_t>(v)].parent;
    ++d;
  }
  return d;
}

void CandidateTrie::fill_exact_counts(const SuffixIndex& idx,
                                      std::int64_t cap) {
  nodes_[0].exact = idx.count_db(Symbols{}, cap);
  // depth-first; each node's count comes from one pattern query
  std::vector<int> stack;
  for (const auto& [sym, c] : nodes_[0].children) stack.push_back(c);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    nodes_[static_cast<std::size_t>(v)].exact = idx.count_db(string_of(v), cap);
    for (const auto& [sym, c] : nodes_[static_cast<std::size_t>(v)].children) {
      stack.push_back(c);
    }
  }
}

std::vector<std::vector<std::int64_t>> difference_sequences(
    const CandidateTrie& trie, const HeavyPathDecomposition& hpd) {
  std::vector<std::vector<std::int64_t>> seqs;
  seqs.reserve(hpd.paths.size());
  for (const auto& path : hpd.paths) {
    std::vector<std::int64_t> diff;
    diff.reserve(path.size() > 0 ? path.size() - 1 : 0);
    for (std::size_t i = 1; i < path.size(); ++i) {
      diff.push_back(trie.node(path[i]).exact - trie.node(path[i - 1]).exact);
    }
    seqs.push_back(std::move(diff));
  }
  return seqs;
}

double root_counts_l1_sensitivity(std::size_t ell, std::size_t trie_size) {
  return 2.0 * static_cast<double>(ell) * (ceil_log2(trie_size) + 1);
}

double root_counts_bound_pure(std::size_t ell, std::size_t trie_size,
                              std::size_t n_paths, double eps, double beta) {
  return laplace_mechanism_bound(root_counts_l1_sensitivity(ell, trie_size),
                                 eps, n_paths, beta);
}

double root_counts_bound_gaussian(std::size_t ell, std::int64_t cap,
                                  std::size_t trie_size, std::size_t n_paths,
                                  double eps, double delta, double beta) {
  const double l2 = std::sqrt(2.0 * static_cast<double>(cap) *
                              static_cast<double>(ell) *
                              (ceil_log2(trie_size) + 1));
  return gaussian_mechanism_bound(l2, eps, delta, n_paths, beta);
}

std::vector<double> noisy_root_counts(const CandidateTrie& trie,
                                      const HeavyPathDecomposition& hpd,
                                      Mode mode, std::size_t ell,
                                      std::int64_t cap, double eps,
                                      double delta,
                                      const NoiseSource& noise) {
  std::vector<double> exact;
  exact.reserve(hpd.paths.size());
  for (const auto& path : hpd.paths) {
    exact.push_back(static_cast<double>(trie.node(path[0]).exact));
  }
  if (exact.empty()) return exact;
  if (mode == Mode::Pure) {
    return laplace_mechanism(std::move(exact),
                             root_counts_l1_sensitivity(ell, trie.size()), eps,
                             noise, "roots");
  }
  const double l2 = std::sqrt(2.0 * static_cast<double>(cap) *
                              static_cast<double>(ell) *
                              (ceil_log2(trie.size()) + 1));
  return gaussian_mechanism(std::move(exact), l2, eps, delta, noise, "roots");
}

PrivateCountTrie::PrivateCountTrie(std::vector<Node> nodes, Alphabet alphabet,
                                   StructureMeta meta)
    : nodes_(std::move(nodes)),
      alphabet_(std::move(alphabet)),
      meta_(std::move(meta)) {
  if (nodes_.empty()) throw std::invalid_argument("structure needs at least a root node");
  for (std::size_t v = 1; v < nodes_.size(); ++v) {
    if (nodes_[v].parent < 0 || nodes_[v].parent >= static_cast<int>(v)) {
      throw std::invalid_argument("node table must list parents before children");
    }
    child_[{nodes_[v].parent, nodes_[v].symbol}] = static_cast<int>(v);
  }
}

double PrivateCountTrie::query(const Symbols& pattern) const {
  validate_pattern(alphabet_, pattern);
  int v = 0;
  for (unsigned char c : pattern) {
    auto it = child_.find({v, c});
    if (it == child_.end()) return 0.0;
    v = it->second;
  }
  return nodes_[static_cast<std::size_t>(v)].count;
}

std::vector<std::pair<Symbols, double>> PrivateCountTrie::mine(
    double tau) const {
  std::vector<Symbols> strings(nodes_.size());
  std::vector<std::pair<Symbols, double>> out;
  for (std::size_t v = 1; v < nodes_.size(); ++v) {
    strings[v] = strings[static_cast<std::size_t>(nodes_[v].parent)];
    strings[v].push_back(static_cast<char>(nodes_[v].symbol));
    if (meta_.qgram && strings[v].size() != meta_.q) continue;
    if (nodes_[v].count >= tau) out.emplace_back(strings[v], nodes_[v].count);
  }
  return out;
}

PrivateCountTrie assemble(const CandidateTrie& trie,
                          const HeavyPathDecomposition& hpd,
                          const std::vector<double>& root_counts,
                          const PrefixSums& prefix_sums,
                          double prune_threshold, Alphabet alphabet,
                          StructureMeta meta) {
  if (root_counts.size() != hpd.paths.size() ||
      prefix_sums.sums.size() != hpd.paths.size()) {
    throw std::runtime_error("decomposition and noisy stages disagree on path count");
  }
  const std::size_t n = trie.size();
  std::vector<double> noisy(n);
  for (std::size_t v = 0; v < n; ++v) {
    const int pid = hpd.path_id[v];
    const int off = hpd.path_offset[v];
    noisy[v] = root_counts[static_cast<std::size_t>(pid)];
    if (off > 0) {
      noisy[v] += prefix_sums.sums[static_cast<std::size_t>(pid)]
                                  [static_cast<std::size_t>(off - 1)];
    }
  }

  // prune below threshold, keep the root; emit surviving nodes parent-first
  std::vector<PrivateCountTrie::Node> out_nodes;
  std::vector<int> remap(n, -1);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v != 0 && noisy[static_cast<std::size_t>(v)] < prune_threshold) continue;
    const int nv = static_cast<int>(out_nodes.size());
    remap[static_cast<std::size_t>(v)] = nv;
    const auto& node = trie.node(v);
    out_nodes.push_back(PrivateCountTrie::Node{
        v == 0 ? -1 : remap[static_cast<std::size_t>(node.parent)],
        node.symbol, noisy[static_cast<std::size_t>(v)]});
    // reversed so the smallest symbol is visited first
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
      stack.push_back(it->second);
    }
  }
  meta.prune_threshold = prune_threshold;
  return PrivateCountTrie(std::move(out_nodes), std::move(alphabet),
                          std::move(meta));
}

PrivateCountTrie build_count_structure(const Database& db,
                                       const SuffixIndex& idx,
                                       const BuildParams& params) {
  const std::size_t ell = db.ell;
  const std::int64_t cap =
      params.cap < 0 ? static_cast<std::int64_t>(ell) : params.cap;
  if (cap < 1 || cap > static_cast<std::int64_t>(ell)) {
    throw std::invalid_argument("cap must lie in [1, ell]");
  }
  if (params.mode == Mode::Pure && params.delta != 0.0) {
    throw std::invalid_argument("pure mode requires delta = 0");
  }
  if (params.mode == Mode::Approx && !(params.delta > 0.0)) {
    throw std::invalid_argument("approx mode requires delta > 0");
  }

  PrivacyBudget budget(params.epsilon, params.delta, params.beta, cap);
  NoiseSource noise(params.seed, params.zero_noise);

  PrivacyBudget cand_budget =
      budget.split_off(params.stage_shares[0], "candidates");
  PrivacyBudget roots_budget = budget.split_off(params.stage_shares[1], "roots");
  PrivacyBudget sums_budget =
      budget.split_off(params.stage_shares[2], "prefix-sums");

  CandidateSet cands =
      params.mode == Mode::Pure
          ? build_candidates_pure(db, idx, cand_budget, noise,
                                  params.tau_override)
          : build_candidates_approx(db, idx, cand_budget, noise,
                                    params.tau_override);

  CandidateTrie trie = cands.aborted()
                           ? CandidateTrie::from_strings({}, idx, cap)
                           : CandidateTrie::from_candidates(cands, idx, cap);

  const auto hpd = heavy_path_decompose(trie.children_lists(), 0);
  const auto diffs = difference_sequences(trie, hpd);
  std::size_t max_diff_len = 0;
  for (const auto& d : diffs) max_diff_len = std::max(max_diff_len, d.size());
  const std::size_t horizon = max_diff_len == 0 ? 0 : std::bit_ceil(max_diff_len);

  roots_budget.charge(roots_budget.epsilon(), roots_budget.delta(), "roots");
  std::vector<double> roots = noisy_root_counts(
      trie, hpd, params.mode, ell, cap, params.stage_shares[1] * params.epsilon,
      params.stage_shares[1] * params.delta, noise);

  sums_budget.charge(sums_budget.epsilon(), sums_budget.delta(), "prefix-sums");
  const double L = root_counts_l1_sensitivity(ell, trie.size());
  PrefixSums sums;
  if (max_diff_len == 0) {
    sums.sums.assign(diffs.size(), {});
  } else if (params.mode == Mode::Pure) {
    sums = binary_tree_prefix_sums(diffs, L,
                                   params.stage_shares[2] * params.epsilon,
                                   noise, "sums");
  } else {
    const double per_seq = std::min(2.0 * static_cast<double>(cap), L);
    sums = binary_tree_prefix_sums_gaussian(
        diffs, L, per_seq, params.stage_shares[2] * params.epsilon,
        params.stage_shares[2] * params.delta, noise, "sums");
  }

  // explicit-constant error bounds, evaluated at the stage budgets
  const double eps_r = params.stage_shares[1] * params.epsilon;
  const double eps_s = params.stage_shares[2] * params.epsilon;
  const double delta_r = params.stage_shares[1] * params.delta;
  const double delta_s = params.stage_shares[2] * params.delta;
  const double beta_r = params.stage_shares[1] * params.beta;
  const double beta_s = params.stage_shares[2] * params.beta;
  double roots_bound, sums_bound;
  if (params.mode == Mode::Pure) {
    roots_bound =
        root_counts_bound_pure(ell, trie.size(), hpd.path_count(), eps_r, beta_r);
    sums_bound = horizon == 0 ? 0.0
                              : prefix_sums_bound(L, eps_s, hpd.path_count(),
                                                  horizon, beta_s);
  } else {
    roots_bound = root_counts_bound_gaussian(ell, cap, trie.size(),
                                             hpd.path_count(), eps_r, delta_r,
                                             beta_r);
    const double per_seq = std::min(2.0 * static_cast<double>(cap), L);
    sums_bound = horizon == 0
                     ? 0.0
                     : prefix_sums_gaussian_bound(L, per_seq, eps_s, delta_s,
                                                  hpd.path_count(), horizon,
                                                  beta_s);
  }

  StructureMeta meta;
  meta.mode = params.mode;
  meta.n = db.size();
  meta.ell = ell;
  meta.sigma = static_cast<std::uint64_t>(db.alphabet.size());
  meta.cap = cap;
  meta.epsilon = params.epsilon;
  meta.delta = params.delta;
  meta.beta = params.beta;
  meta.seed = params.seed;
  meta.zero_noise = params.zero_noise;
  meta.abort_level = cands.abort_level.value_or(-1);
  meta.alpha_candidates = cands.alpha;
  meta.tau_candidates = cands.tau;
  meta.alpha_node = roots_bound + sums_bound;
  const double prune =
      params.prune_override.value_or(2.0 * meta.alpha_node);
  // a pattern outside the structure is either outside the candidate set
  // (count < tau + alpha_candidates) or pruned (count < prune + alpha_node)
  meta.alpha_all = std::max({meta.alpha_node,
                             cands.tau + cands.alpha,
                             prune + meta.alpha_node});

  return assemble(trie, hpd, roots, sums, prune, db.alphabet, meta);
}

}  // namespace dpsc
