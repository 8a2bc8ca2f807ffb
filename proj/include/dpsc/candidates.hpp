#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpsc/corpus.hpp"
#include "dpsc/mechanisms.hpp"
#include "dpsc/suffix_index.hpp"

namespace dpsc {

/// A candidate string with a witness occurrence in the indexed text, when it
/// occurs at all. Strings that never occur keep a noised zero count but no
/// witness.
struct CandidateEntry {
  Symbols str;
  std::optional<std::size_t> witness_pos;
};

/// One pruned set P_{2^k}: strings of length 2^k whose noisy count cleared
/// the threshold. Entries are kept sorted by string.
struct PowSet {
  std::size_t length = 0;
  std::vector<CandidateEntry> entries;

  bool contains(const Symbols& s) const;
};

/// Output of the length-doubling construction: pruned power-of-two sets plus
/// the per-length sets C_m they induce. C_m is materialized on demand; the
/// full union is never held at once.
///
/// `abort_level` is the distinguished fail outcome: some P_{2^k} grew past
/// n*ell, which voids the construction's accuracy guarantee.
struct CandidateSet {
  std::vector<PowSet> pow_sets;  // levels k = 0..floor(log2 ell)
  double tau = 0.0;              // acceptance threshold used
  double alpha = 0.0;            // per-level noisy-count error bound
  std::size_t ell = 0;
  std::optional<int> abort_level;

  bool aborted() const { return abort_level.has_value(); }

  /// C_m. Power-of-two lengths alias P_{2^k}; other lengths are assembled by
  /// the prefix/suffix overlap rule. Empty on abort or m > ell.
  std::vector<CandidateEntry> of_length(std::size_t m,
                                        const SuffixIndex& idx) const;
};

/// All length-m strings formed by overlapping two members of a power-of-two
/// set by 2^(k+1)-m symbols, for 2^k < m < 2^(k+1). Overlaps are verified by
/// longest-common-extension on the strings themselves.
std::vector<CandidateEntry> candidates_of_length(std::size_t m,
                                                 const PowSet& pow,
                                                 const SuffixIndex& idx);

/// Per-level noisy-count error bound of the pure construction
/// (levels = floor(log2 ell)+1 even splits of the stage budget).
double candidate_alpha_pure(std::size_t ell, std::size_t n, std::size_t sigma,
                            double eps, double beta);
/// Same for the approximate construction.
double candidate_alpha_approx(std::size_t ell, std::int64_t cap, std::size_t n,
                              std::size_t sigma, double eps, double delta,
                              double beta);

/// Length-doubling candidate construction under pure DP: Laplace noise at L1
/// sensitivity 2*ell per level, threshold tau = 2*alpha. The whole stage
/// budget is consumed, split evenly across levels.
///
/// tau_override replaces the threshold (testing; recorded in tau).
CandidateSet build_candidates_pure(const Database& db, const SuffixIndex& idx,
                                   PrivacyBudget& budget,
                                   const NoiseSource& noise,
                                   std::optional<double> tau_override = {});

/// Gaussian variant at L2 sensitivity sqrt(2*ell*cap) per level; requires a
/// positive delta and per-level epsilon below 1.
CandidateSet build_candidates_approx(const Database& db,
                                     const SuffixIndex& idx,
                                     PrivacyBudget& budget,
                                     const NoiseSource& noise,
                                     std::optional<double> tau_override = {});

}  // namespace dpsc
