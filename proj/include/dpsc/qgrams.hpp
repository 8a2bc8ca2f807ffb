#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpsc/corpus.hpp"
#include "dpsc/counting_trie.hpp"
#include "dpsc/mechanisms.hpp"
#include "dpsc/suffix_index.hpp"

namespace dpsc {

/// Per-string noise draws recorded during a q-gram build. Exposed so tests
/// can check the conditional-coupling event between the reference and the
/// support-restricted construction.
struct QGramTrace {
  struct Entry {
    int level;  // 0..j for doubling, -1 for the final stage
    Symbols str;
    std::int64_t exact;
    double noise;
  };
  std::vector<Entry> entries;
};

struct QGramParams {
  double epsilon = 1.0;
  double delta = 0.0;
  double beta = 0.05;
  std::int64_t cap = -1;  // -1: cap = ell
  std::uint64_t seed = 0;
  bool zero_noise = false;
  std::optional<double> tau_override;  // testing; applied at every stage
};

/// Fixed-length pipeline under pure DP: length-doubling to 2^floor(log2 q)
/// on half the budget, then one overlap-assembled candidate set of length q
/// noised with the other half and pruned at twice its error bound.
/// Candidates that never occur still get a noised zero count.
PrivateCountTrie build_qgrams_pure(const Database& db, const SuffixIndex& idx,
                                   std::size_t q, const QGramParams& params,
                                   const NoiseSource* noise_override = nullptr,
                                   QGramTrace* trace = nullptr);

/// Approximate-DP pipeline that skips strings with a zero true count: only
/// substrings occurring in the database are ever noised, so the retained set
/// is always supported on the data. Noise per string is keyed by the string
/// itself, which couples this construction to the reference one below.
PrivateCountTrie build_qgrams_approx(const Database& db, const SuffixIndex& idx,
                                     std::size_t q, const QGramParams& params,
                                     const NoiseSource* noise_override = nullptr,
                                     QGramTrace* trace = nullptr);

/// Reference variant that noises every candidate, including zero-count ones
/// (testing only; quadratic in the worst case). With the same seed it draws
/// identical noise for the strings it shares with build_qgrams_approx.
PrivateCountTrie build_qgrams_approx_reference(
    const Database& db, const SuffixIndex& idx, std::size_t q,
    const QGramParams& params, const NoiseSource* noise_override = nullptr,
    QGramTrace* trace = nullptr);

/// Stored noisy count of a retained q-gram, 0 if absent. The pattern length
/// must equal the structure's q.
double query_qgram(const PrivateCountTrie& qs, const Symbols& pattern);

/// The alpha used by the approximate pipeline (also its retained-count error
/// bound).
double qgram_alpha_approx(std::size_t ell, std::int64_t cap, std::size_t n,
                          std::size_t sigma, std::size_t q, double eps,
                          double delta, double beta);
/// beta_1 of the approximate pipeline: min(beta/(floor(log2 q)+2),
/// delta/(3 e^eps (floor(log2 q)+2))).
double qgram_beta1_approx(std::size_t q, double eps, double delta, double beta);

}  // namespace dpsc
