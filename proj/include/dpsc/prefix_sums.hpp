#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpsc/mechanisms.hpp"

namespace dpsc {

/// Disjoint dyadic intervals (1-based, inclusive) whose union is [1,m],
/// taken from the decomposition of [1,T]. At most floor(log2 T)+1 blocks.
std::vector<std::pair<std::size_t, std::size_t>> dyadic_cover(std::size_t m,
                                                              std::size_t T);

struct PrefixSums {
  /// sums[i][m-1] estimates the m-th prefix sum of sequence i.
  std::vector<std::vector<double>> sums;
  std::size_t horizon = 0;  // T: power of two >= the longest sequence
};

/// Noisy prefix sums for k integer sequences at once. Each dyadic partial sum
/// gets independent Lap(L*(floor(log2 T)+1)/eps) noise, where L bounds the
/// summed L1 sensitivity of all sequences; a prefix is assembled from at most
/// floor(log2 T)+1 noisy blocks. Zero-noise mode returns exact prefix sums.
PrefixSums binary_tree_prefix_sums(
    const std::vector<std::vector<std::int64_t>>& seqs, double total_l1_sens,
    double eps, const NoiseSource& noise, std::string_view stream_prefix);

/// Gaussian variant: per-block noise N(0, sigma^2) with
/// sigma = eps^-1 sqrt(2 * L * per_seq_cap * (floor(log2 T)+1) * ln(2/delta)).
/// per_seq_cap must bound the L1 sensitivity of each single sequence.
PrefixSums binary_tree_prefix_sums_gaussian(
    const std::vector<std::vector<std::int64_t>>& seqs, double total_l1_sens,
    double per_seq_cap, double eps, double delta, const NoiseSource& noise,
    std::string_view stream_prefix);

/// The sigma used by the Gaussian variant, for bound computations.
double prefix_sums_gaussian_sigma(double total_l1_sens, double per_seq_cap,
                                  double eps, double delta, std::size_t T);

/// Error bound for the Laplace variant, holding for every prefix of every
/// sequence simultaneously with probability at least 1-beta (union over at
/// most k*T prefixes).
double prefix_sums_bound(double total_l1_sens, double eps, std::size_t k,
                         std::size_t T, double beta);

/// Same guarantee for the Gaussian variant.
double prefix_sums_gaussian_bound(double total_l1_sens, double per_seq_cap,
                                  double eps, double delta, std::size_t k,
                                  std::size_t T, double beta);

}  // namespace dpsc
