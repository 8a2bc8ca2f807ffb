#include "dpsc/prefix_sums.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "dpsc/heavy_path.hpp"

namespace dpsc {

std::vector<std::pair<std::size_t, std::size_t>> dyadic_cover(std::size_t m,
                                                              std::size_t T) {
  if (m > T) throw std::invalid_argument("prefix end beyond horizon");
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::size_t prev = 0;
  for (int i = floor_log2(T); i >= 0 && prev < m; --i) {
    const std::size_t len = std::size_t{1} << i;
    if (m - prev >= len) {
      blocks.emplace_back(prev + 1, prev + len);
      prev += len;
    }
  }
  return blocks;
}

namespace {

// Core shared by both variants: per-sequence dyadic partial sums with iid
// noise from `draw`, then prefix assembly.
template <typename DrawFn>
PrefixSums run_mechanism(const std::vector<std::vector<std::int64_t>>& seqs,
                         const NoiseSource& noise,
                         std::string_view stream_prefix, DrawFn&& draw) {
  PrefixSums out;
  std::size_t maxlen = 0;
  for (const auto& s : seqs) maxlen = std::max(maxlen, s.size());
  if (maxlen == 0) {
    out.sums.assign(seqs.size(), {});
    return out;
  }
  const std::size_t T = std::bit_ceil(maxlen);
  out.horizon = T;
  const int levels = floor_log2(T) + 1;
  out.sums.reserve(seqs.size());
  for (std::size_t si = 0; si < seqs.size(); ++si) {
    const auto& a = seqs[si];
    Rng rng = noise.stream(std::string(stream_prefix) + "/seq=" +
                           std::to_string(si));
    // noisy[i][j] covers [j*2^i+1, (j+1)*2^i]; only blocks ending within the
    // sequence are ever used by a cover
    std::vector<std::vector<double>> noisy(static_cast<std::size_t>(levels));
    for (int lv = 0; lv < levels; ++lv) {
      const std::size_t len = std::size_t{1} << lv;
      for (std::size_t j = 0; (j + 1) * len <= a.size(); ++j) {
        std::int64_t s = 0;
        for (std::size_t t = j * len; t < (j + 1) * len; ++t) s += a[t];
        const double y = noise.zero_noise() ? 0.0 : draw(rng);
        noisy[static_cast<std::size_t>(lv)].push_back(static_cast<double>(s) + y);
      }
    }
    std::vector<double> prefix(a.size());
    for (std::size_t m = 1; m <= a.size(); ++m) {
      double v = 0.0;
      for (const auto& [b, e] : dyadic_cover(m, T)) {
        const std::size_t len = e - b + 1;
        const int lv = floor_log2(len);
        v += noisy[static_cast<std::size_t>(lv)][(b - 1) / len];
      }
      prefix[m - 1] = v;
    }
    out.sums.push_back(std::move(prefix));
  }
  return out;
}

}  // namespace

PrefixSums binary_tree_prefix_sums(
    const std::vector<std::vector<std::int64_t>>& seqs, double total_l1_sens,
    double eps, const NoiseSource& noise, std::string_view stream_prefix) {
  if (!(total_l1_sens > 0.0)) throw std::invalid_argument("L must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  std::size_t maxlen = 0;
  for (const auto& s : seqs) maxlen = std::max(maxlen, s.size());
  const std::size_t T = maxlen == 0 ? 1 : std::bit_ceil(maxlen);
  const double b = total_l1_sens * (floor_log2(T) + 1) / eps;
  return run_mechanism(seqs, noise, stream_prefix,
                       [b](Rng& rng) { return laplace_sample(b, rng); });
}

PrefixSums binary_tree_prefix_sums_gaussian(
    const std::vector<std::vector<std::int64_t>>& seqs, double total_l1_sens,
    double per_seq_cap, double eps, double delta, const NoiseSource& noise,
    std::string_view stream_prefix) {
  if (!(total_l1_sens > 0.0)) throw std::invalid_argument("L must be > 0");
  if (!(per_seq_cap > 0.0)) throw std::invalid_argument("per-sequence cap must be > 0");
  if (!(eps > 0.0) || eps >= 1.0) {
    throw GaussianEpsilonRange(
        "gaussian prefix sums require 0 < epsilon < 1; split the budget");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  std::size_t maxlen = 0;
  for (const auto& s : seqs) maxlen = std::max(maxlen, s.size());
  const std::size_t T = maxlen == 0 ? 1 : std::bit_ceil(maxlen);
  const double sigma =
      prefix_sums_gaussian_sigma(total_l1_sens, per_seq_cap, eps, delta, T);
  return run_mechanism(seqs, noise, stream_prefix, [sigma](Rng& rng) {
    return gaussian_sample(sigma, rng);
  });
}

double prefix_sums_gaussian_sigma(double total_l1_sens, double per_seq_cap,
                                  double eps, double delta, std::size_t T) {
  const int levels = floor_log2(T) + 1;
  return std::sqrt(2.0 * total_l1_sens * per_seq_cap * levels *
                   std::log(2.0 / delta)) /
         eps;
}

double prefix_sums_bound(double total_l1_sens, double eps, std::size_t k,
                         std::size_t T, double beta) {
  if (k == 0 || T == 0) return 0.0;
  const int levels = floor_log2(T) + 1;
  const double b = total_l1_sens * levels / eps;
  const double per_prefix_beta =
      beta / (static_cast<double>(k) * static_cast<double>(T));
  return sum_laplace_tail(static_cast<std::size_t>(levels), b, per_prefix_beta);
}

double prefix_sums_gaussian_bound(double total_l1_sens, double per_seq_cap,
                                  double eps, double delta, std::size_t k,
                                  std::size_t T, double beta) {
  if (k == 0 || T == 0) return 0.0;
  const int levels = floor_log2(T) + 1;
  const double sigma =
      prefix_sums_gaussian_sigma(total_l1_sens, per_seq_cap, eps, delta, T);
  // a prefix aggregates at most `levels` independent gaussians
  const double sigma1 = sigma * std::sqrt(static_cast<double>(levels));
  const double kt = static_cast<double>(k) * static_cast<double>(T);
  return sigma1 * std::sqrt(2.0 * std::log(2.0 * kt / beta));
}

}  // namespace dpsc
