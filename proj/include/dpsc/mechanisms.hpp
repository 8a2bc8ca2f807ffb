#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dpsc {

/// Raised when a spend would exceed the remaining privacy budget.
class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the Gaussian mechanism is invoked with epsilon outside (0,1).
/// Callers holding a larger budget must split it into sub-unit shares first.
class GaussianEpsilonRange : public std::invalid_argument {
 public:
  explicit GaussianEpsilonRange(const std::string& what)
      : std::invalid_argument(what) {}
};

/// xoshiro256** seeded via splitmix64. Small state, cheap to construct,
/// identical output on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  /// Uniform double in the open interval (0,1).
  double next_unit_open();

 private:
  std::uint64_t s_[4];
};

/// Root of all randomness for one build. Substreams are derived
/// deterministically from (seed, stream id), so the same id always replays
/// the same sample sequence regardless of draw order elsewhere.
///
/// A NoiseSource with zero_noise set turns every mechanism into the identity
/// map; builds flag this loudly in their metadata.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed, bool zero_noise = false)
      : seed_(seed), zero_(zero_noise) {}

  Rng stream(std::string_view stream_id) const;
  bool zero_noise() const { return zero_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  bool zero_;
};

/// One draw from the Laplace density (1/2b)exp(-|x|/b), via inverse CDF so
/// that draws are scale-equivariant under a shared uniform stream.
double laplace_sample(double scale_b, Rng& rng);

/// One N(0, sigma^2) draw (Box-Muller).
double gaussian_sample(double sigma, Rng& rng);

/// Noise scale of the Laplace mechanism for L1 sensitivity l1_sens at eps.
double laplace_scale(double l1_sens, double eps);

/// Max-coordinate error of the Laplace mechanism over k outputs, holding
/// with probability at least 1-beta: eps^-1 * l1_sens * ln(k/beta).
double laplace_mechanism_bound(double l1_sens, double eps, std::size_t k,
                               double beta);

/// Tail bound for a sum of k independent Lap(b) variables:
/// 2b*sqrt(2 ln(2/beta)) * max{ sqrt(k), sqrt(ln(2/beta)) }, exceeded with
/// probability at most beta.
double sum_laplace_tail(std::size_t k, double scale_b, double beta);

/// Standard deviation used by the Gaussian mechanism: c * l2_sens / eps with
/// c = sqrt(2 ln(1.25/delta)) + 1e-6. The additive margin keeps the strict
/// inequality c^2 > 2 ln(1.25/delta) required for (eps,delta)-DP.
/// Requires 0 < eps < 1; throws GaussianEpsilonRange otherwise.
double gaussian_sigma(double l2_sens, double eps, double delta);

/// Max-coordinate error of the Gaussian mechanism over k outputs, holding
/// with probability at least 1-beta:
/// 2 eps^-1 l2_sens sqrt(ln(2/delta) ln(2k/beta)).
double gaussian_mechanism_bound(double l2_sens, double eps, double delta,
                                std::size_t k, double beta);

/// values + iid Lap(l1_sens/eps) per coordinate. Identity in zero-noise mode.
std::vector<double> laplace_mechanism(std::vector<double> values,
                                      double l1_sens, double eps,
                                      const NoiseSource& noise,
                                      std::string_view stream_id);

/// values + iid N(0, gaussian_sigma(l2_sens,eps,delta)^2) per coordinate.
std::vector<double> gaussian_mechanism(std::vector<double> values,
                                       double l2_sens, double eps,
                                       double delta, const NoiseSource& noise,
                                       std::string_view stream_id);

struct BudgetSpend {
  std::string label;
  double epsilon;
  double delta;
};

/// (epsilon, delta, beta, cap) plus a conservation ledger. Splitting off a
/// child budget or charging a mechanism reduces what is left; overdrafts
/// throw BudgetExceeded. Simple (additive) composition only.
class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, double delta, double beta, std::int64_t cap);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  double beta() const { return beta_; }
  std::int64_t cap() const { return cap_; }

  double epsilon_remaining() const { return epsilon_ - epsilon_spent_; }
  double delta_remaining() const { return delta_ - delta_spent_; }

  /// Child with (share*eps, share*delta, share*beta, cap); charges this ledger.
  PrivacyBudget split_off(double share, const std::string& label);
  std::vector<PrivacyBudget> split(std::span<const double> shares,
                                   const std::string& label);

  /// Record a direct spend; throws BudgetExceeded if it would overdraw.
  void charge(double eps, double delta, const std::string& label);

  const std::vector<BudgetSpend>& ledger() const { return ledger_; }

 private:
  double epsilon_;
  double delta_;
  double beta_;
  std::int64_t cap_;
  double epsilon_spent_ = 0.0;
  double delta_spent_ = 0.0;
  std::vector<BudgetSpend> ledger_;
};

}  // namespace dpsc
