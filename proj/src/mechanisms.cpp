#include "dpsc/mechanisms.hpp"

#include <cmath>
#include <numbers>

namespace dpsc {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_unit_open() {
  // 52 random mantissa bits, offset by half an ulp: strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

Rng NoiseSource::stream(std::string_view stream_id) const {
  std::uint64_t x = seed_ ^ fnv1a(stream_id);
  return Rng(splitmix64(x));
}

double laplace_sample(double scale_b, Rng& rng) {
  if (!(scale_b > 0.0)) throw std::invalid_argument("laplace scale must be > 0");
  const double u = rng.next_unit_open() - 0.5;
  const double s = u < 0.0 ? -1.0 : 1.0;
  return -scale_b * s * std::log(1.0 - 2.0 * std::abs(u));
}

double gaussian_sample(double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be > 0");
  const double u1 = rng.next_unit_open();
  const double u2 = rng.next_unit_open();
  return sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double laplace_scale(double l1_sens, double eps) {
  if (!(l1_sens > 0.0)) throw std::invalid_argument("l1 sensitivity must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  return l1_sens / eps;
}

double laplace_mechanism_bound(double l1_sens, double eps, std::size_t k,
                               double beta) {
  if (k == 0) return 0.0;
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  return laplace_scale(l1_sens, eps) *
         std::log(static_cast<double>(k) / beta);
}

double sum_laplace_tail(std::size_t k, double scale_b, double beta) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(scale_b > 0.0)) throw std::invalid_argument("scale must be > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  const double ln2b = std::log(2.0 / beta);
  return 2.0 * scale_b * std::sqrt(2.0 * ln2b) *
         std::max(std::sqrt(static_cast<double>(k)), std::sqrt(ln2b));
}

double gaussian_sigma(double l2_sens, double eps, double delta) {
  if (!(l2_sens > 0.0)) throw std::invalid_argument("l2 sensitivity must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  if (!(eps > 0.0) || eps >= 1.0) {
    throw GaussianEpsilonRange(
        "gaussian mechanism requires 0 < epsilon < 1; split the budget into "
        "smaller shares before calling");
  }
  const double c = std::sqrt(2.0 * std::log(1.25 / delta)) + 1e-6;
  return c * l2_sens / eps;
}

double gaussian_mechanism_bound(double l2_sens, double eps, double delta,
                                std::size_t k, double beta) {
  if (k == 0) return 0.0;
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  return 2.0 / eps * l2_sens *
         std::sqrt(std::log(2.0 / delta) *
                   std::log(2.0 * static_cast<double>(k) / beta));
}

std::vector<double> laplace_mechanism(std::vector<double> values,
                                      double l1_sens, double eps,
                                      const NoiseSource& noise,
                                      std::string_view stream_id) {
  const double b = laplace_scale(l1_sens, eps);
  if (noise.zero_noise()) return values;
  Rng rng = noise.stream(stream_id);
  for (auto& v : values) v += laplace_sample(b, rng);
  return values;
}

std::vector<double> gaussian_mechanism(std::vector<double> values,
                                       double l2_sens, double eps,
                                       double delta, const NoiseSource& noise,
                                       std::string_view stream_id) {
  const double sigma = gaussian_sigma(l2_sens, eps, delta);
  if (noise.zero_noise()) return values;
  Rng rng = noise.stream(stream_id);
  for (auto& v : values) v += gaussian_sample(sigma, rng);
  return values;
}

PrivacyBudget::PrivacyBudget(double epsilon, double delta, double beta,
                             std::int64_t cap)
    : epsilon_(epsilon), delta_(delta), beta_(beta), cap_(cap) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (delta < 0.0 || delta >= 1.0) throw std::invalid_argument("delta must be in [0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
}

PrivacyBudget PrivacyBudget::split_off(double share, const std::string& label) {
  if (!(share > 0.0 && share <= 1.0)) throw std::invalid_argument("share must be in (0,1]");
  PrivacyBudget child(epsilon_ * share, delta_ * share, beta_ * share, cap_);
  charge(child.epsilon(), child.delta(), label);
  return child;
}

std::vector<PrivacyBudget> PrivacyBudget::split(std::span<const double> shares,
                                                const std::string& label) {
  double total = 0.0;
  for (double s : shares) {
    if (!(s > 0.0)) throw std::invalid_argument("shares must be positive");
    total += s;
  }
  if (total > 1.0 + 1e-12) throw std::invalid_argument("shares must sum to at most 1");
  std::vector<PrivacyBudget> children;
  children.reserve(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    children.push_back(split_off(shares[i], label + "/" + std::to_string(i)));
  }
  return children;
}

void PrivacyBudget::charge(double eps, double delta, const std::string& label) {
  // small slack for accumulated floating point error in even splits
  const double slack = 1e-9 * (1.0 + epsilon_);
  if (eps < 0.0 || delta < 0.0) throw std::invalid_argument("negative spend");
  if (epsilon_spent_ + eps > epsilon_ + slack ||
      delta_spent_ + delta > delta_ + slack * (delta_ > 0 ? 1.0 : 0.0) + 1e-18) {
    throw BudgetExceeded("privacy budget exceeded at spend '" + label + "'");
  }
  epsilon_spent_ += eps;
  delta_spent_ += delta;
  ledger_.push_back(BudgetSpend{label, eps, delta});
}

}  // namespace dpsc
