#include "dpsc/candidates.hpp"

#include <algorithm>
#include <cmath>

#include "dpsc/heavy_path.hpp"

namespace dpsc {

namespace {

bool entry_less(const CandidateEntry& a, const CandidateEntry& b) {
  return a.str < b.str;
}

double union_log_arg(std::size_t ell, std::size_t n, std::size_t sigma) {
  const double l2n2 = static_cast<double>(ell) * static_cast<double>(ell) *
                      static_cast<double>(n) * static_cast<double>(n);
  return std::max(l2n2, static_cast<double>(sigma));
}

std::size_t common_prefix_len(const Symbols& a, std::size_t a_from,
                              const Symbols& b) {
  std::size_t k = 0;
  while (a_from + k < a.size() && k < b.size() && a[a_from + k] == b[k]) ++k;
  return k;
}

struct LevelNoiser {
  bool pure;
  double scale_b;     // Laplace scale (pure) or Gaussian sigma (approx)
  const NoiseSource* noise;

  double operator()(std::int64_t exact, const Symbols& str) const {
    if (noise->zero_noise()) return static_cast<double>(exact);
    Rng rng = noise->stream("cand/pow/" + str);
    const double y =
        pure ? laplace_sample(scale_b, rng) : gaussian_sample(scale_b, rng);
    return static_cast<double>(exact) + y;
  }
};

}  // namespace

bool PowSet::contains(const Symbols& s) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), s,
                             [](const CandidateEntry& e, const Symbols& v) {
                               return e.str < v;
                             });
  return it != entries.end() && it->str == s;
}

std::vector<CandidateEntry> candidates_of_length(std::size_t m,
                                                 const PowSet& pow,
                                                 const SuffixIndex& idx) {
  std::vector<CandidateEntry> out;
  const std::size_t half = pow.length;
  if (!(half < m && m < 2 * half)) {
    throw std::invalid_argument("length must satisfy 2^k < m < 2^(k+1)");
  }
  const std::size_t overlap = 2 * half - m;
  for (const auto& q1 : pow.entries) {
    for (const auto& q2 : pow.entries) {
      // suffix of q1 starting at m-half must equal the first `overlap`
      // symbols of q2
      if (common_prefix_len(q1.str, m - half, q2.str) < overlap) continue;
      Symbols s = q1.str;
      s.append(q2.str, overlap, half - overlap);
      auto witness = idx.find(s);
      out.push_back(CandidateEntry{std::move(s), witness});
    }
  }
  std::sort(out.begin(), out.end(), entry_less);
  return out;
}

std::vector<CandidateEntry> CandidateSet::of_length(
    std::size_t m, const SuffixIndex& idx) const {
  if (aborted() || m == 0 || m > ell) return {};
  if (std::has_single_bit(m)) {
    const std::size_t k = static_cast<std::size_t>(floor_log2(m));
    if (k < pow_sets.size()) return pow_sets[k].entries;
    return {};
  }
  const std::size_t k = static_cast<std::size_t>(floor_log2(m));
  if (k >= pow_sets.size()) return {};
  return candidates_of_length(m, pow_sets[k], idx);
}

double candidate_alpha_pure(std::size_t ell, std::size_t n, std::size_t sigma,
                            double eps, double beta) {
  const int levels = floor_log2(ell) + 1;
  const double eps1 = eps / levels;
  const double beta1 = beta / levels;
  return 2.0 * static_cast<double>(ell) / eps1 *
         std::log(union_log_arg(ell, n, sigma) / beta1);
}

double candidate_alpha_approx(std::size_t ell, std::int64_t cap, std::size_t n,
                              std::size_t sigma, double eps, double delta,
                              double beta) {
  const int levels = floor_log2(ell) + 1;
  const double eps1 = eps / levels;
  const double delta1 = delta / levels;
  const double beta1 = beta / levels;
  return 2.0 / eps1 *
         std::sqrt(2.0 * static_cast<double>(ell) * static_cast<double>(cap) *
                   std::log(2.0 / delta1) *
                   std::log(2.0 * union_log_arg(ell, n, sigma) / beta1));
}

namespace {

CandidateSet build_candidates_impl(const Database& db, const SuffixIndex& idx,
                                   PrivacyBudget& budget,
                                   const NoiseSource& noise, bool pure,
                                   std::optional<double> tau_override) {
  if (pure && budget.delta() != 0.0) {
    throw std::invalid_argument("pure construction requires delta = 0");
  }
  if (!pure && !(budget.delta() > 0.0)) {
    throw std::invalid_argument("approximate construction requires delta > 0");
  }
  const std::size_t ell = db.ell;
  const std::size_t n = db.size();
  const std::size_t sigma = static_cast<std::size_t>(db.alphabet.size());
  const std::int64_t cap = budget.cap();
  const int levels = floor_log2(ell) + 1;
  const double eps1 = budget.epsilon() / levels;
  const double delta1 = budget.delta() / levels;

  double alpha, noise_scale;
  if (pure) {
    alpha = candidate_alpha_pure(ell, n, sigma, budget.epsilon(), budget.beta());
    noise_scale = laplace_scale(2.0 * static_cast<double>(ell), eps1);
  } else {
    alpha = candidate_alpha_approx(ell, cap, n, sigma, budget.epsilon(),
                                   budget.delta(), budget.beta());
    const double l2 = std::sqrt(2.0 * static_cast<double>(ell) *
                                static_cast<double>(cap));
    noise_scale = gaussian_sigma(l2, eps1, delta1);
  }
  const double tau = tau_override.value_or(2.0 * alpha);
  const LevelNoiser noiser{pure, noise_scale, &noise};

  CandidateSet out;
  out.tau = tau;
  out.alpha = alpha;
  out.ell = ell;
  const std::int64_t size_limit =
      static_cast<std::int64_t>(n) * static_cast<std::int64_t>(ell);

  for (int k = 0; k < levels; ++k) {
    budget.charge(eps1, delta1, "candidates/level" + std::to_string(k));
    PowSet ps;
    ps.length = std::size_t{1} << k;
    if (k == 0) {
      for (int c = 0; c < db.alphabet.size(); ++c) {
        Symbols s(1, static_cast<char>(c));
        const std::int64_t exact = idx.count_db(s, cap);
        if (noiser(exact, s) >= tau) {
          ps.entries.push_back(CandidateEntry{s, idx.find(s)});
        }
      }
    } else {
      const PowSet& prev = out.pow_sets.back();
      for (const auto& q1 : prev.entries) {
        for (const auto& q2 : prev.entries) {
          Symbols s = q1.str + q2.str;
          // non-occurring concatenations keep a noised zero count
          std::optional<std::size_t> witness;
          if (q1.witness_pos && q2.witness_pos) {
            witness = idx.concat_occurrence(*q1.witness_pos, q1.str.size(),
                                            *q2.witness_pos, q2.str.size());
          }
          const std::int64_t exact = witness ? idx.count_db(s, cap) : 0;
          if (noiser(exact, s) >= tau) {
            ps.entries.push_back(CandidateEntry{std::move(s), witness});
          }
          if (static_cast<std::int64_t>(ps.entries.size()) > size_limit) break;
        }
        if (static_cast<std::int64_t>(ps.entries.size()) > size_limit) break;
      }
    }
    std::sort(ps.entries.begin(), ps.entries.end(), entry_less);
    const bool too_big =
        static_cast<std::int64_t>(ps.entries.size()) > size_limit;
    out.pow_sets.push_back(std::move(ps));
    if (too_big) {
      out.abort_level = k;
      // the declared stage budget is consumed in full even on abort
      for (int k2 = k + 1; k2 < levels; ++k2) {
        budget.charge(eps1, delta1, "candidates/level" + std::to_string(k2));
      }
      break;
    }
  }
  return out;
}

}  // namespace

CandidateSet build_candidates_pure(const Database& db, const SuffixIndex& idx,
                                   PrivacyBudget& budget,
                                   const NoiseSource& noise,
                                   std::optional<double> tau_override) {
  return build_candidates_impl(db, idx, budget, noise, true, tau_override);
}

CandidateSet build_candidates_approx(const Database& db,
                                     const SuffixIndex& idx,
                                     PrivacyBudget& budget,
                                     const NoiseSource& noise,
                                     std::optional<double> tau_override) {
  return build_candidates_impl(db, idx, budget, noise, false, tau_override);
}

}  // namespace dpsc
