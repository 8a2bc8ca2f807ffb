#include "dpsc/qgrams.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "dpsc/heavy_path.hpp"

namespace dpsc {

namespace {

double union_log_arg(std::size_t ell, std::size_t n, std::size_t sigma) {
  const double l2n2 = static_cast<double>(ell) * static_cast<double>(ell) *
                      static_cast<double>(n) * static_cast<double>(n);
  return std::max(l2n2, static_cast<double>(sigma));
}

struct StringNoiser {
  bool pure;
  double scale;  // Laplace scale or Gaussian sigma
  const NoiseSource* noise;
  QGramTrace* trace;

  double operator()(int level, const Symbols& str, std::int64_t exact,
                    const char* stage_tag) const {
    double y = 0.0;
    if (!noise->zero_noise()) {
      Rng rng = noise->stream(std::string(stage_tag) + str);
      y = pure ? laplace_sample(scale, rng) : gaussian_sample(scale, rng);
    }
    if (trace) trace->entries.push_back({level, str, exact, y});
    return static_cast<double>(exact) + y;
  }
};

PrivateCountTrie finish_structure(
    const std::vector<std::pair<Symbols, double>>& retained, const Database& db,
    StructureMeta meta) {
  // retained q-grams arranged as a trie; interior nodes carry no count
  std::vector<std::pair<Symbols, double>> sorted = retained;
  std::sort(sorted.begin(), sorted.end());
  std::vector<PrivateCountTrie::Node> nodes;
  nodes.push_back(PrivateCountTrie::Node{-1, 0, 0.0});
  std::map<std::pair<int, unsigned char>, int> child;
  for (const auto& [s, c] : sorted) {
    int v = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const unsigned char sym = static_cast<unsigned char>(s[i]);
      auto it = child.find({v, sym});
      if (it == child.end()) {
        const int nv = static_cast<int>(nodes.size());
        nodes.push_back(PrivateCountTrie::Node{v, sym, 0.0});
        child[{v, sym}] = nv;
        v = nv;
      } else {
        v = it->second;
      }
    }
    nodes[static_cast<std::size_t>(v)].count = c;
  }
  return PrivateCountTrie(std::move(nodes), db.alphabet, std::move(meta));
}

// Candidates of length `len` for the final stage: prefix and (overlapping)
// suffix of length `half` both in `prev`. For len == half this is prev
// itself.
std::vector<Symbols> overlap_candidates(const std::vector<Symbols>& prev,
                                        std::size_t half, std::size_t len) {
  if (len == half) return prev;
  std::vector<Symbols> out;
  const std::size_t overlap = 2 * half - len;
  for (const auto& q1 : prev) {
    for (const auto& q2 : prev) {
      if (q1.compare(len - half, overlap, q2, 0, overlap) == 0) {
        Symbols s = q1;
        s.append(q2, overlap, half - overlap);
        out.push_back(std::move(s));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double qgram_beta1_approx(std::size_t q, double eps, double delta,
                          double beta) {
  const double stages = floor_log2(q) + 2;
  return std::min(beta / stages, delta / (3.0 * std::exp(eps) * stages));
}

double qgram_alpha_approx(std::size_t ell, std::int64_t cap, std::size_t n,
                          std::size_t sigma, std::size_t q, double eps,
                          double delta, double beta) {
  const double stages = floor_log2(q) + 2;
  const double eps1 = eps / stages;
  const double beta1 = qgram_beta1_approx(q, eps, delta, beta);
  const double delta1 = beta1;
  return 2.0 / eps1 *
         std::sqrt(2.0 * static_cast<double>(ell) * static_cast<double>(cap) *
                   std::log(2.0 / delta1) *
                   std::log(2.0 * union_log_arg(ell, n, sigma) / beta1));
}

PrivateCountTrie build_qgrams_pure(const Database& db, const SuffixIndex& idx,
                                   std::size_t q, const QGramParams& params,
                                   const NoiseSource* noise_override,
                                   QGramTrace* trace) {
  if (q < 1 || q > db.ell) throw std::invalid_argument("q must lie in [1, ell]");
  if (params.delta != 0.0) throw std::invalid_argument("pure q-gram pipeline requires delta = 0");
  const std::int64_t cap =
      params.cap < 0 ? static_cast<std::int64_t>(db.ell) : params.cap;
  PrivacyBudget budget(params.epsilon, 0.0, params.beta, cap);
  NoiseSource local(params.seed, params.zero_noise);
  const NoiseSource& noise = noise_override ? *noise_override : local;

  const std::size_t n = db.size();
  const std::size_t sigma = static_cast<std::size_t>(db.alphabet.size());
  const int j = floor_log2(q);
  const int levels = j + 1;
  const double eps_pow = params.epsilon / 2.0;
  const double eps1 = eps_pow / levels;
  const double beta1 = params.beta / 2.0 / levels;
  const double alpha_level =
      2.0 * static_cast<double>(db.ell) / eps1 *
      std::log(union_log_arg(db.ell, n, sigma) / beta1);
  const double tau_level = params.tau_override.value_or(2.0 * alpha_level);
  const StringNoiser level_noiser{
      true, laplace_scale(2.0 * static_cast<double>(db.ell), eps1), &noise,
      trace};

  std::vector<Symbols> prev;
  std::optional<int> abort_level;
  const std::int64_t size_limit =
      static_cast<std::int64_t>(n) * static_cast<std::int64_t>(db.ell);
  for (int k = 0; k < levels; ++k) {
    budget.charge(eps1, 0.0, "qgram/level" + std::to_string(k));
    std::vector<Symbols> cur;
    if (k == 0) {
      for (int c = 0; c < db.alphabet.size(); ++c) {
        Symbols s(1, static_cast<char>(c));
        if (level_noiser(k, s, idx.count_db(s, cap), "qgram/pow/") >= tau_level) {
          cur.push_back(std::move(s));
        }
      }
    } else {
      for (const auto& a : prev) {
        for (const auto& b : prev) {
          Symbols s = a + b;
          if (level_noiser(k, s, idx.count_db(s, cap), "qgram/pow/") >=
              tau_level) {
            cur.push_back(std::move(s));
          }
        }
      }
    }
    std::sort(cur.begin(), cur.end());
    if (static_cast<std::int64_t>(cur.size()) > size_limit) {
      abort_level = k;
      for (int k2 = k + 1; k2 < levels; ++k2) {
        budget.charge(eps1, 0.0, "qgram/level" + std::to_string(k2));
      }
      prev.clear();
      break;
    }
    prev = std::move(cur);
  }

  // final stage: one fresh noisy count per candidate of length exactly q
  budget.charge(params.epsilon / 2.0, 0.0, "qgram/final");
  const double eps_final = params.epsilon / 2.0;
  const double alpha_final =
      2.0 * static_cast<double>(db.ell) / eps_final *
      std::log(union_log_arg(db.ell, n, sigma) / (params.beta / 2.0));
  const double tau_final = params.tau_override.value_or(2.0 * alpha_final);
  const StringNoiser final_noiser{
      true, laplace_scale(2.0 * static_cast<double>(db.ell), eps_final),
      &noise, trace};

  std::vector<std::pair<Symbols, double>> retained;
  if (!abort_level) {
    for (const auto& s :
         overlap_candidates(prev, std::size_t{1} << j, q)) {
      const double noisy = final_noiser(-1, s, idx.count_db(s, cap), "qgram/final/");
      if (noisy >= tau_final) retained.emplace_back(s, noisy);
    }
  }

  StructureMeta meta;
  meta.mode = Mode::Pure;
  meta.qgram = true;
  meta.q = q;
  meta.n = n;
  meta.ell = db.ell;
  meta.sigma = sigma;
  meta.cap = cap;
  meta.epsilon = params.epsilon;
  meta.beta = params.beta;
  meta.seed = params.seed;
  meta.zero_noise = noise.zero_noise();
  meta.abort_level = abort_level.value_or(-1);
  meta.alpha_candidates = alpha_level;
  meta.tau_candidates = tau_level;
  meta.alpha_node = alpha_final;
  meta.prune_threshold = tau_final;
  meta.alpha_all = std::max({alpha_final, tau_level + alpha_level,
                             tau_final + alpha_final});
  return finish_structure(retained, db, std::move(meta));
}

namespace {

// Shared body of the two approximate variants. `support_only` enumerates
// occurring substrings through the index; the reference variant noises every
// candidate string.
PrivateCountTrie build_qgrams_approx_impl(const Database& db,
                                          const SuffixIndex& idx,
                                          std::size_t q,
                                          const QGramParams& params,
                                          const NoiseSource* noise_override,
                                          QGramTrace* trace,
                                          bool support_only) {
  if (q < 1 || q > db.ell) throw std::invalid_argument("q must lie in [1, ell]");
  if (!(params.delta > 0.0)) throw std::invalid_argument("approximate q-gram pipeline requires delta > 0");
  const std::int64_t cap =
      params.cap < 0 ? static_cast<std::int64_t>(db.ell) : params.cap;
  PrivacyBudget budget(params.epsilon, params.delta, params.beta, cap);
  NoiseSource local(params.seed, params.zero_noise);
  const NoiseSource& noise = noise_override ? *noise_override : local;

  const std::size_t n = db.size();
  const std::size_t sigma = static_cast<std::size_t>(db.alphabet.size());
  const int j = floor_log2(q);
  const double stages = j + 2;
  const double eps1 = params.epsilon / stages;
  if (eps1 >= 1.0) {
    throw GaussianEpsilonRange(
        "per-stage epsilon must be below 1; split the budget");
  }
  const double beta1 = qgram_beta1_approx(q, params.epsilon, params.delta,
                                          params.beta);
  const double delta1 = beta1;
  const double sigma_noise =
      2.0 / eps1 *
      std::sqrt(2.0 * static_cast<double>(db.ell) * static_cast<double>(cap) *
                std::log(2.0 / delta1));
  const double alpha = qgram_alpha_approx(db.ell, cap, n, sigma, q,
                                          params.epsilon, params.delta,
                                          params.beta);
  const double tau = params.tau_override.value_or(2.0 * alpha);
  const StringNoiser noiser{false, sigma_noise, &noise, trace};

  // membership helper over the previous level
  auto in_prev = [](const std::vector<Symbols>& prev, const Symbols& s) {
    return std::binary_search(prev.begin(), prev.end(), s);
  };

  std::vector<Symbols> prev;
  std::optional<int> abort_level;
  const std::int64_t size_limit =
      static_cast<std::int64_t>(n) * static_cast<std::int64_t>(db.ell);
  for (int k = 0; k <= j; ++k) {
    budget.charge(eps1, params.delta / stages, "qgram/level" + std::to_string(k));
    const std::size_t len = std::size_t{1} << k;
    std::vector<Symbols> cur;
    if (support_only) {
      // only substrings that occur in the database are ever noised
      for (const auto& ds : idx.distinct_substrings(len)) {
        Symbols s = idx.substring_at(ds.text_pos, len);
        if (k > 0) {
          const std::size_t half = len / 2;
          if (!in_prev(prev, s.substr(0, half)) ||
              !in_prev(prev, s.substr(half))) {
            continue;
          }
        }
        const std::int64_t exact = idx.capped_count_of_range(ds.sa_lo, ds.sa_hi, cap);
        if (noiser(k, s, exact, "qgram/pow/") >= tau) cur.push_back(std::move(s));
      }
    } else {
      std::vector<Symbols> universe;
      if (k == 0) {
        for (int c = 0; c < db.alphabet.size(); ++c) {
          universe.emplace_back(1, static_cast<char>(c));
        }
      } else {
        for (const auto& a : prev)
          for (const auto& b : prev) universe.push_back(a + b);
      }
      for (auto& s : universe) {
        if (noiser(k, s, idx.count_db(s, cap), "qgram/pow/") >= tau) {
          cur.push_back(std::move(s));
        }
      }
    }
    std::sort(cur.begin(), cur.end());
    if (static_cast<std::int64_t>(cur.size()) > size_limit) {
      abort_level = k;
      for (int k2 = k + 1; k2 <= j; ++k2) {
        budget.charge(eps1, params.delta / stages, "qgram/level" + std::to_string(k2));
      }
      prev.clear();
      break;
    }
    prev = std::move(cur);
  }

  budget.charge(eps1, params.delta / stages, "qgram/final");
  std::vector<std::pair<Symbols, double>> retained;
  if (!abort_level) {
    const std::size_t half = std::size_t{1} << j;
    if (support_only) {
      for (const auto& ds : idx.distinct_substrings(q)) {
        Symbols s = idx.substring_at(ds.text_pos, q);
        if (!in_prev(prev, s.substr(0, half)) ||
            !in_prev(prev, s.substr(q - half))) {
          continue;
        }
        const std::int64_t exact = idx.capped_count_of_range(ds.sa_lo, ds.sa_hi, cap);
        const double noisy = noiser(-1, s, exact, "qgram/final/");
        if (noisy >= tau) retained.emplace_back(std::move(s), noisy);
      }
    } else {
      for (const auto& s : overlap_candidates(prev, half, q)) {
        const double noisy = noiser(-1, s, idx.count_db(s, cap), "qgram/final/");
        if (noisy >= tau) retained.emplace_back(s, noisy);
      }
    }
  }

  StructureMeta meta;
  meta.mode = Mode::Approx;
  meta.qgram = true;
  meta.q = q;
  meta.n = n;
  meta.ell = db.ell;
  meta.sigma = sigma;
  meta.cap = cap;
  meta.epsilon = params.epsilon;
  meta.delta = params.delta;
  meta.beta = params.beta;
  meta.seed = params.seed;
  meta.zero_noise = noise.zero_noise();
  meta.abort_level = abort_level.value_or(-1);
  meta.alpha_candidates = alpha;
  meta.tau_candidates = tau;
  meta.alpha_node = alpha;
  meta.prune_threshold = tau;
  meta.alpha_all = std::max(alpha, tau + alpha);
  return finish_structure(retained, db, std::move(meta));
}

}  // namespace

PrivateCountTrie build_qgrams_approx(const Database& db, const SuffixIndex& idx,
                                     std::size_t q, const QGramParams& params,
                                     const NoiseSource* noise_override,
                                     QGramTrace* trace) {
  return build_qgrams_approx_impl(db, idx, q, params, noise_override, trace,
                                  true);
}

PrivateCountTrie build_qgrams_approx_reference(
    const Database& db, const SuffixIndex& idx, std::size_t q,
    const QGramParams& params, const NoiseSource* noise_override,
    QGramTrace* trace) {
  return build_qgrams_approx_impl(db, idx, q, params, noise_override, trace,
                                  false);
}

double query_qgram(const PrivateCountTrie& qs, const Symbols& pattern) {
  if (!qs.meta().qgram) throw std::invalid_argument("structure is not a q-gram structure");
  if (pattern.size() != qs.meta().q) {
    throw std::invalid_argument("pattern length must equal q");
  }
  return qs.query(pattern);
}

}  // namespace dpsc
