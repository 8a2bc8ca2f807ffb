// dpsc: differentially private substring, document and q-gram counting.
//
// Subcommands: build, query, mine, qgram-build, tree-count, eval.
// Exit codes: 0 success, 2 candidate-stage size abort, 1 any other error.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpsc/corpus.hpp"
#include "dpsc/counting_trie.hpp"
#include "dpsc/qgrams.hpp"
#include "dpsc/serialize.hpp"
#include "dpsc/suffix_index.hpp"
#include "dpsc/treecount.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSizeAbort = 2;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DPSC_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

struct CommonOpts {
  std::string mode = "pure";
  std::string task = "substring";
  double epsilon = 1.0;
  double delta = 0.0;
  double beta = 0.05;
  std::int64_t cap = -1;
  std::uint64_t seed = default_seed();
  bool zero_noise = false;
  std::optional<int> alphabet;
  std::optional<std::size_t> max_len;
  std::optional<double> tau_override;
  std::optional<double> prune_override;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--mode", o.mode, "pure or approx")
      ->check(CLI::IsMember({"pure", "approx"}));
  cmd->add_option("--epsilon", o.epsilon, "privacy parameter epsilon");
  cmd->add_option("--delta", o.delta, "privacy parameter delta (0 for pure)");
  cmd->add_option("--beta", o.beta, "failure probability of the error bounds");
  cmd->add_option("--cap", o.cap,
                  "per-document contribution cap (default: task-dependent)");
  cmd->add_option("--seed", o.seed, "noise seed (env DPSC_SEED)");
  cmd->add_flag("--zero-noise", o.zero_noise,
                "disable all noise; thresholds default to 1 (exact oracle mode)");
  cmd->add_option("--alphabet", o.alphabet, "pin the alphabet size used in bounds");
  cmd->add_option("--max-len", o.max_len,
                  "reject corpus lines longer than this and use it as ell");
  cmd->add_option("--tau", o.tau_override,
                  "override the candidate threshold (testing)");
  cmd->add_option("--prune", o.prune_override,
                  "override the prune threshold (testing)");
}

void validate_mode(const CommonOpts& o) {
  if (o.mode == "approx" && !(o.delta > 0.0)) {
    throw std::invalid_argument("approx mode requires --delta > 0");
  }
  if (o.mode == "pure" && o.delta != 0.0) {
    throw std::invalid_argument("pure mode requires --delta = 0");
  }
}

dpsc::BuildParams to_build_params(const CommonOpts& o, const dpsc::Database& db) {
  dpsc::BuildParams p;
  p.mode = o.mode == "pure" ? dpsc::Mode::Pure : dpsc::Mode::Approx;
  p.epsilon = o.epsilon;
  p.delta = o.delta;
  p.beta = o.beta;
  if (o.task == "document") {
    p.cap = 1;
  } else {
    p.cap = o.cap < 0 ? static_cast<std::int64_t>(db.ell) : o.cap;
  }
  p.seed = o.seed;
  p.zero_noise = o.zero_noise;
  p.tau_override = o.tau_override;
  p.prune_override = o.prune_override;
  if (o.zero_noise) {
    // exact oracle mode: retain everything that occurs at all
    if (!p.tau_override) p.tau_override = 1.0;
    if (!p.prune_override) p.prune_override = 1.0;
  }
  return p;
}

dpsc::QGramParams to_qgram_params(const CommonOpts& o, std::int64_t cap,
                                  std::uint64_t seed) {
  dpsc::QGramParams p;
  p.epsilon = o.epsilon;
  p.delta = o.delta;
  p.beta = o.beta;
  p.cap = cap;
  p.seed = seed;
  p.zero_noise = o.zero_noise;
  p.tau_override = o.tau_override;
  if (o.zero_noise && !p.tau_override) p.tau_override = 1.0;
  return p;
}

void print_meta(const dpsc::StructureMeta& m, std::ostream& out) {
  out << "mode=" << (m.mode == dpsc::Mode::Pure ? "pure" : "approx")
      << (m.qgram ? " kind=qgram q=" + std::to_string(m.q) : " kind=trie")
      << " n=" << m.n << " ell=" << m.ell << " sigma=" << m.sigma
      << " cap=" << m.cap << " epsilon=" << fmt(m.epsilon)
      << " delta=" << m.delta << " beta=" << fmt(m.beta) << " seed=" << m.seed
      << " zero_noise=" << (m.zero_noise ? 1 : 0)
      << " abort_level=" << m.abort_level
      << " alpha_candidates=" << fmt(m.alpha_candidates)
      << " tau_candidates=" << fmt(m.tau_candidates)
      << " alpha_node=" << fmt(m.alpha_node)
      << " alpha_all=" << fmt(m.alpha_all)
      << " prune_threshold=" << fmt(m.prune_threshold) << "\n";
}

int finish_build(const dpsc::PrivateCountTrie& s, const std::string& output) {
  dpsc::save_structure_file(s, output);
  print_meta(s.meta(), std::cout);
  if (s.meta().zero_noise) {
    std::cerr << "warning: zero-noise build; the structure is NOT "
                 "differentially private\n";
  }
  if (s.meta().abort_level >= 0) {
    std::cerr << "size abort at doubling level " << s.meta().abort_level
              << "; the structure is empty\n";
    return kExitSizeAbort;
  }
  return kExitOk;
}

int run_build(const std::string& input, const std::string& output,
              const CommonOpts& opts) {
  validate_mode(opts);
  dpsc::Database db = dpsc::read_corpus_file(input, opts.alphabet, opts.max_len);
  dpsc::SuffixIndex idx(db);
  dpsc::PrivateCountTrie s =
      dpsc::build_count_structure(db, idx, to_build_params(opts, db));
  return finish_build(s, output);
}

int run_qgram_build(const std::string& input, const std::string& output,
                    std::size_t q, const CommonOpts& opts) {
  validate_mode(opts);
  dpsc::Database db = dpsc::read_corpus_file(input, opts.alphabet, opts.max_len);
  dpsc::SuffixIndex idx(db);
  const std::int64_t cap =
      opts.task == "document"
          ? 1
          : (opts.cap < 0 ? static_cast<std::int64_t>(db.ell) : opts.cap);
  const dpsc::QGramParams p = to_qgram_params(opts, cap, opts.seed);
  dpsc::PrivateCountTrie s = opts.mode == "pure"
                                 ? dpsc::build_qgrams_pure(db, idx, q, p)
                                 : dpsc::build_qgrams_approx(db, idx, q, p);
  return finish_build(s, output);
}

int run_query(const std::string& structure, const std::string& pattern,
              bool clamp, bool metadata) {
  dpsc::PrivateCountTrie s = dpsc::load_structure_file(structure);
  if (metadata) print_meta(s.meta(), std::cerr);
  if (s.meta().qgram && pattern.size() != s.meta().q) {
    throw std::invalid_argument("this is a q-gram structure; the pattern must have length " +
                                std::to_string(s.meta().q));
  }
  if (pattern.size() > s.meta().ell) {
    std::cerr << "warning: pattern longer than ell=" << s.meta().ell
              << "; by convention the answer is 0\n";
    std::cout << fmt(0.0) << "\n";
    return kExitOk;
  }
  auto codes = s.alphabet().try_encode(pattern);
  if (!codes) {
    std::cerr << "warning: pattern contains symbols outside the alphabet; "
                 "answer is 0\n";
    std::cout << fmt(0.0) << "\n";
    return kExitOk;
  }
  double v = s.meta().qgram ? dpsc::query_qgram(s, *codes) : s.query(*codes);
  if (clamp) v = std::max(0.0, v);
  std::cout << fmt(v) << "\n";
  return kExitOk;
}

int run_mine(const std::string& structure, double tau) {
  dpsc::PrivateCountTrie s = dpsc::load_structure_file(structure);
  auto mined = s.mine(tau);
  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(mined.size());
  for (auto& [codes, count] : mined) {
    rows.emplace_back(s.alphabet().decode(codes), count);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [p, c] : rows) std::cout << p << "\t" << fmt(c) << "\n";
  return kExitOk;
}

int run_tree_count(const std::string& tree_path, const std::string& colors_path,
                   double d, double node_cap, bool with_exact,
                   const CommonOpts& opts) {
  validate_mode(opts);
  std::ifstream tin(tree_path);
  if (!tin) throw std::runtime_error("cannot open tree file: " + tree_path);
  dpsc::Tree tree = dpsc::Tree::from_stream(tin);
  std::ifstream cin_(colors_path);
  if (!cin_) throw std::runtime_error("cannot open colors file: " + colors_path);
  dpsc::ColoredDataset data = dpsc::ColoredDataset::from_stream(cin_);
  std::vector<std::int64_t> counts = dpsc::colored_counts(tree, data);

  dpsc::TreeCountParams p;
  p.epsilon = opts.epsilon;
  p.delta = opts.delta;
  p.beta = opts.beta;
  p.leaf_l1_sens = d;
  p.node_cap = node_cap;
  dpsc::NoiseSource noise(opts.seed, opts.zero_noise);
  dpsc::TreeCountResult res =
      opts.mode == "pure" ? dpsc::dp_tree_counts_pure(tree, counts, p, noise)
                          : dpsc::dp_tree_counts_approx(tree, counts, p, noise);
  std::cout << "#dpsc-tree-count v1\n";
  std::cout << "#meta nodes=" << tree.size() << " height=" << tree.height()
            << " d=" << fmt(d) << " epsilon=" << fmt(opts.epsilon)
            << " delta=" << opts.delta << " beta=" << fmt(opts.beta)
            << " error_bound=" << fmt(res.error_bound)
            << " zero_noise=" << (opts.zero_noise ? 1 : 0) << "\n";
  std::cout << (with_exact ? "#columns node estimate exact\n"
                           : "#columns node estimate\n");
  for (std::size_t v = 0; v < tree.size(); ++v) {
    std::cout << v << "\t" << fmt(res.estimates[v]);
    if (with_exact) std::cout << "\t" << counts[v];
    std::cout << "\n";
  }
  return kExitOk;
}

int run_eval(const std::string& input, std::size_t trials, std::size_t q,
             bool summary_only, const CommonOpts& opts) {
  validate_mode(opts);
  dpsc::Database db = dpsc::read_corpus_file(input, opts.alphabet, opts.max_len);
  const bool qgram_task = opts.task == "qgram";
  if (qgram_task && (q < 1 || q > db.ell)) {
    throw std::invalid_argument("qgram task requires --q in [1, ell]");
  }

  double pattern_budget = 0;
  for (const auto& doc : db.docs) {
    pattern_budget += static_cast<double>(doc.size()) *
                      (static_cast<double>(doc.size()) + 1) / 2;
  }
  if (qgram_task) {
    pattern_budget = std::pow(static_cast<double>(db.alphabet.size()),
                              static_cast<double>(q));
  }
  if (pattern_budget > 5e6) {
    std::cerr << "eval refused: the exact oracle would sweep ~" << pattern_budget
              << " patterns; shrink the corpus (or q) below 5e6 patterns\n";
    return kExitError;
  }
  dpsc::SuffixIndex idx(db);

  // pattern universe: all distinct substrings, or all of Sigma^q
  std::set<dpsc::Symbols> patterns;
  if (qgram_task) {
    std::vector<dpsc::Symbols> frontier{dpsc::Symbols{}};
    for (std::size_t i = 0; i < q; ++i) {
      std::vector<dpsc::Symbols> next;
      for (const auto& p : frontier) {
        for (int c = 0; c < db.alphabet.size(); ++c) {
          dpsc::Symbols s = p;
          s.push_back(static_cast<char>(c));
          next.push_back(std::move(s));
        }
      }
      frontier = std::move(next);
    }
    patterns.insert(frontier.begin(), frontier.end());
  } else {
    for (std::size_t m = 1; m <= db.ell; ++m) {
      for (const auto& ds : idx.distinct_substrings(m)) {
        patterns.insert(idx.substring_at(ds.text_pos, m));
      }
    }
  }

  const std::int64_t cap =
      opts.task == "document"
          ? 1
          : (opts.cap < 0 ? static_cast<std::int64_t>(db.ell) : opts.cap);
  std::map<dpsc::Symbols, std::int64_t> truth;
  for (const auto& p : patterns) truth[p] = idx.count_db(p, cap);

  std::cout << "#dpsc-eval v1\n";
  std::cout << "#meta task=" << opts.task << " mode=" << opts.mode
            << " n=" << db.size() << " ell=" << db.ell
            << " sigma=" << db.alphabet.size() << " cap=" << cap
            << " epsilon=" << fmt(opts.epsilon) << " delta=" << opts.delta
            << " beta=" << fmt(opts.beta) << " trials=" << trials
            << " seed=" << opts.seed
            << " zero_noise=" << (opts.zero_noise ? 1 : 0) << "\n";
  if (!summary_only) std::cout << "#columns trial pattern true noisy abs_error\n";

  std::vector<double> all_errors;
  std::size_t trials_within = 0;
  double alpha_total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t seed = opts.seed + t;
    std::optional<dpsc::PrivateCountTrie> s;
    if (qgram_task) {
      const dpsc::QGramParams p = to_qgram_params(opts, cap, seed);
      s = opts.mode == "pure" ? dpsc::build_qgrams_pure(db, idx, q, p)
                              : dpsc::build_qgrams_approx(db, idx, q, p);
    } else {
      CommonOpts topts = opts;
      topts.seed = seed;
      s = dpsc::build_count_structure(db, idx, to_build_params(topts, db));
    }
    alpha_total = s->meta().alpha_all;
    double max_err = 0.0;
    for (const auto& [p, tv] : truth) {
      const double noisy = qgram_task ? dpsc::query_qgram(*s, p) : s->query(p);
      const double err = std::abs(noisy - static_cast<double>(tv));
      max_err = std::max(max_err, err);
      all_errors.push_back(err);
      if (!summary_only) {
        std::cout << t << "\t" << db.alphabet.decode(p) << "\t" << tv << "\t"
                  << fmt(noisy) << "\t" << fmt(err) << "\n";
      }
    }
    if (max_err <= alpha_total) ++trials_within;
  }

  std::sort(all_errors.begin(), all_errors.end());
  auto quantile = [&](double p) {
    if (all_errors.empty()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(
        p * (static_cast<double>(all_errors.size()) - 1));
    return all_errors[i];
  };
  double mean = 0.0;
  for (double e : all_errors) mean += e;
  if (!all_errors.empty()) mean /= static_cast<double>(all_errors.size());
  std::cout << "#summary trials=" << trials << " patterns=" << patterns.size()
            << " max_error=" << fmt(all_errors.empty() ? 0.0 : all_errors.back())
            << " mean_error=" << fmt(mean) << " p50=" << fmt(quantile(0.5))
            << " p90=" << fmt(quantile(0.9)) << " p99=" << fmt(quantile(0.99))
            << " alpha_total=" << fmt(alpha_total)
            << " trials_within_alpha=" << trials_within
            << " frac_trials_within_alpha="
            << fmt(trials ? static_cast<double>(trials_within) /
                                static_cast<double>(trials)
                          : 0.0)
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private substring / document / q-gram counting"};
  app.require_subcommand(1);

  CommonOpts opts;

  std::string input, output, structure, pattern, tree_path, colors_path;
  double tau = 0.0;
  std::size_t q = 0, trials = 10;
  double d = 2.0, node_cap = 1.0;
  bool clamp = false, metadata = false, with_exact = false, summary_only = false;

  auto* build = app.add_subcommand("build", "build a count structure from a corpus");
  build->add_option("--input", input, "corpus file")->required();
  build->add_option("--output", output, "structure file")->required();
  build->add_option("--task", opts.task, "substring or document")
      ->check(CLI::IsMember({"substring", "document"}));
  add_common(build, opts);

  auto* qbuild = app.add_subcommand("qgram-build", "build a fixed-length q-gram structure");
  qbuild->add_option("--input", input, "corpus file")->required();
  qbuild->add_option("--output", output, "structure file")->required();
  qbuild->add_option("--q", q, "q-gram length")->required();
  qbuild->add_option("--task", opts.task, "substring or document")
      ->check(CLI::IsMember({"substring", "document"}));
  add_common(qbuild, opts);

  auto* query = app.add_subcommand("query", "query a structure for one pattern");
  query->add_option("--structure", structure, "structure file")->required();
  query->add_option("--pattern", pattern, "pattern text")->required();
  query->add_flag("--clamp", clamp, "clamp negative answers to 0");
  query->add_flag("--metadata", metadata, "print build metadata to stderr");

  auto* mine = app.add_subcommand("mine", "list retained patterns above a threshold");
  mine->add_option("--structure", structure, "structure file")->required();
  mine->add_option("--tau", tau, "mining threshold")->required();

  auto* tcount = app.add_subcommand("tree-count",
                                    "DP counting function on a tree (colored demo)");
  tcount->add_option("--tree", tree_path, "tree file: node_id parent_id per line")
      ->required();
  tcount->add_option("--colors", colors_path, "items file: leaf_id color per line")
      ->required();
  tcount->add_option("--d", d, "L1 sensitivity of the leaf count vector");
  tcount->add_option("--node-cap", node_cap,
                     "per-node sensitivity bound (approx mode)");
  tcount->add_flag("--with-exact", with_exact, "include exact counts in the output");
  add_common(tcount, opts);

  auto* eval = app.add_subcommand("eval", "error-evaluation harness (exact oracle sweep)");
  eval->add_option("--input", input, "corpus file")->required();
  eval->add_option("--trials", trials, "number of seeded builds");
  eval->add_option("--q", q, "q for the qgram task");
  eval->add_option("--task", opts.task, "substring, document or qgram")
      ->check(CLI::IsMember({"substring", "document", "qgram"}));
  eval->add_flag("--summary-only", summary_only, "suppress per-pattern rows");
  add_common(eval, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return run_build(input, output, opts);
    if (qbuild->parsed()) return run_qgram_build(input, output, q, opts);
    if (query->parsed()) return run_query(structure, pattern, clamp, metadata);
    if (mine->parsed()) return run_mine(structure, tau);
    if (tcount->parsed()) {
      return run_tree_count(tree_path, colors_path, d, node_cap, with_exact, opts);
    }
    if (eval->parsed()) return run_eval(input, trials, q, summary_only, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
