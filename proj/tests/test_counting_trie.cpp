#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "dpsc/counting_trie.hpp"
#include "dpsc/serialize.hpp"
#include "test_support.hpp"

using namespace dpsc;
using testsup::make_db;
using testsup::sym;

namespace {

// random trie shapes for decomposition properties
CandidateTrie random_trie(Rng& rng, std::size_t target_nodes, int sigma) {
  CandidateTrie trie;
  std::vector<Symbols> frontier{Symbols{}};
  while (trie.size() < target_nodes) {
    const std::size_t pick = rng.next_u64() % frontier.size();
    Symbols s = frontier[pick];
    s.push_back(static_cast<char>(rng.next_u64() % sigma));
    if (trie.locate(s)) continue;
    trie.insert(s);
    frontier.push_back(std::move(s));
  }
  return trie;
}

}  // namespace

TEST_CASE("trie construction and exact counts") {
  auto db = make_db({"ab"}, 2);
  SuffixIndex idx(db);
  auto trie = CandidateTrie::from_strings({sym("a"), sym("ab")}, idx, 2);
  CHECK(trie.size() == 3);  // root + a + ab
  CHECK(trie.node(*trie.locate(sym("a"))).exact == 1);
  CHECK(trie.node(*trie.locate(sym("ab"))).exact == 1);
  CHECK(trie.node(0).exact == 2);  // empty pattern, capped at 2 per doc

  auto empty = CandidateTrie::from_strings({}, idx, 2);
  CHECK(empty.size() == 1);
}

TEST_CASE("trie node count equals the number of distinct prefixes") {
  Rng rng(31);
  for (int iter = 0; iter < 20; ++iter) {
    auto db = testsup::random_db(rng, 4, 8, 3);
    SuffixIndex idx(db);
    auto strings = testsup::all_distinct_substrings(db);
    auto trie = CandidateTrie::from_strings(
        strings, idx, static_cast<std::int64_t>(db.ell));
    std::set<Symbols> prefixes;
    for (const auto& s : strings) {
      for (std::size_t l = 1; l <= s.size(); ++l) prefixes.insert(s.substr(0, l));
    }
    CHECK(trie.size() == prefixes.size() + 1);
    for (const auto& p : prefixes) {
      auto v = trie.locate(p);
      REQUIRE(v.has_value());
      CHECK(trie.node(*v).exact ==
            testsup::scan_count_db(p, db, static_cast<std::int64_t>(db.ell)));
    }
  }
}

TEST_CASE("heavy path decomposition shapes") {
  auto db = make_db({"aaaaaaa"}, 2);
  SuffixIndex idx(db);

  SUBCASE("chain: one path, no light edges") {
    auto trie = CandidateTrie::from_strings({sym("aaaaaaa")}, idx, 7);
    auto hpd = heavy_path_decompose(trie.children_lists(), 0);
    CHECK(hpd.path_count() == 1);
    std::vector<int> parent(trie.size());
    for (std::size_t v = 0; v < trie.size(); ++v) parent[v] = trie.node(static_cast<int>(v)).parent;
    for (std::size_t v = 0; v < trie.size(); ++v) {
      CHECK(light_edges_to(hpd, parent, static_cast<int>(v)) == 0);
    }
  }

  SUBCASE("star: k paths, at most one light edge each") {
    auto dbs = make_db({"abcd"}, 4);
    SuffixIndex idxs(dbs);
    auto trie = CandidateTrie::from_strings(
        {sym("a"), sym("b"), sym("c"), sym("d")}, idxs, 4);
    auto hpd = heavy_path_decompose(trie.children_lists(), 0);
    CHECK(hpd.path_count() == 4);
    std::vector<int> parent(trie.size());
    for (std::size_t v = 0; v < trie.size(); ++v) parent[v] = trie.node(static_cast<int>(v)).parent;
    for (std::size_t v = 1; v < trie.size(); ++v) {
      CHECK(light_edges_to(hpd, parent, static_cast<int>(v)) <= 1);
    }
    // smallest symbol wins the tie for the heavy edge
    CHECK(hpd.path_id[*trie.locate(sym("a"))] == hpd.path_id[0]);
  }

  SUBCASE("complete binary trie of depth 3") {
    auto dbb = make_db({"ab"}, 2);
    SuffixIndex idxb(dbb);
    auto trie = CandidateTrie::from_strings(testsup::all_strings(3, 2), idxb, 2);
    CHECK(trie.size() == 15);
    auto hpd = heavy_path_decompose(trie.children_lists(), 0);
    std::vector<int> parent(trie.size());
    for (std::size_t v = 0; v < trie.size(); ++v) parent[v] = trie.node(static_cast<int>(v)).parent;
    for (std::size_t v = 0; v < trie.size(); ++v) {
      CHECK(light_edges_to(hpd, parent, static_cast<int>(v)) <= 3);
    }
  }
}

TEST_CASE("light edge bound on random tries") {
  Rng rng(32);
  for (int iter = 0; iter < 50; ++iter) {
    const std::size_t n = 2 + rng.next_u64() % 1000;
    auto trie = random_trie(rng, n, 4);
    auto hpd = heavy_path_decompose(trie.children_lists(), 0);
    std::vector<int> parent(trie.size());
    for (std::size_t v = 0; v < trie.size(); ++v) parent[v] = trie.node(static_cast<int>(v)).parent;
    const int bound = ceil_log2(trie.size());
    for (std::size_t v = 0; v < trie.size(); ++v) {
      REQUIRE(light_edges_to(hpd, parent, static_cast<int>(v)) <= bound);
    }
  }
}

TEST_CASE("difference sequences are non-positive and reconstruct counts") {
  Rng rng(33);
  auto db = testsup::random_db(rng, 5, 10, 2);
  SuffixIndex idx(db);
  auto trie = CandidateTrie::from_strings(testsup::all_distinct_substrings(db),
                                          idx, static_cast<std::int64_t>(db.ell));
  auto hpd = heavy_path_decompose(trie.children_lists(), 0);
  auto diffs = difference_sequences(trie, hpd);
  REQUIRE(diffs.size() == hpd.path_count());
  for (std::size_t p = 0; p < diffs.size(); ++p) {
    std::int64_t acc = trie.node(hpd.paths[p][0]).exact;
    for (std::size_t i = 0; i < diffs[p].size(); ++i) {
      CHECK(diffs[p][i] <= 0);
      acc += diffs[p][i];
      CHECK(acc == trie.node(hpd.paths[p][i + 1]).exact);
    }
  }
}

TEST_CASE("noisy root counts: zero-noise exactness and pure noise scale") {
  auto db = make_db({"abab", "abba"}, 2);
  SuffixIndex idx(db);
  auto trie = CandidateTrie::from_strings(testsup::all_distinct_substrings(db),
                                          idx, 4);
  auto hpd = heavy_path_decompose(trie.children_lists(), 0);

  NoiseSource zero(0, true);
  auto exact = noisy_root_counts(trie, hpd, Mode::Pure, db.ell, 4, 1.0, 0.0, zero);
  REQUIRE(exact.size() == hpd.path_count());
  for (std::size_t p = 0; p < exact.size(); ++p) {
    CHECK(exact[p] == static_cast<double>(trie.node(hpd.paths[p][0]).exact));
  }

  // the noise is Laplace at scale 2*ell*(ceil(log2 |T|)+1)/eps on one stream
  const double eps = 0.7;
  NoiseSource ns(99);
  auto noisy = noisy_root_counts(trie, hpd, Mode::Pure, db.ell, 4, eps, 0.0, ns);
  Rng expect_rng = ns.stream("roots");
  const double b = 2.0 * static_cast<double>(db.ell) *
                   (ceil_log2(trie.size()) + 1) / eps;
  for (std::size_t p = 0; p < noisy.size(); ++p) {
    const double y = laplace_sample(b, expect_rng);
    CHECK(noisy[p] == doctest::Approx(exact[p] + y).epsilon(1e-12));
  }
}

TEST_CASE("root count vector sensitivity witness") {
  Rng rng(34);
  auto db = testsup::random_db(rng, 4, 6, 2);
  const std::int64_t cap = static_cast<std::int64_t>(db.ell);
  // the trie is fixed; counts vary with the data
  std::set<Symbols> uni;
  for (const auto& s : testsup::all_distinct_substrings(db)) uni.insert(s);
  for (int r = 0; r < 30; ++r) {
    auto repl = testsup::random_db(rng, 1, db.ell, 2).docs[0];
    auto db2 = db.with_replacement(rng.next_u64() % db.size(), repl);
    for (const auto& s : testsup::all_distinct_substrings(db2)) uni.insert(s);
  }
  std::vector<Symbols> universe(uni.begin(), uni.end());
  SuffixIndex idx(db);
  auto trie = CandidateTrie::from_strings(universe, idx, cap);
  auto hpd = heavy_path_decompose(trie.children_lists(), 0);
  const double bound = root_counts_l1_sensitivity(db.ell, trie.size());
  for (int r = 0; r < 30; ++r) {
    auto repl = testsup::random_db(rng, 1, db.ell, 2).docs[0];
    auto db2 = db.with_replacement(rng.next_u64() % db.size(), repl);
    double l1 = 0.0;
    for (const auto& path : hpd.paths) {
      const Symbols s = trie.string_of(path[0]);
      l1 += std::abs(static_cast<double>(testsup::scan_count_db(s, db, cap)) -
                     static_cast<double>(testsup::scan_count_db(s, db2, cap)));
    }
    CHECK(l1 <= bound);
  }
}

TEST_CASE("dyadic prefix sums") {
  SUBCASE("cover of [1,6] within horizon 8") {
    auto blocks = dyadic_cover(6, 8);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0] == std::pair<std::size_t, std::size_t>{1, 4});
    CHECK(blocks[1] == std::pair<std::size_t, std::size_t>{5, 6});
    CHECK(dyadic_cover(8, 8).size() == 1);
    for (std::size_t m = 1; m <= 8; ++m) {
      std::size_t covered = 0;
      std::size_t expect_next = 1;
      for (auto [b, e] : dyadic_cover(m, 8)) {
        CHECK(b == expect_next);
        expect_next = e + 1;
        covered += e - b + 1;
      }
      CHECK(covered == m);
    }
  }

  SUBCASE("zero noise reproduces exact prefix sums") {
    std::vector<std::vector<std::int64_t>> seqs{{5, -1, 0, -2, -1},
                                                {3, 0, -3}};
    NoiseSource zero(0, true);
    auto res = binary_tree_prefix_sums(seqs, 4.0, 1.0, zero, "t");
    REQUIRE(res.sums.size() == 2);
    std::vector<double> want0{5, 4, 4, 2, 1};
    std::vector<double> want1{3, 3, 0};
    CHECK(res.sums[0] == want0);
    CHECK(res.sums[1] == want1);
    auto resg =
        binary_tree_prefix_sums_gaussian(seqs, 4.0, 2.0, 0.5, 1e-6, zero, "t");
    CHECK(resg.sums[0] == want0);
  }

  SUBCASE("gaussian sigma formula") {
    const double sigma = prefix_sums_gaussian_sigma(8.0, 2.0, 0.5, 1e-6, 16);
    CHECK(sigma == doctest::Approx(
                       2.0 * std::sqrt(2.0 * 8.0 * 2.0 * 5.0 * std::log(2e6))));
  }

  SUBCASE("prefix noise variance stays within (log T + 1) blocks") {
    // position 7 of an 8-horizon needs 3 blocks; variance ~ 3 sigma^2
    std::vector<std::vector<std::int64_t>> seqs{{0, 0, 0, 0, 0, 0, 0, 0}};
    const double eps = 0.5, delta = 1e-4, L = 2.0, cap = 1.0;
    const double sigma = prefix_sums_gaussian_sigma(L, cap, eps, delta, 8);
    const int trials = 4000;
    double var = 0.0;
    for (int t = 0; t < trials; ++t) {
      NoiseSource ns(7000 + static_cast<std::uint64_t>(t));
      auto res =
          binary_tree_prefix_sums_gaussian(seqs, L, cap, eps, delta, ns, "v");
      var += res.sums[0][6] * res.sums[0][6];
    }
    var /= trials;
    CHECK(var == doctest::Approx(3.0 * sigma * sigma).epsilon(0.1));
    CHECK(var <= 4.0 * sigma * sigma);  // (floor(log2 8)+1) sigma^2
  }

  SUBCASE("laplace calibration at small scale") {
    std::vector<std::vector<std::int64_t>> seqs(
        2, std::vector<std::int64_t>(64, 1));
    const double L = 3.0, eps = 1.0, beta = 0.05;
    const double bound = prefix_sums_bound(L, eps, 2, 64, beta);
    const int trials = 2000;
    int exceed = 0;
    for (int t = 0; t < trials; ++t) {
      NoiseSource ns(8000 + static_cast<std::uint64_t>(t));
      auto res = binary_tree_prefix_sums(seqs, L, eps, ns, "c");
      double maxerr = 0.0;
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        for (std::size_t m = 0; m < seqs[i].size(); ++m) {
          maxerr = std::max(maxerr,
                            std::abs(res.sums[i][m] -
                                     static_cast<double>(m + 1)));
        }
      }
      if (maxerr > bound) ++exceed;
    }
    CHECK(static_cast<double>(exceed) / trials <=
          beta + 3.0 * std::sqrt(beta * (1 - beta) / trials));
  }
}

TEST_CASE("assembly and pruning") {
  auto db = make_db({"abab", "abba", "aaab"}, 2);
  SuffixIndex idx(db);
  const std::int64_t cap = 4;
  auto trie = CandidateTrie::from_strings(testsup::all_distinct_substrings(db),
                                          idx, cap);
  auto hpd = heavy_path_decompose(trie.children_lists(), 0);
  auto diffs = difference_sequences(trie, hpd);
  NoiseSource zero(0, true);
  auto roots = noisy_root_counts(trie, hpd, Mode::Pure, db.ell, cap, 1.0, 0.0, zero);
  auto sums = binary_tree_prefix_sums(diffs, 1.0, 1.0, zero, "s");

  SUBCASE("prune threshold 1 retains exactly the occurring strings") {
    auto s = assemble(trie, hpd, roots, sums, 1.0, db.alphabet, StructureMeta{});
    for (const auto& p : testsup::all_distinct_substrings(db)) {
      CHECK(s.query(p) ==
            static_cast<double>(testsup::scan_count_db(p, db, cap)));
    }
    CHECK(s.node_count() == trie.size());  // every node occurs at least once
  }

  SUBCASE("a huge threshold leaves only the root") {
    auto s = assemble(trie, hpd, roots, sums, 1e18, db.alphabet, StructureMeta{});
    CHECK(s.node_count() == 1);
    CHECK(s.query(sym("a")) == 0.0);
  }

  SUBCASE("retained counts equal the root-plus-prefix reconstruction") {
    auto s = assemble(trie, hpd, roots, sums, 1.0, db.alphabet, StructureMeta{});
    for (std::size_t p = 0; p < hpd.paths.size(); ++p) {
      double acc = roots[p];
      CHECK(s.query(trie.string_of(hpd.paths[p][0])) ==
            doctest::Approx(acc).epsilon(1e-12));
      for (std::size_t i = 1; i < hpd.paths[p].size(); ++i) {
        const double v = roots[p] + sums.sums[p][i - 1];
        CHECK(s.query(trie.string_of(hpd.paths[p][i])) ==
              doctest::Approx(v).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("full pipeline in zero-noise mode is the exact algorithm") {
  Rng rng(35);
  for (int iter = 0; iter < 10; ++iter) {
    auto db = testsup::random_db(rng, 5, 10, 2);
    SuffixIndex idx(db);
    BuildParams params;
    params.zero_noise = true;
    params.tau_override = 1.0;
    params.prune_override = 1.0;
    params.cap = static_cast<std::int64_t>(db.ell);
    auto s = build_count_structure(db, idx, params);
    CHECK(s.meta().abort_level == -1);
    for (const auto& p : testsup::all_distinct_substrings(db)) {
      CHECK(s.query(p) == static_cast<double>(testsup::scan_count_db(
                              p, db, static_cast<std::int64_t>(db.ell))));
    }
    // absent patterns answer exactly zero
    CHECK(s.query(Symbols(db.ell, char(1)) + Symbols(1, char(0))) == 0.0);
  }
}

TEST_CASE("query totality and mining consistency") {
  auto db = make_db({"abab", "abab", "bbbb"}, 2);
  SuffixIndex idx(db);
  BuildParams params;
  params.zero_noise = true;
  params.tau_override = 1.0;
  params.prune_override = 2.0;
  auto s = build_count_structure(db, idx, params);

  for (const auto& p : testsup::all_strings(3, 2)) {
    const double v = s.query(p);
    const auto mined = s.mine(0.0);
    const bool in_mined =
        std::find_if(mined.begin(), mined.end(), [&](const auto& e) {
          return e.first == p;
        }) != mined.end();
    CHECK(in_mined == (v != 0.0));
  }

  // mine(tau) is exactly the retained strings with count >= tau
  for (double tau : {0.0, 2.0, 3.0, 1e18}) {
    auto mined = s.mine(tau);
    for (const auto& [p, c] : mined) {
      CHECK(c >= tau);
      CHECK(s.query(p) == c);
      CHECK(!p.empty());
    }
  }
  CHECK(s.mine(1e18).empty());

  // zero-noise mining equals oracle thresholding above the prune floor
  auto mined = s.mine(3.0);
  std::set<Symbols> got;
  for (const auto& [p, c] : mined) got.insert(p);
  std::set<Symbols> want;
  for (const auto& p : testsup::all_distinct_substrings(db)) {
    if (testsup::scan_count_db(p, db, 4) >= 3) want.insert(p);
  }
  CHECK(got == want);
}

TEST_CASE("negative noisy counts are stored unclamped") {
  std::vector<PrivateCountTrie::Node> nodes;
  nodes.push_back({-1, 0, 5.0});
  nodes.push_back({0, 0, -2.5});
  PrivateCountTrie s(std::move(nodes), Alphabet::identity(2), StructureMeta{});
  CHECK(s.query(sym("a")) == -2.5);
}

TEST_CASE("serialization round-trips losslessly and detects corruption") {
  auto db = make_db({"abab", "abba", "baab"}, 2);
  SuffixIndex idx(db);
  BuildParams params;
  params.epsilon = 1.5;
  params.beta = 0.1;
  params.seed = 77;
  auto s = build_count_structure(db, idx, params);

  std::ostringstream out;
  save_structure(s, out);
  std::string bytes = out.str();

  std::istringstream in(bytes);
  auto loaded = load_structure(in);
  CHECK(loaded.node_count() == s.node_count());
  CHECK(loaded.meta().epsilon == s.meta().epsilon);
  CHECK(loaded.meta().alpha_node == s.meta().alpha_node);
  CHECK(loaded.meta().alpha_all == s.meta().alpha_all);
  CHECK(loaded.meta().seed == s.meta().seed);
  CHECK(loaded.meta().zero_noise == s.meta().zero_noise);
  CHECK(loaded.meta().abort_level == s.meta().abort_level);
  CHECK(loaded.meta().qgram == s.meta().qgram);
  CHECK(loaded.meta().cap == s.meta().cap);
  CHECK(loaded.meta().n == s.meta().n);
  CHECK(loaded.meta().ell == s.meta().ell);
  CHECK(loaded.alphabet().dictionary() == s.alphabet().dictionary());
  for (const auto& p : testsup::all_strings(3, 2)) {
    CHECK(loaded.query(p) == s.query(p));  // bit-identical
  }

  // flip one payload byte: the checksum must catch it
  std::string corrupted = bytes;
  corrupted[20] = static_cast<char>(corrupted[20] ^ 0x40);
  std::istringstream bad(corrupted);
  CHECK_THROWS_AS(load_structure(bad), FormatError);

  std::istringstream truncated(bytes.substr(0, 10));
  CHECK_THROWS_AS(load_structure(truncated), FormatError);
}

namespace {

// the pipeline's worst-case answer bound, evaluated from the same formulas
// the builder uses, for a synthetic structure-size profile
double pipeline_alpha_all(Mode mode, std::size_t n, std::size_t ell,
                          std::size_t sigma, std::int64_t cap, double eps,
                          double delta, double beta) {
  const double eps_s = eps / 3, beta_s = beta / 3, delta_s = delta / 3;
  const std::size_t trie_size = n * ell * ell;  // retained-structure scale
  const std::size_t n_paths = n * ell;
  const std::size_t T = std::bit_ceil(ell);
  const double alpha_c =
      mode == Mode::Pure
          ? candidate_alpha_pure(ell, n, sigma, eps_s, beta_s)
          : candidate_alpha_approx(ell, cap, n, sigma, eps_s, delta_s, beta_s);
  const double L = root_counts_l1_sensitivity(ell, trie_size);
  const double roots =
      mode == Mode::Pure
          ? root_counts_bound_pure(ell, trie_size, n_paths, eps_s, beta_s)
          : root_counts_bound_gaussian(ell, cap, trie_size, n_paths, eps_s,
                                       delta_s, beta_s);
  const double sums =
      mode == Mode::Pure
          ? prefix_sums_bound(L, eps_s, n_paths, T, beta_s)
          : prefix_sums_gaussian_bound(L, std::min(2.0 * cap, L), eps_s,
                                       delta_s, n_paths, T, beta_s);
  const double node = roots + sums;
  return std::max({node, 3.0 * alpha_c, 3.0 * node});
}

}  // namespace

TEST_CASE("document-count task: the approximate bound wins for long documents") {
  const std::size_t n = 100, sigma = 4;
  const double eps = 1.0, delta = 1e-6, beta = 0.1;
  double prev_ratio = 0.0;
  double at_top_pure = 0.0, at_top_approx = 0.0;
  for (std::size_t ell = 2; ell <= (1u << 14); ell *= 2) {
    const double pure =
        pipeline_alpha_all(Mode::Pure, n, ell, sigma, 1, eps, 0.0, beta);
    const double approx =
        pipeline_alpha_all(Mode::Approx, n, ell, sigma, 1, eps, delta, beta);
    const double ratio = pure / approx;
    CHECK(ratio > prev_ratio);  // the advantage grows with ell
    prev_ratio = ratio;
    at_top_pure = pure;
    at_top_approx = approx;
  }
  CHECK(at_top_approx < at_top_pure);
}

TEST_CASE("build validates its configuration") {
  auto db = make_db({"ab"}, 2);
  SuffixIndex idx(db);
  BuildParams p;
  p.mode = Mode::Approx;
  p.delta = 0.0;
  CHECK_THROWS_AS(build_count_structure(db, idx, p), std::invalid_argument);
  BuildParams p2;
  p2.mode = Mode::Pure;
  p2.delta = 0.5;
  CHECK_THROWS_AS(build_count_structure(db, idx, p2), std::invalid_argument);
  BuildParams p3;
  p3.cap = 100;  // beyond ell
  CHECK_THROWS_AS(build_count_structure(db, idx, p3), std::invalid_argument);
}
