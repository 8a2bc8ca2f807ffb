#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "dpsc/corpus.hpp"
#include "dpsc/suffix_index.hpp"
#include "test_support.hpp"

using namespace dpsc;
using testsup::make_db;
using testsup::sym;

TEST_CASE("count follows the sliding-window definition") {
  CHECK(count(sym(""), sym("abc")) == 3);  // empty pattern counts |S|
  CHECK(count(sym("abc"), sym("abc")) == 1);
  CHECK(count(sym("aa"), sym("aaaa")) == 3);
  CHECK(count(sym("aaaa"), sym("aa")) == 0);
}

TEST_CASE("count_capped caps per document") {
  CHECK(count_capped(sym("aa"), sym("aaaa"), 1) == 1);
  CHECK(count_capped(sym("aa"), sym("aaaa"), 2) == 2);
  CHECK(count_capped(sym("zz"), sym("aaaa"), 5) == 0);
  CHECK_THROWS_AS(count_capped(sym("aa"), sym("aaaa"), 0),
                  std::invalid_argument);
  CHECK(count_capped(sym(""), sym("abc"), 2) == 2);
}

TEST_CASE("count_db sums capped counts") {
  auto db2 = make_db({"ab", "ba"}, 2);
  CHECK(count_db(sym("a"), db2, 1) == 2);
  auto db3 = make_db({"aa", "ba"}, 2);
  CHECK(count_db(sym("a"), db3, 2) == 3);
  auto db4 = make_db({"ab", "ba"}, 3);
  CHECK(count_db(sym("c"), db4, 1) == 0);
  CHECK_THROWS_AS(count_db(sym("c"), db2, 1), std::invalid_argument);
}

TEST_CASE("capped counts are dominated and monotone in the cap") {
  Rng rng(7);
  for (int iter = 0; iter < 40; ++iter) {
    auto db = testsup::random_db(rng, 4, 8, 3);
    for (const auto& p : testsup::all_distinct_substrings(db)) {
      std::int64_t prev = 0;
      for (std::int64_t cap = 1; cap <= static_cast<std::int64_t>(db.ell);
           ++cap) {
        std::int64_t c = count_db(p, db, cap);
        CHECK(c >= prev);
        prev = c;
      }
      CHECK(prev <= count_db(p, db, static_cast<std::int64_t>(db.ell)));
    }
  }
}

TEST_CASE("prefix monotonicity") {
  Rng rng(8);
  for (int iter = 0; iter < 30; ++iter) {
    auto db = testsup::random_db(rng, 3, 8, 2);
    for (const auto& p : testsup::all_distinct_substrings(db)) {
      if (p.size() < 2) continue;
      Symbols prefix = p.substr(0, p.size() - 1);
      for (const auto& d : db.docs) {
        CHECK(count(prefix, d) >= count(p, d));
      }
    }
  }
}

TEST_CASE("per-length occurrence mass") {
  Rng rng(9);
  for (int iter = 0; iter < 20; ++iter) {
    auto db = testsup::random_db(rng, 3, 7, 2);
    for (const auto& d : db.docs) {
      for (std::size_t m = 1; m <= d.size(); ++m) {
        std::int64_t total = 0;
        for (const auto& p : testsup::all_strings(m, 2)) total += count(p, d);
        CHECK(total == static_cast<std::int64_t>(d.size() - m + 1));
      }
    }
  }
}

TEST_CASE("same-length L1 sensitivity is at most 2*ell") {
  Rng rng(10);
  for (int iter = 0; iter < 6; ++iter) {
    auto db = testsup::random_db(rng, 4, 6, 2);
    const auto replacements = testsup::all_strings(db.ell, 2);
    for (std::size_t pos = 0; pos < db.size(); ++pos) {
      for (const auto& r : replacements) {
        auto db2 = db.with_replacement(pos, r);
        for (std::size_t m = 1; m <= db.ell; ++m) {
          std::int64_t l1 = 0;
          for (const auto& p : testsup::all_strings(m, 2)) {
            l1 += std::abs(count_db(p, db, static_cast<std::int64_t>(db.ell)) -
                           count_db(p, db2, static_cast<std::int64_t>(db.ell)));
          }
          CHECK(l1 <= 2 * static_cast<std::int64_t>(db.ell));
        }
      }
    }
  }
}

TEST_CASE("with_replacement validates and replaces") {
  auto db = make_db({"ab", "ba"}, 2);
  auto db2 = db.with_replacement(0, sym("aa"));
  CHECK(db2.docs[0] == sym("aa"));
  CHECK(db2.docs[1] == sym("ba"));
  auto db3 = db.with_replacement(1, sym("bb"));
  CHECK(db3.docs[0] == sym("ab"));
  CHECK(db3.docs[1] == sym("bb"));
  auto self = make_db({"ab"}, 2).with_replacement(0, sym("ab"));
  CHECK(self.docs == std::vector<Symbols>{sym("ab")});
  CHECK_THROWS_AS(db.with_replacement(2, sym("aa")), std::invalid_argument);
  CHECK_THROWS_AS(db.with_replacement(0, sym("aaa")), std::invalid_argument);
  CHECK_THROWS_AS(db.with_replacement(0, sym("")), std::invalid_argument);
}

TEST_CASE("database construction validates") {
  CHECK_THROWS_AS(Database::from_documents({}, Alphabet::identity(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      Database::from_documents({sym("c")}, Alphabet::identity(2)),
      std::invalid_argument);
  CHECK_THROWS_AS(
      Database::from_documents({sym("aaa")}, Alphabet::identity(2), 2),
      std::invalid_argument);
}

TEST_CASE("suffix index: enumeration, concatenation and lce examples") {
  auto db = make_db({"ab", "ba"}, 2);
  SuffixIndex idx(db);
  auto ones = idx.distinct_substrings(1);
  REQUIRE(ones.size() == 2);
  CHECK(idx.substring_at(ones[0].text_pos, 1) == sym("a"));
  CHECK(ones[0].total == 2);
  CHECK(idx.substring_at(ones[1].text_pos, 1) == sym("b"));
  CHECK(ones[1].total == 2);

  auto db2 = make_db({"abba"}, 2);
  SuffixIndex idx2(db2);
  const auto pos_ab = idx2.find(sym("ab"));
  const auto pos_ba = idx2.find(sym("ba"));
  REQUIRE(pos_ab.has_value());
  REQUIRE(pos_ba.has_value());
  auto hit = idx2.concat_occurrence(*pos_ab, 2, *pos_ba, 2);
  REQUIRE(hit.has_value());
  CHECK(idx2.offset_in_doc(*hit) == 0);
  CHECK_FALSE(idx2.concat_occurrence(*pos_ba, 2, *pos_ba, 2).has_value());

  auto db3 = make_db({"ab", "ac"}, 3);
  SuffixIndex idx3(db3);
  CHECK(idx3.lce(0, 3) == 1);  // "ab..." vs "ac...": common prefix "a"
}

TEST_CASE("suffix index agrees with the naive scan") {
  Rng rng(11);
  for (int iter = 0; iter < 30; ++iter) {
    const int sigma = (iter % 2) ? 2 : 4;
    auto db = testsup::random_db(rng, 6, 10, sigma);
    SuffixIndex idx(db);
    for (const auto& p : testsup::all_distinct_substrings(db)) {
      for (std::int64_t cap : {std::int64_t{1}, std::int64_t{2},
                               static_cast<std::int64_t>(db.ell)}) {
        CHECK(idx.count_db(p, cap) == testsup::scan_count_db(p, db, cap));
      }
    }
    // absent patterns answer 0
    CHECK(idx.count_db(Symbols(db.ell + 3, char(0)), 1) == 0);
    // enumeration matches the brute-force distinct set
    for (std::size_t m = 1; m <= db.ell; ++m) {
      std::vector<Symbols> enumerated;
      for (const auto& ds : idx.distinct_substrings(m)) {
        enumerated.push_back(idx.substring_at(ds.text_pos, m));
        CHECK(ds.total == testsup::scan_count_db(
                              enumerated.back(), db,
                              static_cast<std::int64_t>(db.ell)));
      }
      std::vector<Symbols> expected;
      for (const auto& s : testsup::all_distinct_substrings(db)) {
        if (s.size() == m) expected.push_back(s);
      }
      CHECK(enumerated == expected);
    }
  }
}

TEST_CASE("suffix index rejects an empty database input") {
  Database db = make_db({"ab"}, 2);
  db.docs.clear();
  CHECK_THROWS(SuffixIndex{db});
}

TEST_CASE("corpus file parsing") {
  SUBCASE("observed alphabet") {
    std::istringstream in("abc\ncba\n");
    Database db = read_corpus(in, {}, {});
    CHECK(db.size() == 2);
    CHECK(db.alphabet.size() == 3);
    CHECK(db.ell == 3);
    CHECK(db.alphabet.decode(db.docs[0]) == "abc");
  }
  SUBCASE("header pins the alphabet size") {
    std::istringstream in("#alphabet=7\nab\n");
    Database db = read_corpus(in, {}, {});
    CHECK(db.alphabet.size() == 7);
  }
  SUBCASE("pinned size must cover the observed symbols") {
    std::istringstream in("#alphabet=2\nabc\n");
    CHECK_THROWS_AS(read_corpus(in, {}, {}), std::invalid_argument);
  }
  SUBCASE("overlong lines are rejected, not truncated") {
    std::istringstream in("abcd\n");
    CHECK_THROWS_AS(read_corpus(in, {}, 3), std::invalid_argument);
  }
  SUBCASE("empty corpus is rejected") {
    std::istringstream in("\n\n");
    CHECK_THROWS(read_corpus(in, {}, {}));
  }
}

TEST_CASE("patterns longer than ell count zero by convention") {
  auto db = make_db({"abab"}, 2);
  SuffixIndex idx(db);
  Symbols longer = sym("ababa");
  CHECK(idx.count_db(longer, 1) == 0);
  CHECK(count_db(longer, db, 1) == 0);
}
