#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpsc/corpus.hpp"

namespace dpsc {

/// Exact substring oracle over the concatenation S1#1 S2#2 ... Sn#n with one
/// distinct sentinel per document. Sentinels carry codes >= |alphabet| and
/// never match any pattern symbol, so matches cannot cross document borders.
///
/// Built once from an immutable database; all queries are const and safe to
/// run concurrently.
class SuffixIndex {
 public:
  explicit SuffixIndex(const Database& db);

  const Database& db() const { return db_; }
  std::size_t text_size() const { return text_.size(); }

  /// Total number of occurrences of the pattern across all documents.
  std::int64_t total_count(const Symbols& pattern) const;

  /// Sum over documents of min(cap, per-document occurrences). The empty
  /// pattern counts as |S| occurrences per document.
  std::int64_t count_db(const Symbols& pattern, std::int64_t cap) const;

  /// One distinct substring of a given length, as a text location plus its
  /// suffix-array range.
  struct DistinctSubstring {
    std::size_t text_pos;
    std::int64_t total;  // occurrences across all documents
    std::uint32_t sa_lo;
    std::uint32_t sa_hi;  // half-open
  };

  /// All distinct substrings of exactly `length`, in lexicographic order.
  std::vector<DistinctSubstring> distinct_substrings(std::size_t length) const;

  /// Capped count for an enumerated suffix-array range.
  std::int64_t capped_count_of_range(std::uint32_t sa_lo, std::uint32_t sa_hi,
                                     std::int64_t cap) const;

  Symbols substring_at(std::size_t text_pos, std::size_t length) const;

  /// Leftmost text position where the pattern occurs, if any.
  std::optional<std::size_t> find(const Symbols& pattern) const;

  /// Substring concatenation query: does text[a..a+len_a) . text[b..b+len_b)
  /// occur in the database, and where?
  std::optional<std::size_t> concat_occurrence(std::size_t a, std::size_t len_a,
                                               std::size_t b,
                                               std::size_t len_b) const;

  /// Longest common extension of the suffixes starting at two text positions.
  std::size_t lce(std::size_t a, std::size_t b) const;

  std::size_t doc_of(std::size_t text_pos) const;
  std::size_t offset_in_doc(std::size_t text_pos) const;

 private:
  struct SaRange {
    std::uint32_t lo, hi;
  };
  SaRange pattern_range(const Symbols& pattern) const;
  int compare_suffix(std::size_t pos, const Symbols& pattern) const;

  Database db_;
  std::vector<std::int32_t> text_;     // codes, sentinel sigma+i after doc i
  std::vector<std::uint32_t> sa_;
  std::vector<std::uint32_t> lcp_;     // lcp_[i] = lcp(sa_[i-1], sa_[i]); lcp_[0]=0
  std::vector<std::uint32_t> doc_of_pos_;
  std::vector<std::size_t> doc_start_;
};

}  // namespace dpsc
