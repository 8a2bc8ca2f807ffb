#include "dpsc/suffix_index.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dpsc {

namespace {

// Suffix array by prefix doubling; O(N log^2 N), plenty at this scale.
std::vector<std::uint32_t> build_suffix_array(const std::vector<std::int32_t>& text) {
  const std::size_t n = text.size();
  std::vector<std::uint32_t> sa(n);
  std::iota(sa.begin(), sa.end(), 0);
  std::vector<std::int64_t> rank(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) rank[i] = text[i];
  for (std::size_t k = 1;; k *= 2) {
    auto key = [&](std::uint32_t i) {
      return std::pair<std::int64_t, std::int64_t>(
          rank[i], i + k < n ? rank[i + k] : -1);
    };
    std::sort(sa.begin(), sa.end(),
              [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
    tmp[sa[0]] = 0;
    for (std::size_t i = 1; i < n; ++i) {
      tmp[sa[i]] = tmp[sa[i - 1]] + (key(sa[i - 1]) < key(sa[i]) ? 1 : 0);
    }
    rank = tmp;
    if (rank[sa[n - 1]] == static_cast<std::int64_t>(n - 1)) break;
  }
  return sa;
}

// Kasai.
std::vector<std::uint32_t> build_lcp(const std::vector<std::int32_t>& text,
                                     const std::vector<std::uint32_t>& sa) {
  const std::size_t n = text.size();
  std::vector<std::uint32_t> inv(n), lcp(n, 0);
  for (std::size_t i = 0; i < n; ++i) inv[sa[i]] = static_cast<std::uint32_t>(i);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (inv[i] > 0) {
      const std::size_t j = sa[inv[i] - 1];
      while (i + h < n && j + h < n && text[i + h] == text[j + h]) ++h;
      lcp[inv[i]] = static_cast<std::uint32_t>(h);
      if (h > 0) --h;
    } else {
      h = 0;
    }
  }
  return lcp;
}

}  // namespace

SuffixIndex::SuffixIndex(const Database& db) : db_(db) {
  if (db_.docs.empty()) throw std::invalid_argument("cannot index an empty database");
  const std::int32_t sigma = db_.alphabet.size();
  std::size_t total = 0;
  for (const auto& d : db_.docs) total += d.size() + 1;
  text_.reserve(total);
  doc_of_pos_.reserve(total);
  doc_start_.reserve(db_.docs.size());
  for (std::size_t i = 0; i < db_.docs.size(); ++i) {
    doc_start_.push_back(text_.size());
    for (unsigned char c : db_.docs[i]) {
      text_.push_back(c);
      doc_of_pos_.push_back(static_cast<std::uint32_t>(i));
    }
    text_.push_back(sigma + static_cast<std::int32_t>(i));
    doc_of_pos_.push_back(static_cast<std::uint32_t>(i));
  }
  sa_ = build_suffix_array(text_);
  lcp_ = build_lcp(text_, sa_);
}

int SuffixIndex::compare_suffix(std::size_t pos, const Symbols& pattern) const {
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    // every suffix ends with a sentinel that no pattern contains, so we
    // always hit a mismatch before running off the end
    if (pos + j >= text_.size()) return -1;
    const std::int32_t t = text_[pos + j];
    const std::int32_t p = static_cast<unsigned char>(pattern[j]);
    if (t != p) return t < p ? -1 : 1;
  }
  return 0;
}

SuffixIndex::SaRange SuffixIndex::pattern_range(const Symbols& pattern) const {
  const auto lo = std::partition_point(
      sa_.begin(), sa_.end(),
      [&](std::uint32_t s) { return compare_suffix(s, pattern) < 0; });
  const auto hi = std::partition_point(
      lo, sa_.end(),
      [&](std::uint32_t s) { return compare_suffix(s, pattern) == 0; });
  return SaRange{static_cast<std::uint32_t>(lo - sa_.begin()),
                 static_cast<std::uint32_t>(hi - sa_.begin())};
}

std::int64_t SuffixIndex::total_count(const Symbols& pattern) const {
  validate_pattern(db_.alphabet, pattern);
  if (pattern.empty()) {
    std::int64_t t = 0;
    for (const auto& d : db_.docs) t += static_cast<std::int64_t>(d.size());
    return t;
  }
  const SaRange r = pattern_range(pattern);
  return static_cast<std::int64_t>(r.hi) - r.lo;
}

std::int64_t SuffixIndex::count_db(const Symbols& pattern,
                                   std::int64_t cap) const {
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  validate_pattern(db_.alphabet, pattern);
  if (pattern.empty()) {
    std::int64_t t = 0;
    for (const auto& d : db_.docs)
      t += std::min<std::int64_t>(cap, static_cast<std::int64_t>(d.size()));
    return t;
  }
  const SaRange r = pattern_range(pattern);
  if (cap >= static_cast<std::int64_t>(db_.ell)) {
    return static_cast<std::int64_t>(r.hi) - r.lo;  // cap can never bind
  }
  return capped_count_of_range(r.lo, r.hi, cap);
}

std::int64_t SuffixIndex::capped_count_of_range(std::uint32_t sa_lo,
                                                std::uint32_t sa_hi,
                                                std::int64_t cap) const {
  if (cap >= static_cast<std::int64_t>(db_.ell)) {
    return static_cast<std::int64_t>(sa_hi) - sa_lo;
  }
  std::vector<std::int64_t> per_doc(db_.docs.size(), 0);
  for (std::uint32_t i = sa_lo; i < sa_hi; ++i) {
    ++per_doc[doc_of_pos_[sa_[i]]];
  }
  std::int64_t total = 0;
  for (std::int64_t c : per_doc) total += std::min(cap, c);
  return total;
}

std::vector<SuffixIndex::DistinctSubstring> SuffixIndex::distinct_substrings(
    std::size_t length) const {
  std::vector<DistinctSubstring> out;
  if (length == 0 || length > db_.ell) return out;
  const std::size_t n = sa_.size();
  std::size_t i = 0;
  while (i < n) {
    // group of suffixes sharing the first `length` symbols
    std::size_t j = i;
    while (j + 1 < n && lcp_[j + 1] >= length) ++j;
    const std::size_t pos = sa_[i];
    // valid only if the window stays inside one document (no sentinel)
    bool valid = pos + length <= text_.size();
    if (valid) {
      const std::size_t doc = doc_of_pos_[pos];
      const std::size_t doc_end = doc_start_[doc] + db_.docs[doc].size();
      valid = pos + length <= doc_end;
    }
    if (valid) {
      out.push_back(DistinctSubstring{pos,
                                      static_cast<std::int64_t>(j - i + 1),
                                      static_cast<std::uint32_t>(i),
                                      static_cast<std::uint32_t>(j + 1)});
    }
    i = j + 1;
  }
  return out;
}

Symbols SuffixIndex::substring_at(std::size_t text_pos,
                                  std::size_t length) const {
  Symbols out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const std::int32_t c = text_.at(text_pos + i);
    if (c >= db_.alphabet.size()) throw std::out_of_range("substring crosses a document border");
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::optional<std::size_t> SuffixIndex::find(const Symbols& pattern) const {
  validate_pattern(db_.alphabet, pattern);
  if (pattern.empty()) return 0;
  const SaRange r = pattern_range(pattern);
  if (r.lo == r.hi) return std::nullopt;
  std::size_t best = text_.size();
  for (std::uint32_t i = r.lo; i < r.hi; ++i) best = std::min<std::size_t>(best, sa_[i]);
  return best;
}

std::optional<std::size_t> SuffixIndex::concat_occurrence(
    std::size_t a, std::size_t len_a, std::size_t b, std::size_t len_b) const {
  Symbols pattern = substring_at(a, len_a);
  pattern += substring_at(b, len_b);
  return find(pattern);
}

std::size_t SuffixIndex::lce(std::size_t a, std::size_t b) const {
  if (a == b) return text_.size() - a;
  std::size_t k = 0;
  // sentinels are unique, so distinct suffixes mismatch at or before the
  // first document border
  while (a + k < text_.size() && b + k < text_.size() &&
         text_[a + k] == text_[b + k]) {
    ++k;
  }
  return k;
}

std::size_t SuffixIndex::doc_of(std::size_t text_pos) const {
  return doc_of_pos_.at(text_pos);
}

std::size_t SuffixIndex::offset_in_doc(std::size_t text_pos) const {
  return text_pos - doc_start_[doc_of_pos_.at(text_pos)];
}

}  // namespace dpsc
