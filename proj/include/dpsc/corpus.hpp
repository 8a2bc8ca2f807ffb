#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpsc {

/// A document or pattern: dense symbol codes 0..sigma-1, one per byte.
using Symbols = std::string;

/// Maps raw text bytes to dense symbol codes and back. The size used in
/// privacy bounds is either the observed number of distinct bytes or a
/// pinned override.
class Alphabet {
 public:
  /// Codes 0..size-1 map to themselves (programmatic databases, tests).
  static Alphabet identity(int size);
  /// Dictionary over the distinct bytes of `lines`, sorted; size = observed.
  static Alphabet from_text(const std::vector<std::string>& lines);
  /// Same dictionary, but the declared size is pinned (must cover the
  /// observed bytes).
  static Alphabet from_text_pinned(const std::vector<std::string>& lines,
                                   int size);

  int size() const { return size_; }

  /// Throws std::invalid_argument on a byte without a code.
  Symbols encode(std::string_view text) const;
  std::optional<Symbols> try_encode(std::string_view text) const;
  std::string decode(const Symbols& codes) const;

  /// code i -> original byte; identity alphabets map i -> byte i.
  const std::string& dictionary() const { return code_to_byte_; }
  static Alphabet from_dictionary(std::string code_to_byte, int size);

 private:
  Alphabet() = default;
  int size_ = 0;
  std::string code_to_byte_;
  std::array<std::int16_t, 256> byte_to_code_{};
};

/// Multiset of documents over a shared alphabet. `ell` is the document
/// length bound entering every privacy bound; it is at least the longest
/// document. Neighboring databases differ by replacing one document.
struct Database {
  std::vector<Symbols> docs;
  Alphabet alphabet = Alphabet::identity(2);
  std::size_t ell = 0;

  std::size_t size() const { return docs.size(); }

  /// Validates non-emptiness, per-document length and symbol range.
  static Database from_documents(std::vector<Symbols> docs, Alphabet alphabet,
                                 std::optional<std::size_t> ell_override = {});

  /// The neighbor obtained by replacing the document at `position`.
  Database with_replacement(std::size_t position, Symbols replacement) const;
};

/// Number of (possibly overlapping) start positions of `pattern` in `doc`;
/// |doc| for the empty pattern.
std::int64_t count(const Symbols& pattern, const Symbols& doc);

/// min(cap, count(pattern, doc)). cap must be >= 1.
std::int64_t count_capped(const Symbols& pattern, const Symbols& doc,
                          std::int64_t cap);

/// Sum of count_capped over all documents. Validates the pattern against the
/// database alphabet. cap=1 is a document count, cap=ell a substring count.
std::int64_t count_db(const Symbols& pattern, const Database& db,
                      std::int64_t cap);

void validate_pattern(const Alphabet& alphabet, const Symbols& pattern);

/// Corpus file: one document per line; an optional first line
/// `#alphabet=<int>` pins the alphabet size.
Database read_corpus(std::istream& in, std::optional<int> alphabet_override,
                     std::optional<std::size_t> max_len);
Database read_corpus_file(const std::string& path,
                          std::optional<int> alphabet_override = {},
                          std::optional<std::size_t> max_len = {});

}  // namespace dpsc
