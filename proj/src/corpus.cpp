#include "dpsc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <stdexcept>

namespace dpsc {

Alphabet Alphabet::identity(int size) {
  if (size < 2 || size > 256) throw std::invalid_argument("alphabet size must be in [2,256]");
  Alphabet a;
  a.size_ = size;
  a.code_to_byte_.resize(static_cast<std::size_t>(size));
  a.byte_to_code_.fill(-1);
  for (int i = 0; i < size; ++i) {
    a.code_to_byte_[static_cast<std::size_t>(i)] = static_cast<char>(i);
    a.byte_to_code_[static_cast<std::size_t>(i)] = static_cast<std::int16_t>(i);
  }
  return a;
}

Alphabet Alphabet::from_text(const std::vector<std::string>& lines) {
  std::set<unsigned char> seen;
  for (const auto& l : lines)
    for (unsigned char c : l) seen.insert(c);
  std::string dict(seen.begin(), seen.end());
  return from_dictionary(dict, std::max(2, static_cast<int>(dict.size())));
}

Alphabet Alphabet::from_text_pinned(const std::vector<std::string>& lines,
                                    int size) {
  std::set<unsigned char> seen;
  for (const auto& l : lines)
    for (unsigned char c : l) seen.insert(c);
  if (static_cast<int>(seen.size()) > size) {
    throw std::invalid_argument("pinned alphabet size smaller than the number of distinct symbols observed");
  }
  std::string dict(seen.begin(), seen.end());
  return from_dictionary(dict, size);
}

Alphabet Alphabet::from_dictionary(std::string code_to_byte, int size) {
  if (size < 2 || size > 256) throw std::invalid_argument("alphabet size must be in [2,256]");
  if (static_cast<int>(code_to_byte.size()) > size) {
    throw std::invalid_argument("dictionary larger than alphabet size");
  }
  Alphabet a;
  a.size_ = size;
  a.code_to_byte_ = std::move(code_to_byte);
  a.byte_to_code_.fill(-1);
  for (std::size_t i = 0; i < a.code_to_byte_.size(); ++i) {
    a.byte_to_code_[static_cast<unsigned char>(a.code_to_byte_[i])] =
        static_cast<std::int16_t>(i);
  }
  return a;
}

Symbols Alphabet::encode(std::string_view text) const {
  auto enc = try_encode(text);
  if (!enc) throw std::invalid_argument("symbol outside alphabet");
  return *enc;
}

std::optional<Symbols> Alphabet::try_encode(std::string_view text) const {
  Symbols out;
  out.reserve(text.size());
  for (unsigned char c : text) {
    const std::int16_t code = byte_to_code_[c];
    if (code < 0) return std::nullopt;
    out.push_back(static_cast<char>(code));
  }
  return out;
}

std::string Alphabet::decode(const Symbols& codes) const {
  std::string out;
  out.reserve(codes.size());
  for (unsigned char c : codes) {
    if (c >= code_to_byte_.size()) throw std::invalid_argument("code outside dictionary");
    out.push_back(code_to_byte_[c]);
  }
  return out;
}

Database Database::from_documents(std::vector<Symbols> docs, Alphabet alphabet,
                                  std::optional<std::size_t> ell_override) {
  if (docs.empty()) throw std::invalid_argument("database must contain at least one document");
  std::size_t maxlen = 0;
  for (const auto& d : docs) {
    if (d.empty()) throw std::invalid_argument("documents must be non-empty");
    validate_pattern(alphabet, d);
    maxlen = std::max(maxlen, d.size());
  }
  const std::size_t ell = ell_override.value_or(maxlen);
  if (ell < maxlen) throw std::invalid_argument("document longer than ell");
  Database db;
  db.docs = std::move(docs);
  db.alphabet = std::move(alphabet);
  db.ell = ell;
  return db;
}

Database Database::with_replacement(std::size_t position,
                                    Symbols replacement) const {
  if (position >= docs.size()) throw std::invalid_argument("replacement position out of range");
  if (replacement.empty() || replacement.size() > ell) {
    throw std::invalid_argument("replacement length must be in [1, ell]");
  }
  validate_pattern(alphabet, replacement);
  Database out = *this;
  out.docs[position] = std::move(replacement);
  return out;
}

std::int64_t count(const Symbols& pattern, const Symbols& doc) {
  if (pattern.empty()) return static_cast<std::int64_t>(doc.size());
  if (pattern.size() > doc.size()) return 0;
  std::int64_t c = 0;
  const std::size_t last = doc.size() - pattern.size();
  for (std::size_t i = 0; i <= last; ++i) {
    if (doc.compare(i, pattern.size(), pattern) == 0) ++c;
  }
  return c;
}

std::int64_t count_capped(const Symbols& pattern, const Symbols& doc,
                          std::int64_t cap) {
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  return std::min(cap, count(pattern, doc));
}

std::int64_t count_db(const Symbols& pattern, const Database& db,
                      std::int64_t cap) {
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  validate_pattern(db.alphabet, pattern);
  std::int64_t total = 0;
  for (const auto& d : db.docs) total += std::min(cap, count(pattern, d));
  return total;
}

void validate_pattern(const Alphabet& alphabet, const Symbols& pattern) {
  for (unsigned char c : pattern) {
    if (c >= alphabet.size()) throw std::invalid_argument("symbol outside alphabet");
  }
}

Database read_corpus(std::istream& in, std::optional<int> alphabet_override,
                     std::optional<std::size_t> max_len) {
  std::vector<std::string> lines;
  std::optional<int> pinned = alphabet_override;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.rfind("#alphabet=", 0) == 0) {
      first = false;
      const int s = std::stoi(line.substr(10));
      if (!pinned) pinned = s;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    if (max_len && line.size() > *max_len) {
      throw std::invalid_argument("corpus line longer than the configured length cap");
    }
    lines.push_back(line);
  }
  if (lines.empty()) throw std::invalid_argument("corpus contains no documents");
  Alphabet a = pinned ? Alphabet::from_text_pinned(lines, *pinned)
                      : Alphabet::from_text(lines);
  std::vector<Symbols> docs;
  docs.reserve(lines.size());
  for (const auto& l : lines) docs.push_back(a.encode(l));
  return Database::from_documents(std::move(docs), std::move(a), max_len);
}

Database read_corpus_file(const std::string& path,
                          std::optional<int> alphabet_override,
                          std::optional<std::size_t> max_len) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return read_corpus(in, alphabet_override, max_len);
}

}  // namespace dpsc
