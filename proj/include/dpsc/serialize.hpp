#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>

#include "dpsc/counting_trie.hpp"

namespace dpsc {

/// Raised on a bad magic number, unsupported version, truncated file, or
/// checksum mismatch.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Versioned little-endian container: fixed header, alphabet dictionary,
/// node table (parent, symbol, count as raw f64 bits), CRC-32 trailer.
/// The exact byte layout is documented in the README; round-trips are
/// bit-lossless.
void save_structure(const PrivateCountTrie& s, std::ostream& out);
void save_structure_file(const PrivateCountTrie& s, const std::string& path);

PrivateCountTrie load_structure(std::istream& in);
PrivateCountTrie load_structure_file(const std::string& path);

std::uint32_t crc32(std::span<const unsigned char> bytes);

}  // namespace dpsc
