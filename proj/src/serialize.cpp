#include "dpsc/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <ostream>
#include <vector>

namespace dpsc {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'P', 'S', 'C', 'T', 'R', 'I', 'E'};
constexpr std::uint32_t kVersion = 1;

constexpr std::uint32_t kFlagZeroNoise = 1u << 0;
constexpr std::uint32_t kFlagAbort = 1u << 1;
constexpr std::uint32_t kFlagApprox = 1u << 2;
constexpr std::uint32_t kFlagQgram = 1u << 3;

class Buffer {
 public:
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    data_.insert(data_.end(), b, b + n);
  }
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
      auto* b = reinterpret_cast<unsigned char*>(&v);
      std::reverse(b, b + sizeof(T));
    }
    put_bytes(&v, sizeof(T));
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<unsigned char>& bytes() const { return data_; }

 private:
  std::vector<unsigned char> data_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> data) : data_(std::move(data)) {}
  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos_ + sizeof(T) > data_.size()) throw FormatError("truncated structure file");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      auto* b = reinterpret_cast<unsigned char*>(&v);
      std::reverse(b, b + sizeof(T));
    }
    pos_ += sizeof(T);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_string(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError("truncated structure file");
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  const std::vector<unsigned char>& bytes() const { return data_; }

 private:
  std::vector<unsigned char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const unsigned char> bytes) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t c = 0xffffffffu;
  for (unsigned char b : bytes) c = table[(c ^ b) & 0xffu] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

void save_structure(const PrivateCountTrie& s, std::ostream& out) {
  const StructureMeta& m = s.meta();
  Buffer buf;
  buf.put_bytes(kMagic.data(), kMagic.size());
  buf.put<std::uint32_t>(kVersion);
  std::uint32_t flags = 0;
  if (m.zero_noise) flags |= kFlagZeroNoise;
  if (m.abort_level >= 0) flags |= kFlagAbort;
  if (m.mode == Mode::Approx) flags |= kFlagApprox;
  if (m.qgram) flags |= kFlagQgram;
  buf.put<std::uint32_t>(flags);
  buf.put<std::int32_t>(m.abort_level);
  buf.put<std::uint64_t>(m.q);
  buf.put<std::uint64_t>(m.n);
  buf.put<std::uint64_t>(m.ell);
  buf.put<std::uint64_t>(m.sigma);
  buf.put<std::int64_t>(m.cap);
  buf.put_f64(m.epsilon);
  buf.put_f64(m.delta);
  buf.put_f64(m.beta);
  buf.put<std::uint64_t>(m.seed);
  buf.put_f64(m.alpha_candidates);
  buf.put_f64(m.tau_candidates);
  buf.put_f64(m.alpha_node);
  buf.put_f64(m.alpha_all);
  buf.put_f64(m.prune_threshold);
  const std::string& dict = s.alphabet().dictionary();
  buf.put<std::uint32_t>(static_cast<std::uint32_t>(dict.size()));
  buf.put_bytes(dict.data(), dict.size());
  buf.put<std::uint32_t>(static_cast<std::uint32_t>(s.node_count()));
  for (const auto& node : s.nodes()) {
    buf.put<std::int32_t>(node.parent);
    buf.put<std::uint8_t>(node.symbol);
    buf.put_f64(node.count);
  }
  const std::uint32_t crc = crc32(buf.bytes());
  Buffer trailer;
  trailer.put<std::uint32_t>(crc);
  out.write(reinterpret_cast<const char*>(buf.bytes().data()),
            static_cast<std::streamsize>(buf.bytes().size()));
  out.write(reinterpret_cast<const char*>(trailer.bytes().data()),
            static_cast<std::streamsize>(trailer.bytes().size()));
  if (!out) throw FormatError("failed to write structure");
}

void save_structure_file(const PrivateCountTrie& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open output file: " + path);
  save_structure(s, out);
}

PrivateCountTrie load_structure(std::istream& in) {
  std::vector<unsigned char> data{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  if (data.size() < kMagic.size() + 4) throw FormatError("truncated structure file");
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(data[data.size() - 4]) |
      static_cast<std::uint32_t>(data[data.size() - 3]) << 8 |
      static_cast<std::uint32_t>(data[data.size() - 2]) << 16 |
      static_cast<std::uint32_t>(data[data.size() - 1]) << 24;
  data.resize(data.size() - 4);
  if (crc32(data) != stored_crc) throw FormatError("checksum mismatch: structure file is corrupted");

  Reader r(std::move(data));
  if (r.get_string(kMagic.size()) != std::string(kMagic.data(), kMagic.size())) {
    throw FormatError("bad magic: not a structure file");
  }
  const std::uint32_t version = r.get<std::uint32_t>();
  if (version != kVersion) throw FormatError("unsupported format version " + std::to_string(version));

  StructureMeta m;
  const std::uint32_t flags = r.get<std::uint32_t>();
  m.zero_noise = flags & kFlagZeroNoise;
  m.mode = (flags & kFlagApprox) ? Mode::Approx : Mode::Pure;
  m.qgram = flags & kFlagQgram;
  m.abort_level = r.get<std::int32_t>();
  m.q = r.get<std::uint64_t>();
  m.n = r.get<std::uint64_t>();
  m.ell = r.get<std::uint64_t>();
  m.sigma = r.get<std::uint64_t>();
  m.cap = r.get<std::int64_t>();
  m.epsilon = r.get_f64();
  m.delta = r.get_f64();
  m.beta = r.get_f64();
  m.seed = r.get<std::uint64_t>();
  m.alpha_candidates = r.get_f64();
  m.tau_candidates = r.get_f64();
  m.alpha_node = r.get_f64();
  m.alpha_all = r.get_f64();
  m.prune_threshold = r.get_f64();

  const std::uint32_t dict_size = r.get<std::uint32_t>();
  std::string dict = r.get_string(dict_size);
  Alphabet alphabet = Alphabet::from_dictionary(
      std::move(dict), static_cast<int>(std::max<std::uint64_t>(m.sigma, 2)));

  const std::uint32_t node_count = r.get<std::uint32_t>();
  std::vector<PrivateCountTrie::Node> nodes;
  nodes.reserve(node_count);
  for (std::uint32_t i = 0; i < node_count; ++i) {
    PrivateCountTrie::Node node;
    node.parent = r.get<std::int32_t>();
    node.symbol = r.get<std::uint8_t>();
    node.count = r.get_f64();
    nodes.push_back(node);
  }
  if (r.pos() != r.bytes().size()) throw FormatError("trailing bytes in structure file");
  return PrivateCountTrie(std::move(nodes), std::move(alphabet), std::move(m));
}

PrivateCountTrie load_structure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open structure file: " + path);
  return load_structure(in);
}

}  // namespace dpsc
