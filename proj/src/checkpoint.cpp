#include "mmia/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mmia/errors.hpp"

namespace mmia::checkpoint {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'C', 'K'};
constexpr std::uint32_t kTrailer = 0x4b434d4d;

void w_u32(std::ostream& o, std::uint32_t v) {
  o.write(reinterpret_cast<const char*>(&v), 4);
}
void w_i64(std::ostream& o, std::int64_t v) {
  o.write(reinterpret_cast<const char*>(&v), 8);
}
void w_str(std::ostream& o, const std::string& s) {
  w_u32(o, static_cast<std::uint32_t>(s.size()));
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct Reader {
  std::ifstream in;
  std::string context;

  void fail(const std::string& why) {
    throw CheckpointError("checkpoint " + context + ": " + why);
  }
  void raw(void* dst, std::size_t n) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) fail("truncated file");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) fail("implausible string length");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
};

}  // namespace

void save(const std::filesystem::path& path, const Header& header,
          const nn::Vec& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CheckpointError("cannot open " + path.string() + " for writing");
  }
  out.write(kMagic, 4);
  w_u32(out, kFormatVersion);
  w_str(out, header.kind);
  out.put(header.arch);
  std::uint64_t vh = 0;  // hash of stored vocab, verified on load
  {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& t : header.vocab) {
      for (char c : t) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
      }
      h ^= 0xff;
      h *= 1099511628211ULL;
    }
    vh = header.vocab.empty() ? 0 : h;
  }
  out.write(reinterpret_cast<const char*>(&vh), 8);
  w_u32(out, static_cast<std::uint32_t>(header.vocab.size()));
  for (const auto& t : header.vocab) w_str(out, t);
  w_u32(out, static_cast<std::uint32_t>(header.meta.size()));
  for (const auto& [k, v] : header.meta) {
    w_str(out, k);
    w_i64(out, v);
  }
  w_u32(out, static_cast<std::uint32_t>(header.tensors.size()));
  std::size_t total = 0;
  for (const auto& t : header.tensors) {
    w_str(out, t.name);
    w_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) w_u32(out, static_cast<std::uint32_t>(d));
    total += t.count;
  }
  if (total != values.size()) {
    throw CheckpointError("tensor shapes disagree with the parameter vector");
  }
  std::vector<float> blob(values.begin(), values.end());
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  w_u32(out, kTrailer);
}

std::pair<Header, nn::Vec> load(const std::filesystem::path& path) {
  Reader r;
  r.context = path.string();
  r.in.open(path, std::ios::binary);
  if (!r.in) r.fail("file not found");

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    r.fail("unsupported format version " + std::to_string(version));
  }
  Header h;
  h.kind = r.str();
  char arch;
  r.raw(&arch, 1);
  h.arch = arch;
  std::uint64_t stored_hash;
  r.raw(&stored_hash, 8);
  const std::uint32_t vocab_n = r.u32();
  if (vocab_n > (1u << 20)) r.fail("implausible vocab size");
  h.vocab.reserve(vocab_n);
  for (std::uint32_t i = 0; i < vocab_n; ++i) h.vocab.push_back(r.str());
  {
    std::uint64_t check = 1469598103934665603ULL;
    for (const auto& t : h.vocab) {
      for (char c : t) {
        check ^= static_cast<unsigned char>(c);
        check *= 1099511628211ULL;
      }
      check ^= 0xff;
      check *= 1099511628211ULL;
    }
    if (!h.vocab.empty() && check != stored_hash) r.fail("vocab hash mismatch");
  }
  const std::uint32_t meta_n = r.u32();
  if (meta_n > (1u << 16)) r.fail("implausible metadata size");
  for (std::uint32_t i = 0; i < meta_n; ++i) {
    const std::string key = r.str();
    h.meta[key] = r.i64();
  }
  const std::uint32_t tensor_n = r.u32();
  if (tensor_n > (1u << 16)) r.fail("implausible tensor count");
  std::size_t total = 0;
  for (std::uint32_t i = 0; i < tensor_n; ++i) {
    nn::TensorSpec spec;
    spec.name = r.str();
    const std::uint32_t nd = r.u32();
    if (nd > 8) r.fail("implausible tensor rank");
    spec.count = 1;
    for (std::uint32_t d = 0; d < nd; ++d) {
      const std::uint32_t dim = r.u32();
      if (dim == 0 || dim > (1u << 24)) r.fail("implausible tensor dim");
      spec.dims.push_back(static_cast<int>(dim));
      spec.count *= dim;
    }
    spec.offset = total;
    total += spec.count;
    h.tensors.push_back(std::move(spec));
  }
  std::vector<float> blob(total);
  r.raw(blob.data(), total * sizeof(float));
  if (r.u32() != kTrailer) r.fail("missing trailer");

  nn::Vec values(blob.begin(), blob.end());
  return {std::move(h), std::move(values)};
}

}  // namespace mmia::checkpoint
