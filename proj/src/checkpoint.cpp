#include "repulsor/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace repulsor {

namespace {

constexpr char kMagic[5] = {'R', 'P', 'L', 'S', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

struct Reader {
  const std::vector<uint8_t>& b;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > b.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos++]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos++]) << (8 * i);
    return v;
  }
  double f64() {
    const uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

}  // namespace

uint64_t fnv1a64(const uint8_t* p, size_t n) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Checkpoint::add(const std::string& name, const Tensor& t) {
  entries.push_back({name, t.shape(), t.data()});
}

void Checkpoint::add_scalar(const std::string& name, double v) {
  entries.push_back({name, {}, {v}});
}

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

const Checkpoint::Entry& Checkpoint::require(const std::string& name) const {
  const Entry* e = find(name);
  if (!e) throw std::runtime_error("checkpoint: missing entry '" + name + "'");
  return *e;
}

double Checkpoint::scalar(const std::string& name) const {
  const Entry& e = require(name);
  if (e.data.size() != 1)
    throw std::runtime_error("checkpoint: entry '" + name + "' is not scalar");
  return e.data[0];
}

std::vector<uint8_t> Checkpoint::serialize() const {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, static_cast<uint32_t>(e.shape.size()));
    size_t n = 1;
    for (int d : e.shape) {
      put_u64(out, static_cast<uint64_t>(d));
      n *= static_cast<size_t>(d);
    }
    if (n != e.data.size())
      throw std::runtime_error("checkpoint: entry '" + e.name + "' shape mismatch");
    for (double v : e.data) put_f64(out, v);
  }
  put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 4 + 8)
    throw std::runtime_error("checkpoint: file too small");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  Reader body{bytes};
  body.pos = bytes.size() - 8;
  const uint64_t digest = body.u64();
  if (fnv1a64(bytes.data(), bytes.size() - 8) != digest)
    throw std::runtime_error("checkpoint: digest mismatch");

  Reader r{bytes};
  r.pos = sizeof(kMagic);
  if (r.u32() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  const uint32_t count = r.u32();
  Checkpoint ck;
  ck.entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Entry e;
    const uint32_t name_len = r.u32();
    r.need(name_len);
    e.name.assign(reinterpret_cast<const char*>(bytes.data()) + r.pos, name_len);
    r.pos += name_len;
    const uint32_t rank = r.u32();
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      const uint64_t ext = r.u64();
      e.shape.push_back(static_cast<int>(ext));
      n *= static_cast<size_t>(ext);
    }
    e.data.resize(n);
    for (size_t j = 0; j < n; ++j) e.data[j] = r.f64();
    ck.entries.push_back(std::move(e));
  }
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace repulsor
