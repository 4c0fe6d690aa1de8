#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repulsor/tensor.hpp"

namespace repulsor {

uint64_t fnv1a64(const uint8_t* p, size_t n);

// Binary container: "RPLS1" magic, u32 version, u32 entry count, then
// (name, rank, dims, little-endian f64 payload) per entry, closed by an
// FNV-1a 64 digest of all preceding bytes. Save -> load is bit-exact.
struct Checkpoint {
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
  };

  std::vector<Entry> entries;

  void add(const std::string& name, const Tensor& t);
  void add_scalar(const std::string& name, double v);
  const Entry* find(const std::string& name) const;
  const Entry& require(const std::string& name) const;
  double scalar(const std::string& name) const;

  std::vector<uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<uint8_t>& bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace repulsor
