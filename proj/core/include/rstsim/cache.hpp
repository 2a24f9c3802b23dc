#pragma once

#include <cstdint>
#include <vector>

#include "rstsim/isa.hpp"

namespace rst {

struct CacheGeometry {
  std::uint32_t size_bytes = 32 * 1024;
  std::uint32_t assoc = 4;
  std::uint32_t line_bytes = 64;
  std::uint32_t hit_cycles = 1;

  std::uint32_t sets() const { return size_bytes / (assoc * line_bytes); }
  void validate() const;
  friend bool operator==(const CacheGeometry&, const CacheGeometry&) = default;
};

struct CacheCounters {
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;
  friend bool operator==(const CacheCounters&, const CacheCounters&) = default;
};

// Set-associative, LRU, write-allocate. Tags only; data lives in MachineState.
class CacheLevel {
 public:
  explicit CacheLevel(CacheGeometry geometry);

  // True on hit. A miss fills the line as MRU.
  bool access(Addr address);
  bool contains(Addr address) const;

  const CacheGeometry& geometry() const { return geometry_; }
  const CacheCounters& counters() const { return counters_; }

 private:
  CacheGeometry geometry_;
  std::vector<std::vector<Addr>> sets_;  // line numbers, MRU first
  CacheCounters counters_;
};

struct CacheConfig {
  CacheGeometry l1{32 * 1024, 4, 64, 1};
  CacheGeometry l2{512 * 1024, 8, 256, 5};
  CacheGeometry l3{2 * 1024 * 1024, 8, 256, 20};
  std::uint32_t memory_cycles = 200;
  friend bool operator==(const CacheConfig&, const CacheConfig&) = default;
};

enum class AccessKind : std::uint8_t { Read, Write };

// Separate L1 instruction and data caches over shared L2 and L3.
class CacheHierarchy {
 public:
  explicit CacheHierarchy(const CacheConfig& config);

  // Summed latency down to the first level that hits; fills every level above.
  std::uint32_t access_data(Addr address, AccessKind kind);
  std::uint32_t access_instruction(Addr address);

  const CacheLevel& l1i() const { return l1i_; }
  const CacheLevel& l1d() const { return l1d_; }
  const CacheLevel& l2() const { return l2_; }
  const CacheLevel& l3() const { return l3_; }

 private:
  std::uint32_t cascade(CacheLevel& l1, Addr address);

  CacheLevel l1i_;
  CacheLevel l1d_;
  CacheLevel l2_;
  CacheLevel l3_;
  std::uint32_t memory_cycles_;
};

// Cascade lookup for one data access through a fresh-or-existing hierarchy.
inline std::uint32_t cache_access(CacheHierarchy& h, Addr address, AccessKind kind) {
  return h.access_data(address, kind);
}

}  // namespace rst
