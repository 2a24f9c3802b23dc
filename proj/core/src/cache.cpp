#include "rstsim/cache.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace rst {

void CacheGeometry::validate() const {
  if (assoc == 0 || line_bytes == 0 || size_bytes == 0)
    throw std::invalid_argument("cache geometry fields must be positive");
  if (!std::has_single_bit(line_bytes))
    throw std::invalid_argument("cache line size must be a power of two");
  if (size_bytes % (assoc * line_bytes) != 0)
    throw std::invalid_argument("cache size must be a multiple of assoc * line");
  if (hit_cycles == 0) throw std::invalid_argument("cache latency must be at least 1");
}

CacheLevel::CacheLevel(CacheGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  sets_.resize(geometry_.sets());
}

bool CacheLevel::access(Addr address) {
  ++counters_.accesses;
  const Addr line = address / geometry_.line_bytes;
  auto& ways = sets_[line % sets_.size()];
  auto it = std::find(ways.begin(), ways.end(), line);
  if (it != ways.end()) {
    std::rotate(ways.begin(), it, it + 1);
    return true;
  }
  ++counters_.misses;
  ways.insert(ways.begin(), line);
  if (ways.size() > geometry_.assoc) ways.pop_back();
  return false;
}

bool CacheLevel::contains(Addr address) const {
  const Addr line = address / geometry_.line_bytes;
  const auto& ways = sets_[line % sets_.size()];
  return std::find(ways.begin(), ways.end(), line) != ways.end();
}

CacheHierarchy::CacheHierarchy(const CacheConfig& config)
    : l1i_(config.l1),
      l1d_(config.l1),
      l2_(config.l2),
      l3_(config.l3),
      memory_cycles_(config.memory_cycles) {
  if (memory_cycles_ == 0) throw std::invalid_argument("memory latency must be at least 1");
}

std::uint32_t CacheHierarchy::cascade(CacheLevel& l1, Addr address) {
  std::uint32_t latency = l1.geometry().hit_cycles;
  if (l1.access(address)) return latency;
  latency += l2_.geometry().hit_cycles;
  if (l2_.access(address)) return latency;
  latency += l3_.geometry().hit_cycles;
  if (l3_.access(address)) return latency;
  return latency + memory_cycles_;
}

std::uint32_t CacheHierarchy::access_data(Addr address, AccessKind) {
  return cascade(l1d_, address);
}

std::uint32_t CacheHierarchy::access_instruction(Addr address) {
  return cascade(l1i_, address);
}

}  // namespace rst
