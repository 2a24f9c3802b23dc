#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rstsim/isa.hpp"

namespace rst {

struct PredictorConfig {
  unsigned history_bits = 13;
  std::uint32_t pht_entries = 8192;
  std::uint32_t btb_entries = 4096;
  std::uint32_t btb_assoc = 2;
  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

// Two-level predictor: global history XOR pc/4 indexes a table of 2-bit
// saturating counters (initialised weakly not-taken), plus a set-associative
// BTB for taken targets.
class BranchPredictor {
 public:
  explicit BranchPredictor(PredictorConfig config = {});

  std::uint32_t index(Addr pc) const;
  bool predict(Addr pc) const { return counters_[index(pc)] >= 2; }
  // Saturates the indexed counter toward the outcome, then shifts the
  // outcome into the history register.
  void train(Addr pc, bool taken);

  std::optional<Addr> btb_lookup(Addr pc) const;
  void btb_update(Addr pc, Addr target);

  std::uint8_t counter(std::uint32_t idx) const { return counters_.at(idx); }
  std::uint32_t history() const { return history_; }
  const PredictorConfig& config() const { return config_; }

 private:
  struct BtbWay {
    Addr pc;
    Addr target;
  };

  PredictorConfig config_;
  std::uint32_t history_ = 0;
  std::uint32_t history_mask_ = 0;
  std::vector<std::uint8_t> counters_;
  std::vector<std::vector<BtbWay>> btb_;  // MRU first
};

}  // namespace rst
