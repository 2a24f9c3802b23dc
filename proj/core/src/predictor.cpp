#include "rstsim/predictor.hpp"

#include <algorithm>
#include <stdexcept>

namespace rst {

BranchPredictor::BranchPredictor(PredictorConfig config) : config_(config) {
  if (config_.pht_entries == 0 || config_.btb_assoc == 0 ||
      config_.btb_entries % config_.btb_assoc != 0 || config_.btb_entries == 0)
    throw std::invalid_argument("invalid predictor geometry");
  if (config_.history_bits > 31) throw std::invalid_argument("history too long");
  history_mask_ = (1u << config_.history_bits) - 1;
  counters_.assign(config_.pht_entries, 1);
  btb_.resize(config_.btb_entries / config_.btb_assoc);
}

std::uint32_t BranchPredictor::index(Addr pc) const {
  return (history_ ^ (pc / 4)) % config_.pht_entries;
}

void BranchPredictor::train(Addr pc, bool taken) {
  auto& c = counters_[index(pc)];
  if (taken && c < 3) ++c;
  if (!taken && c > 0) --c;
  history_ = ((history_ << 1) | (taken ? 1u : 0u)) & history_mask_;
}

std::optional<Addr> BranchPredictor::btb_lookup(Addr pc) const {
  const auto& ways = btb_[(pc / 4) % btb_.size()];
  for (const auto& w : ways)
    if (w.pc == pc) return w.target;
  return std::nullopt;
}

void BranchPredictor::btb_update(Addr pc, Addr target) {
  auto& ways = btb_[(pc / 4) % btb_.size()];
  auto it = std::find_if(ways.begin(), ways.end(), [&](const BtbWay& w) { return w.pc == pc; });
  if (it != ways.end()) ways.erase(it);
  ways.insert(ways.begin(), {pc, target});
  if (ways.size() > config_.btb_assoc) ways.pop_back();
}

}  // namespace rst
