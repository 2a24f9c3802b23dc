#include "rstsim/workloads.hpp"

#include <array>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rstsim/machine.hpp"

namespace rst {

namespace {

constexpr std::array<std::pair<WorkloadTag, std::string_view>, 6> kTagNames{{
    {WorkloadTag::LoopHeavy, "loop-heavy"},
    {WorkloadTag::Loopless, "loopless"},
    {WorkloadTag::BranchHeavy, "branch-heavy"},
    {WorkloadTag::MemoryHeavy, "memory-heavy"},
    {WorkloadTag::Redundant, "redundant"},
    {WorkloadTag::Varying, "varying"},
}};

// Raw modulo keeps the sequence identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
};

// Runs the reference interpreter, checks the expected registers, and fills
// in every register the program touched when no closed form was given.
Workload finish(std::string name, const std::string& source, std::set<WorkloadTag> tags,
                std::uint64_t op_bound,
                std::optional<std::map<RegIndex, Word>> expected = std::nullopt) {
  Workload w;
  w.name = std::move(name);
  w.program = parse_program(source);
  w.tags = std::move(tags);
  w.op_bound = op_bound;
  auto ref = run_reference(w.program, op_bound);
  if (!ref.halted)
    throw std::logic_error("workload " + w.name + " does not halt within its bound");
  if (expected) {
    for (auto [r, v] : *expected)
      if (ref.state.reg(r) != v)
        throw std::logic_error("workload " + w.name + " ends with r" + std::to_string(r) +
                               " = " + std::to_string(ref.state.reg(r)) + ", expected " +
                               std::to_string(v));
  } else {
    expected.emplace();
    for (RegIndex r = 1; r < kNumRegs; ++r)
      if (ref.state.reg(r) != 0) (*expected)[r] = ref.state.reg(r);
  }
  w.expected_final = std::move(expected);
  return w;
}

void check_size(unsigned size) {
  if (size < kMinGenerateSize || size > kMaxGenerateSize)
    throw std::invalid_argument("workload size " + std::to_string(size) + " outside [" +
                                std::to_string(kMinGenerateSize) + ", " +
                                std::to_string(kMaxGenerateSize) + "]");
}

std::string reg(unsigned r) { return "r" + std::to_string(r); }

// Straight-line random code. Branches only skip forward.
std::string straightline_source(unsigned count, Rng& rng) {
  std::ostringstream os;
  for (unsigned r = 1; r <= 8; ++r)
    os << "  addi " << reg(r) << ", r0, " << rng.below(16) << '\n';
  static constexpr std::array<std::string_view, 6> kAlu{"add", "sub", "xor", "and", "or", "slt"};
  std::map<unsigned, std::vector<std::string>> labels_at;
  unsigned label_count = 0;
  for (unsigned i = 0; i < count; ++i) {
    for (const auto& l : labels_at[i]) os << l << ":\n";
    labels_at.erase(i);
    auto pick = [&] { return 1 + static_cast<unsigned>(rng.below(8)); };
    switch (rng.below(10)) {
      case 0:
      case 1:
      case 2:
      case 3:
        os << "  " << kAlu[rng.below(kAlu.size())] << ' ' << reg(pick()) << ", "
           << reg(pick()) << ", " << reg(pick()) << '\n';
        break;
      case 4:
        os << "  addi " << reg(pick()) << ", " << reg(pick()) << ", "
           << static_cast<int>(rng.below(32)) - 16 << '\n';
        break;
      case 5:
        os << "  mul " << reg(pick()) << ", " << reg(pick()) << ", " << reg(pick()) << '\n';
        break;
      case 6:
        os << "  lw " << reg(pick()) << ", " << 0x4000 + 4 * rng.below(64) << "(r0)\n";
        break;
      case 7:
        os << "  sw " << reg(pick()) << ", " << 0x4000 + 4 * rng.below(64) << "(r0)\n";
        break;
      default: {
        std::string label = "fwd" + std::to_string(label_count++);
        unsigned skip = 1 + static_cast<unsigned>(rng.below(3));
        labels_at[std::min(count, i + 1 + skip)].push_back(label);
        os << "  " << (rng.below(2) ? "beq " : "bne ") << reg(pick()) << ", " << reg(pick())
           << ", " << label << '\n';
        break;
      }
    }
  }
  for (const auto& [at, names] : labels_at)
    for (const auto& l : names) os << l << ":\n";
  os << "  halt\n";
  return os.str();
}

std::string loop_heavy_source(unsigned iterations, Rng& rng) {
  std::ostringstream os;
  os << "  addi r1, r0, " << iterations << '\n';
  for (unsigned r = 10; r <= 13; ++r)
    os << "  addi " << reg(r) << ", r0, " << 1 + rng.below(50) << '\n';
  os << "loop:\n";
  static constexpr std::array<std::string_view, 6> kAlu{"add", "sub", "xor", "and", "or", "slt"};
  unsigned body = 4 + static_cast<unsigned>(rng.below(5));
  for (unsigned i = 0; i < body; ++i) {
    // Sources mostly loop invariant; the accumulator r20 changes every trip.
    auto src = [&] {
      return rng.below(4) == 0 ? 20u : 10 + static_cast<unsigned>(rng.below(4));
    };
    os << "  " << kAlu[rng.below(kAlu.size())] << ' ' << reg(2 + i % 6) << ", " << reg(src())
       << ", " << reg(src()) << '\n';
  }
  os << "  add r20, r20, r2\n"
        "  addi r1, r1, -1\n"
        "  bne r1, r0, loop\n"
        "  halt\n";
  return os.str();
}

}  // namespace

std::string_view to_string(WorkloadTag t) {
  for (auto [tag, name] : kTagNames)
    if (tag == t) return name;
  return "?";
}

std::optional<WorkloadTag> tag_from_string(std::string_view s) {
  for (auto [tag, name] : kTagNames)
    if (name == s) return tag;
  return std::nullopt;
}

const std::vector<WorkloadTag>& all_workload_tags() {
  static const std::vector<WorkloadTag> tags = [] {
    std::vector<WorkloadTag> v;
    for (auto [tag, name] : kTagNames) v.push_back(tag);
    return v;
  }();
  return tags;
}

Workload redundant_loop(unsigned iterations) {
  check_size(iterations);
  std::ostringstream os;
  os << "  addi r1, r0, " << iterations << "\n"
        "  addi r10, r0, 3\n"
        "  addi r11, r0, 5\n"
        "loop:\n"
        "  add r2, r10, r11\n"
        "  sub r3, r11, r10\n"
        "  xor r4, r10, r11\n"
        "  and r5, r10, r11\n"
        "  or r6, r10, r11\n"
        "  slt r7, r10, r11\n"
        "  add r9, r9, r2\n"
        "  addi r1, r1, -1\n"
        "  bne r1, r0, loop\n"
        "  halt\n";
  std::map<RegIndex, Word> expected{{1, 0}, {9, 8u * iterations}, {2, 8}, {3, 2}, {7, 1}};
  return finish("redundant_loop", os.str(), {WorkloadTag::LoopHeavy, WorkloadTag::Redundant},
                9ull * iterations + 8, expected);
}

Workload varying_loop(unsigned iterations) {
  check_size(iterations);
  constexpr Addr kBase = 0x1000;
  std::ostringstream os;
  os << "  addi r1, r0, " << iterations << "\n"
     << "  addi r8, r0, " << kBase << "\n"
     << "loop:\n"
        "  lw r5, 0(r8)\n"
        "  add r2, r5, r5\n"
        "  add r9, r9, r2\n"
        "  addi r8, r8, 4\n"
        "  addi r1, r1, -1\n"
        "  bne r1, r0, loop\n"
        "  halt\n";
  Word sum = 0;
  for (unsigned i = 0; i < iterations; ++i) {
    Word v = (i / 4) * 7 + 1;
    sum += 2 * v;
    os << ".word " << kBase + 4 * i << ' ' << v << '\n';
  }
  return finish("varying_loop", os.str(), {WorkloadTag::LoopHeavy, WorkloadTag::Varying},
                7ull * iterations + 8, std::map<RegIndex, Word>{{1, 0}, {9, sum}});
}

Workload loopless_straightline(unsigned instructions, std::uint64_t seed) {
  check_size(instructions);
  Rng rng(seed);
  return finish("loopless_straightline", straightline_source(instructions, rng),
                {WorkloadTag::Loopless}, 2ull * instructions + 32);
}

Workload branchy(unsigned iterations, std::uint64_t seed) {
  check_size(iterations);
  constexpr Addr kBase = 0x2000;
  Rng rng(seed);
  std::ostringstream os;
  os << "  addi r1, r0, " << iterations << "\n"
     << "  addi r8, r0, " << kBase << "\n"
     << "  addi r12, r0, 1\n"
        "  addi r13, r0, 50\n"
        "  addi r14, r0, 25\n"
        "loop:\n"
        "  lw r3, 0(r8)\n"
        "  and r4, r3, r12\n"
        "  beq r4, r0, even\n"
        "  addi r9, r9, 1\n"
        "even:\n"
        "  slt r5, r3, r13\n"
        "  bne r5, r0, low\n"
        "  add r10, r10, r3\n"
        "  jmp next\n"
        "low:\n"
        "  sub r11, r11, r3\n"
        "next:\n"
        "  slt r6, r3, r14\n"
        "  beq r6, r0, skip\n"
        "  xor r15, r15, r3\n"
        "skip:\n"
        "  addi r8, r8, 4\n"
        "  addi r1, r1, -1\n"
        "  bne r1, r0, loop\n"
        "  halt\n";
  Word odd = 0, high = 0, low = 0, low_xor = 0;
  for (unsigned i = 0; i < iterations; ++i) {
    Word v = static_cast<Word>(rng.below(100));
    os << ".word " << kBase + 4 * i << ' ' << v << '\n';
    if (v & 1) ++odd;
    if (v < 50)
      low -= v;
    else
      high += v;
    if (v < 25) low_xor ^= v;
  }
  return finish("branchy", os.str(), {WorkloadTag::LoopHeavy, WorkloadTag::BranchHeavy},
                20ull * iterations + 16,
                std::map<RegIndex, Word>{{9, odd}, {10, high}, {11, low}, {15, low_xor}});
}

Workload pointer_chase(unsigned steps, std::uint64_t seed) {
  check_size(steps);
  constexpr unsigned kNodes = 2048;
  constexpr Addr kBase = 0x10000;
  constexpr Addr kStride = 4096 + 64;
  Rng rng(seed);
  std::vector<unsigned> order(kNodes);
  std::iota(order.begin(), order.end(), 0u);
  for (unsigned i = kNodes - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  auto addr = [&](unsigned node) { return kBase + node * kStride; };

  std::ostringstream os;
  os << "  addi r1, r0, " << steps << "\n"
     << "  addi r8, r0, " << addr(order[0]) << "\n"
     << "loop:\n"
        "  lw r8, 0(r8)\n"
        "  addi r9, r9, 1\n"
        "  addi r1, r1, -1\n"
        "  bne r1, r0, loop\n"
        "  halt\n";
  for (unsigned i = 0; i < kNodes; ++i)
    os << ".word " << addr(order[i]) << ' ' << addr(order[(i + 1) % kNodes]) << '\n';
  Word last = addr(order[steps % kNodes]);
  return finish("pointer_chase", os.str(), {WorkloadTag::LoopHeavy, WorkloadTag::MemoryHeavy},
                5ull * steps + 8, std::map<RegIndex, Word>{{1, 0}, {8, last}, {9, steps}});
}

Workload mixed(unsigned iterations) {
  check_size(iterations);
  constexpr Addr kBase = 0x3000;
  std::ostringstream os;
  os << "  syscall\n"
     << "  addi r1, r0, " << iterations << "\n"
     << "  addi r8, r0, " << kBase << "\n"
     << "  addi r12, r0, 7\n"
        "  addi r13, r0, 3\n"
        "  addi r21, r0, 3\n"
        "  addi r22, r0, 252\n"
        "  addi r23, r0, 1065353216\n"  // 1.0f
        "loop:\n"
        "  add r6, r8, r7\n"
        "  lw r3, 0(r6)\n"
        "  lw r4, 4(r6)\n"
        "  add r5, r3, r4\n"
        "  xor r5, r5, r12\n"
        "  sw r5, 0(r6)\n"
        "  slt r10, r3, r4\n"
        "  beq r10, r0, ge\n"
        "  add r11, r11, r3\n"
        "ge:\n"
        "  mul r14, r12, r13\n"
        "  or r15, r12, r13\n"
        "  sub r16, r12, r13\n"
        "  lw r17, 8(r6)\n"
        "  add r18, r17, r16\n"
        "  sw r18, 8(r6)\n"
        "  and r19, r1, r21\n"
        "  bne r19, r0, nof\n"
        "  fadd r20, r20, r23\n"
        "nof:\n"
        "  addi r7, r7, 4\n"
        "  and r7, r7, r22\n"
        "  add r24, r24, r5\n"
        "  slt r25, r5, r12\n"
        "  bne r25, r0, skip\n"
        "  sub r26, r26, r12\n"
        "skip:\n"
        "  addi r1, r1, -1\n"
        "  bne r1, r0, loop\n"
        "  halt\n";
  for (unsigned i = 0; i < 66; ++i) os << ".word " << kBase + 4 * i << ' ' << (i * 37) % 101 << '\n';
  return finish("mixed", os.str(), {WorkloadTag::LoopHeavy, WorkloadTag::BranchHeavy},
                40ull * iterations + 16);
}

std::vector<Workload> builtin_workloads() {
  std::vector<Workload> suite;
  suite.push_back(redundant_loop());
  suite.push_back(varying_loop());
  suite.push_back(loopless_straightline());
  suite.push_back(branchy());
  suite.push_back(pointer_chase());
  suite.push_back(mixed());
  return suite;
}

std::optional<Workload> find_builtin(std::string_view name) {
  if (name == "redundant_loop") return redundant_loop();
  if (name == "varying_loop") return varying_loop();
  if (name == "loopless_straightline") return loopless_straightline();
  if (name == "branchy") return branchy();
  if (name == "pointer_chase") return pointer_chase();
  if (name == "mixed") return mixed();
  return std::nullopt;
}

Workload generate(WorkloadTag kind, unsigned size, std::uint64_t seed) {
  check_size(size);
  Workload w;
  switch (kind) {
    case WorkloadTag::LoopHeavy: {
      Rng rng(seed);
      w = finish("", loop_heavy_source(size, rng), {WorkloadTag::LoopHeavy},
                 12ull * size + 16);
      break;
    }
    case WorkloadTag::Loopless:
      w = loopless_straightline(size, seed);
      break;
    case WorkloadTag::BranchHeavy:
      w = branchy(size, seed);
      break;
    case WorkloadTag::MemoryHeavy:
      w = pointer_chase(size, seed);
      break;
    case WorkloadTag::Redundant:
      w = redundant_loop(size);
      break;
    case WorkloadTag::Varying:
      w = varying_loop(size);
      break;
  }
  w.name = std::string(to_string(kind)) + "-" + std::to_string(size) + "-" + std::to_string(seed);
  w.tags.insert(kind);
  return w;
}

Workload generate(std::string_view kind, unsigned size, std::uint64_t seed) {
  auto tag = tag_from_string(kind);
  if (!tag) throw std::invalid_argument("unknown workload kind '" + std::string(kind) + "'");
  return generate(*tag, size, seed);
}

}  // namespace rst
