#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rst {

using Addr = std::uint32_t;
using Word = std::uint32_t;
using RegIndex = std::uint8_t;

inline constexpr unsigned kNumRegs = 32;

// Data memory spans [0, kMemoryLimit), word aligned.
inline constexpr Addr kMemoryLimit = Addr{1} << 24;

// Pseudo register carrying the effective address from an AddrCalc micro-op
// to its MemAccess micro-op. Never part of the architectural register file.
inline constexpr RegIndex kAddrLatch = 32;

enum class Opcode : std::uint8_t {
  Add,
  Sub,
  Addi,
  And,
  Or,
  Xor,
  Slt,
  Mul,
  Beq,
  Bne,
  Blt,
  Jmp,
  Lw,
  Sw,
  Fadd,
  Syscall,
  Halt,
};
inline constexpr std::size_t kNumOpcodes = 17;

enum class InstrClass : std::uint8_t {
  AddSub,
  OtherIntAlu,
  Branch,
  AddrCalc,
  MemAccess,
  Float,
  Syscall,
  Halt,
};
inline constexpr std::size_t kNumClasses = 8;

inline constexpr std::array<InstrClass, kNumClasses> kAllClasses = {
    InstrClass::AddSub,    InstrClass::OtherIntAlu, InstrClass::Branch,
    InstrClass::AddrCalc,  InstrClass::MemAccess,   InstrClass::Float,
    InstrClass::Syscall,   InstrClass::Halt,
};

std::string_view to_string(Opcode op);
std::string_view to_string(InstrClass cls);
std::optional<Opcode> opcode_from_string(std::string_view name);
std::optional<InstrClass> class_from_string(std::string_view name);

constexpr std::size_t index_of(InstrClass cls) {
  return static_cast<std::size_t>(cls);
}

// Micro-operation classes of one instruction; loads and stores carry two.
class ClassList {
 public:
  constexpr ClassList() = default;
  constexpr explicit ClassList(InstrClass only) : items_{only, only}, size_(1) {}
  constexpr ClassList(InstrClass first, InstrClass second)
      : items_{first, second}, size_(2) {}

  constexpr std::size_t size() const { return size_; }
  constexpr InstrClass operator[](std::size_t i) const { return items_[i]; }
  constexpr InstrClass front() const { return items_[0]; }
  constexpr const InstrClass* begin() const { return items_.data(); }
  constexpr const InstrClass* end() const { return items_.data() + size_; }

  friend constexpr bool operator==(const ClassList& a, const ClassList& b) {
    if (a.size_ != b.size_) return false;
    for (std::size_t i = 0; i < a.size_; ++i)
      if (a.items_[i] != b.items_[i]) return false;
    return true;
  }

 private:
  std::array<InstrClass, 2> items_{};
  std::uint8_t size_ = 0;
};

enum class SubsetName : std::uint8_t { O, B, A, M, NotB, NotA, NotM };

inline constexpr std::array<SubsetName, 7> kAllSubsets = {
    SubsetName::O,    SubsetName::B,    SubsetName::A,   SubsetName::M,
    SubsetName::NotB, SubsetName::NotA, SubsetName::NotM,
};

// A reuse domain: the set of instruction classes eligible for memoization.
class DomainSubset {
 public:
  DomainSubset() : DomainSubset(SubsetName::O) {}
  explicit DomainSubset(SubsetName name);

  static std::optional<DomainSubset> from_string(std::string_view label);

  SubsetName name() const { return name_; }
  std::string_view label() const;
  bool contains(InstrClass cls) const {
    return (mask_ >> index_of(cls)) & 1u;
  }
  std::vector<InstrClass> classes() const;

  friend bool operator==(const DomainSubset&, const DomainSubset&) = default;

 private:
  SubsetName name_;
  std::uint8_t mask_ = 0;
};

struct Instruction {
  Addr pc = 0;
  Opcode op = Opcode::Halt;
  std::optional<RegIndex> dest;
  std::optional<RegIndex> src1;
  std::optional<RegIndex> src2;
  std::optional<std::int32_t> imm;

  bool is_branch() const {
    return op == Opcode::Beq || op == Opcode::Bne || op == Opcode::Blt ||
           op == Opcode::Jmp;
  }
  bool is_memory() const { return op == Opcode::Lw || op == Opcode::Sw; }

  // Resolved branch target. Only meaningful when is_branch().
  Addr target() const {
    return pc + 4 + static_cast<Addr>(imm.value_or(0));
  }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Program {
  std::vector<Instruction> instructions;
  std::map<std::string, Addr, std::less<>> labels;
  Addr entry = 0;
  std::map<Addr, Word> data;

  // Address one past the last instruction.
  Addr code_end() const { return static_cast<Addr>(instructions.size() * 4); }

  const Instruction* at(Addr pc) const {
    if (pc % 4 != 0 || pc >= code_end()) return nullptr;
    return &instructions[pc / 4];
  }

  friend bool operator==(const Program&, const Program&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Parses the assembly dialect documented in README.md.
Program parse_program(std::string_view text);

// Debug printer. parse_program(unparse(p)) == p.
std::string unparse(const Program& program);
std::string format_instruction(const Instruction& instr,
                               const Program* program = nullptr);

ClassList classify(const Instruction& instr);
ClassList classify(Opcode op);

bool in_domain(InstrClass cls, const DomainSubset& subset);

bool is_backward_branch(const Instruction& instr);

}  // namespace rst
