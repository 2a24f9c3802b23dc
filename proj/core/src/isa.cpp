#include "rstsim/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>

namespace rst {

namespace {

constexpr std::array<std::string_view, kNumOpcodes> kOpcodeNames = {
    "add", "sub", "addi", "and", "or",  "xor",  "slt",     "mul",  "beq",
    "bne", "blt", "jmp",  "lw",  "sw",  "fadd", "syscall", "halt",
};

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "AddSub",   "OtherIntAlu", "Branch",  "AddrCalc",
    "MemAccess", "Float",      "Syscall", "Halt",
};

constexpr std::array<std::string_view, 7> kSubsetLabels = {
    "O", "B", "A", "M", "NotB", "NotA", "NotM",
};

constexpr std::uint8_t bit(InstrClass c) {
  return static_cast<std::uint8_t>(1u << index_of(c));
}

constexpr std::uint8_t kDomainO = bit(InstrClass::AddSub) |
                                  bit(InstrClass::OtherIntAlu) |
                                  bit(InstrClass::Branch) |
                                  bit(InstrClass::AddrCalc);

enum class Format { R3, RI, Branch, Jump, Mem, None };

Format format_of(Opcode op) {
  switch (op) {
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Slt:
    case Opcode::Mul:
    case Opcode::Fadd:
      return Format::R3;
    case Opcode::Addi:
      return Format::RI;
    case Opcode::Beq:
    case Opcode::Bne:
    case Opcode::Blt:
      return Format::Branch;
    case Opcode::Jmp:
      return Format::Jump;
    case Opcode::Lw:
    case Opcode::Sw:
      return Format::Mem;
    case Opcode::Syscall:
    case Opcode::Halt:
      return Format::None;
  }
  return Format::None;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!std::isalpha(head) && head != '_' && head != '.') return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c == '.';
  });
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

std::optional<std::int64_t> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  bool negative = false;
  if (s.front() == '-' || s.front() == '+') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if (value > (std::uint64_t{1} << 33)) return std::nullopt;
  auto v = static_cast<std::int64_t>(value);
  return negative ? -v : v;
}

struct PendingLine {
  std::size_t line;
  Opcode op;
  std::vector<std::string_view> operands;
};

class Assembler {
 public:
  Program run(std::string_view text) {
    collect(text);
    Program program;
    program.labels = labels_;
    program.data = data_;
    program.instructions.reserve(pending_.size());
    for (std::size_t i = 0; i < pending_.size(); ++i)
      program.instructions.push_back(
          encode(pending_[i], static_cast<Addr>(i * 4)));
    return program;
  }

 private:
  void collect(std::string_view text) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      auto line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
      collect_line(++line_no, line);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
  }

  void collect_line(std::size_t line_no, std::string_view line) {
    if (auto semi = line.find(';'); semi != std::string_view::npos)
      line = line.substr(0, semi);
    line = trim(line);

    // Any number of `label:` prefixes.
    while (true) {
      auto colon = line.find(':');
      if (colon == std::string_view::npos) break;
      auto name = trim(line.substr(0, colon));
      if (!is_identifier(name))
        throw ParseError(line_no, "malformed label '" + std::string(name) + "'");
      auto [it, inserted] = labels_.emplace(
          std::string(name), static_cast<Addr>(pending_.size() * 4));
      if (!inserted)
        throw ParseError(line_no, "duplicate label '" + std::string(name) + "'");
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) return;

    auto space = line.find_first_of(" \t");
    auto mnemonic = line.substr(0, space);
    auto rest = space == std::string_view::npos ? std::string_view{}
                                                : trim(line.substr(space));
    if (mnemonic == ".word") {
      directive_word(line_no, rest);
      return;
    }
    std::string lower(mnemonic);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    auto op = opcode_from_string(lower);
    if (!op)
      throw ParseError(line_no, "unknown mnemonic '" + std::string(mnemonic) + "'");
    pending_.push_back({line_no, *op, split_operands(rest)});
  }

  void directive_word(std::size_t line_no, std::string_view rest) {
    std::istringstream in{std::string(rest)};
    std::string addr_tok, value_tok, extra;
    if (!(in >> addr_tok >> value_tok) || (in >> extra))
      throw ParseError(line_no, ".word expects: .word ADDRESS VALUE");
    auto addr = parse_number(addr_tok);
    auto value = parse_number(value_tok);
    if (!addr || !value)
      throw ParseError(line_no, "malformed number in .word");
    if (*addr < 0 || *addr >= static_cast<std::int64_t>(kMemoryLimit))
      throw ParseError(line_no, "data address out of range");
    if (*addr % 4 != 0)
      throw ParseError(line_no, "misaligned data address");
    if (*value < std::numeric_limits<std::int32_t>::min() ||
        *value > std::numeric_limits<std::uint32_t>::max())
      throw ParseError(line_no, ".word value does not fit in 32 bits");
    data_[static_cast<Addr>(*addr)] = static_cast<Word>(*value);
  }

  static RegIndex reg(const PendingLine& p, std::string_view tok) {
    tok = trim(tok);
    if (tok.size() >= 2 && (tok[0] == 'r' || tok[0] == 'R' || tok[0] == 'f' ||
                            tok[0] == 'F')) {
      unsigned idx = 0;
      auto [ptr, ec] =
          std::from_chars(tok.data() + 1, tok.data() + tok.size(), idx);
      if (ec == std::errc{} && ptr == tok.data() + tok.size() && idx < kNumRegs)
        return static_cast<RegIndex>(idx);
    }
    throw ParseError(p.line, "expected register, got '" + std::string(tok) + "'");
  }

  static std::int32_t imm32(const PendingLine& p, std::string_view tok) {
    auto v = parse_number(tok);
    if (!v)
      throw ParseError(p.line, "expected immediate, got '" + std::string(tok) + "'");
    if (*v < std::numeric_limits<std::int32_t>::min() ||
        *v > std::numeric_limits<std::uint32_t>::max())
      throw ParseError(p.line, "immediate does not fit in 32 bits");
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(*v));
  }

  std::int32_t branch_offset(const PendingLine& p, std::string_view tok,
                             Addr pc, std::size_t code_size) const {
    tok = trim(tok);
    std::int64_t offset = 0;
    if (auto num = parse_number(tok)) {
      offset = *num;
    } else if (is_identifier(tok)) {
      auto it = labels_.find(tok);
      if (it == labels_.end())
        throw ParseError(p.line, "undefined label '" + std::string(tok) + "'");
      offset = static_cast<std::int64_t>(it->second) -
               static_cast<std::int64_t>(pc + 4);
    } else {
      throw ParseError(p.line, "expected branch target, got '" + std::string(tok) + "'");
    }
    if (offset % 4 != 0) throw ParseError(p.line, "misaligned branch offset");
    std::int64_t target = static_cast<std::int64_t>(pc) + 4 + offset;
    if (target < 0 || target >= static_cast<std::int64_t>(code_size * 4))
      throw ParseError(p.line, "branch target outside program");
    return static_cast<std::int32_t>(offset);
  }

  // `imm(rs)`
  static std::pair<std::int32_t, RegIndex> mem_operand(const PendingLine& p,
                                                      std::string_view tok) {
    tok = trim(tok);
    auto open = tok.find('(');
    auto close = tok.rfind(')');
    if (open == std::string_view::npos || close != tok.size() - 1 || close < open)
      throw ParseError(p.line, "expected memory operand imm(reg), got '" +
                                   std::string(tok) + "'");
    auto disp = trim(tok.substr(0, open));
    std::int32_t imm = disp.empty() ? 0 : imm32(p, disp);
    return {imm, reg(p, tok.substr(open + 1, close - open - 1))};
  }

  Instruction encode(const PendingLine& p, Addr pc) const {
    auto expect = [&](std::size_t n) {
      if (p.operands.size() != n)
        throw ParseError(p.line, std::string(to_string(p.op)) + " expects " +
                                     std::to_string(n) + " operand(s)");
    };
    Instruction in;
    in.pc = pc;
    in.op = p.op;
    const auto code_size = pending_.size();
    switch (format_of(p.op)) {
      case Format::R3:
        expect(3);
        in.dest = reg(p, p.operands[0]);
        in.src1 = reg(p, p.operands[1]);
        in.src2 = reg(p, p.operands[2]);
        break;
      case Format::RI:
        expect(3);
        in.dest = reg(p, p.operands[0]);
        in.src1 = reg(p, p.operands[1]);
        in.imm = imm32(p, p.operands[2]);
        break;
      case Format::Branch:
        expect(3);
        in.src1 = reg(p, p.operands[0]);
        in.src2 = reg(p, p.operands[1]);
        in.imm = branch_offset(p, p.operands[2], pc, code_size);
        break;
      case Format::Jump:
        expect(1);
        in.imm = branch_offset(p, p.operands[0], pc, code_size);
        break;
      case Format::Mem: {
        expect(2);
        auto [imm, base] = mem_operand(p, p.operands[1]);
        in.imm = imm;
        in.src1 = base;
        if (p.op == Opcode::Lw)
          in.dest = reg(p, p.operands[0]);
        else
          in.src2 = reg(p, p.operands[0]);
        break;
      }
      case Format::None:
        expect(0);
        break;
    }
    return in;
  }

  std::map<std::string, Addr, std::less<>> labels_;
  std::map<Addr, Word> data_;
  std::vector<PendingLine> pending_;
};

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::string reg_name(std::optional<RegIndex> r) {
  return "r" + std::to_string(r.value_or(0));
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

std::string_view to_string(Opcode op) {
  return kOpcodeNames[static_cast<std::size_t>(op)];
}

std::string_view to_string(InstrClass cls) { return kClassNames[index_of(cls)]; }

std::optional<Opcode> opcode_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kOpcodeNames.size(); ++i)
    if (kOpcodeNames[i] == name) return static_cast<Opcode>(i);
  return std::nullopt;
}

std::optional<InstrClass> class_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i)
    if (kClassNames[i] == name) return static_cast<InstrClass>(i);
  return std::nullopt;
}

DomainSubset::DomainSubset(SubsetName name) : name_(name) {
  switch (name) {
    case SubsetName::O:
      mask_ = kDomainO;
      break;
    case SubsetName::B:
      mask_ = bit(InstrClass::Branch);
      break;
    case SubsetName::A:
      mask_ = bit(InstrClass::AddSub);
      break;
    case SubsetName::M:
      mask_ = bit(InstrClass::AddrCalc);
      break;
    case SubsetName::NotB:
      mask_ = kDomainO & ~bit(InstrClass::Branch);
      break;
    case SubsetName::NotA:
      mask_ = kDomainO & ~bit(InstrClass::AddSub);
      break;
    case SubsetName::NotM:
      mask_ = kDomainO & ~bit(InstrClass::AddrCalc);
      break;
  }
}

std::optional<DomainSubset> DomainSubset::from_string(std::string_view label) {
  for (std::size_t i = 0; i < kSubsetLabels.size(); ++i)
    if (kSubsetLabels[i] == label)
      return DomainSubset(static_cast<SubsetName>(i));
  return std::nullopt;
}

std::string_view DomainSubset::label() const {
  return kSubsetLabels[static_cast<std::size_t>(name_)];
}

std::vector<InstrClass> DomainSubset::classes() const {
  std::vector<InstrClass> out;
  for (auto c : kAllClasses)
    if (contains(c)) out.push_back(c);
  return out;
}

Program parse_program(std::string_view text) { return Assembler{}.run(text); }

std::string format_instruction(const Instruction& in, const Program* program) {
  std::string out(to_string(in.op));
  auto target_text = [&] {
    if (program) {
      for (const auto& [name, addr] : program->labels)
        if (addr == in.target()) return name;
    }
    return std::to_string(in.imm.value_or(0));
  };
  switch (format_of(in.op)) {
    case Format::R3:
      out += " " + reg_name(in.dest) + ", " + reg_name(in.src1) + ", " +
             reg_name(in.src2);
      break;
    case Format::RI:
      out += " " + reg_name(in.dest) + ", " + reg_name(in.src1) + ", " +
             std::to_string(in.imm.value_or(0));
      break;
    case Format::Branch:
      out += " " + reg_name(in.src1) + ", " + reg_name(in.src2) + ", " +
             target_text();
      break;
    case Format::Jump:
      out += " " + target_text();
      break;
    case Format::Mem:
      out += " " + reg_name(in.op == Opcode::Lw ? in.dest : in.src2) + ", " +
             std::to_string(in.imm.value_or(0)) + "(" + reg_name(in.src1) + ")";
      break;
    case Format::None:
      break;
  }
  return out;
}

std::string unparse(const Program& program) {
  std::multimap<Addr, std::string_view> labels_at;
  for (const auto& [name, addr] : program.labels) labels_at.emplace(addr, name);

  std::ostringstream os;
  auto emit_labels = [&](Addr addr) {
    auto [lo, hi] = labels_at.equal_range(addr);
    for (auto it = lo; it != hi; ++it) os << it->second << ":\n";
  };
  for (const auto& in : program.instructions) {
    emit_labels(in.pc);
    os << "    " << format_instruction(in, &program) << "\n";
  }
  // Labels at or past the end of code.
  for (auto it = labels_at.lower_bound(program.code_end()); it != labels_at.end();
       ++it)
    os << it->second << ":\n";
  for (const auto& [addr, value] : program.data)
    os << ".word " << hex(addr) << " " << hex(value) << "\n";
  return os.str();
}

ClassList classify(Opcode op) {
  switch (op) {
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Addi:
      return ClassList(InstrClass::AddSub);
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Slt:
    case Opcode::Mul:
      return ClassList(InstrClass::OtherIntAlu);
    case Opcode::Beq:
    case Opcode::Bne:
    case Opcode::Blt:
    case Opcode::Jmp:
      return ClassList(InstrClass::Branch);
    case Opcode::Lw:
    case Opcode::Sw:
      return ClassList(InstrClass::AddrCalc, InstrClass::MemAccess);
    case Opcode::Fadd:
      return ClassList(InstrClass::Float);
    case Opcode::Syscall:
      return ClassList(InstrClass::Syscall);
    case Opcode::Halt:
      return ClassList(InstrClass::Halt);
  }
  return ClassList(InstrClass::Halt);
}

ClassList classify(const Instruction& instr) { return classify(instr.op); }

bool in_domain(InstrClass cls, const DomainSubset& subset) {
  return subset.contains(cls);
}

bool is_backward_branch(const Instruction& instr) {
  return instr.is_branch() && instr.target() < instr.pc;
}

}  // namespace rst
