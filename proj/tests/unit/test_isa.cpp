#include <gtest/gtest.h>

#include "rstsim/isa.hpp"

using namespace rst;

TEST(Assembler, ParsesLabelsBranchesAndData) {
  Program p = parse_program(R"(
    ; comment line
    start: addi r1, r0, 3
    loop:  addi r1, r1, -1   ; trailing comment
           bne r1, r0, loop
           lw r2, 8(r1)
           sw f3, -4(r1)
           halt
    .word 0x100 42
  )");
  ASSERT_EQ(p.instructions.size(), 6u);
  EXPECT_EQ(p.labels.at("start"), 0u);
  EXPECT_EQ(p.labels.at("loop"), 4u);
  const Instruction& bne = p.instructions[2];
  EXPECT_EQ(bne.op, Opcode::Bne);
  EXPECT_EQ(bne.pc, 8u);
  EXPECT_EQ(*bne.imm, -8);  // relative to pc + 4
  EXPECT_EQ(bne.target(), 4u);
  EXPECT_TRUE(is_backward_branch(bne));
  EXPECT_EQ(*p.instructions[3].imm, 8);
  EXPECT_EQ(*p.instructions[4].src2, 3);  // f-prefix aliases the same file
  EXPECT_EQ(p.data.at(0x100), 42u);
}

TEST(Assembler, RejectsMalformedInput) {
  EXPECT_THROW(parse_program("frob r1, r2, r3"), ParseError);
  EXPECT_THROW(parse_program("add r1, r2"), ParseError);
  EXPECT_THROW(parse_program("add r1, r2, r32"), ParseError);
  EXPECT_THROW(parse_program("x: halt\nx: halt"), ParseError);
  EXPECT_THROW(parse_program("beq r1, r2, nowhere"), ParseError);
  EXPECT_THROW(parse_program(".word 0x102 1"), ParseError);
  EXPECT_THROW(parse_program("addi r1, r0, 0x1ffffffff"), ParseError);
  try {
    parse_program("halt\nhalt\nbogus");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Assembler, UnparseRoundTrips) {
  const char* src = R"(
      addi r1, r0, 10
    top:
      add r2, r2, r1
      mul r3, r2, r2
      fadd r4, r4, r3
      blt r0, r1, fwd
      syscall
    fwd:
      addi r1, r1, -1
      bne r1, r0, top
      jmp end
    end:
      halt
    .word 0x40 0xdeadbeef
  )";
  Program p = parse_program(src);
  EXPECT_EQ(parse_program(unparse(p)), p);
}

TEST(Classes, LoadsAndStoresSplitIntoTwoMicroOps) {
  EXPECT_EQ(classify(Opcode::Lw), ClassList(InstrClass::AddrCalc, InstrClass::MemAccess));
  EXPECT_EQ(classify(Opcode::Sw), ClassList(InstrClass::AddrCalc, InstrClass::MemAccess));
  EXPECT_EQ(classify(Opcode::Addi), ClassList(InstrClass::AddSub));
  EXPECT_EQ(classify(Opcode::Mul), ClassList(InstrClass::OtherIntAlu));
  EXPECT_EQ(classify(Opcode::Slt), ClassList(InstrClass::OtherIntAlu));
  EXPECT_EQ(classify(Opcode::Jmp), ClassList(InstrClass::Branch));
  EXPECT_EQ(classify(Opcode::Fadd), ClassList(InstrClass::Float));
}

TEST(Classes, EveryOpcodeHasAClassAndAName) {
  for (std::size_t i = 0; i < kNumOpcodes; ++i) {
    auto op = static_cast<Opcode>(i);
    EXPECT_GE(classify(op).size(), 1u);
    EXPECT_EQ(opcode_from_string(to_string(op)), op);
  }
  for (auto c : kAllClasses) EXPECT_EQ(class_from_string(to_string(c)), c);
}

TEST(Subsets, PresetMembership) {
  using C = InstrClass;
  DomainSubset o(SubsetName::O);
  for (auto c : {C::AddSub, C::OtherIntAlu, C::Branch, C::AddrCalc}) EXPECT_TRUE(o.contains(c));
  for (auto c : {C::MemAccess, C::Float, C::Syscall, C::Halt}) EXPECT_FALSE(o.contains(c));

  EXPECT_EQ(DomainSubset(SubsetName::B).classes(), std::vector<C>{C::Branch});
  EXPECT_EQ(DomainSubset(SubsetName::A).classes(), std::vector<C>{C::AddSub});
  EXPECT_EQ(DomainSubset(SubsetName::M).classes(), std::vector<C>{C::AddrCalc});
  DomainSubset not_b(SubsetName::NotB);
  EXPECT_FALSE(not_b.contains(C::Branch));
  EXPECT_TRUE(not_b.contains(C::AddSub));
  EXPECT_TRUE(not_b.contains(C::OtherIntAlu));
  EXPECT_TRUE(not_b.contains(C::AddrCalc));

  // Complements partition O.
  for (auto [x, notx] : {std::pair{SubsetName::B, SubsetName::NotB},
                         std::pair{SubsetName::A, SubsetName::NotA},
                         std::pair{SubsetName::M, SubsetName::NotM}}) {
    for (auto c : kAllClasses) {
      bool in_x = DomainSubset(x).contains(c);
      bool in_not = DomainSubset(notx).contains(c);
      EXPECT_FALSE(in_x && in_not);
      EXPECT_EQ(in_x || in_not, o.contains(c));
    }
  }
  for (auto s : kAllSubsets)
    EXPECT_EQ(DomainSubset::from_string(DomainSubset(s).label()), DomainSubset(s));
}

TEST(Branches, ForwardAndNotBranchesAreNotBackward) {
  Program p = parse_program("beq r0, r0, next\nnext: add r1, r1, r1\nhalt");
  EXPECT_FALSE(is_backward_branch(p.instructions[0]));
  EXPECT_FALSE(is_backward_branch(p.instructions[1]));
}
