#include <gtest/gtest.h>

#include "evofuzz/fitness.hpp"
#include "support/program_model.hpp"

namespace {

using namespace evofuzz;

const std::vector<std::string> kTorch = {"torch"};

TEST(FitnessScoreTest, ThreeCallChain) {
  auto s = fitness::score("a = torch.rand(3)\nb = torch.log(a)\nc = torch.matrix_exp(b)", kTorch);
  EXPECT_EQ(s, FitnessScore::make(2, 3, 0));
  EXPECT_EQ(s.total, 5);
}

TEST(FitnessScoreTest, EmptyProgram) { EXPECT_EQ(fitness::score("", kTorch), FitnessScore::make(0, 0, 0)); }

TEST(FitnessScoreTest, DuplicateCallIsPenalizedOnce) {
  auto s = fitness::score("x = torch.rand(3)\ny = torch.abs(x)\nz = torch.abs(x)", kTorch);
  EXPECT_EQ(s, FitnessScore::make(1, 2, 1));
  EXPECT_EQ(s.total, 2);
}

TEST(FitnessScoreTest, TotalIsAlwaysDPlusUMinusR) {
  testkit::ProgramGenerator gen(3);
  for (int i = 0; i < 50; ++i) {
    auto s = fitness::score(gen.generate(12).source, kTorch);
    EXPECT_EQ(s.total, s.depth + s.unique_calls - s.repeats);
  }
}

TEST(FitnessScoreTest, MatchesBruteForceOracle) {
  testkit::ProgramGenerator gen(77);
  int mismatches = 0;
  for (int i = 0; i < 50; ++i) {
    auto p = gen.generate(12);
    ASSERT_LE(p.statements, 12u);
    auto expected = FitnessScore::make(testkit::brute_force_longest_path(p.call_count, p.edges),
                                       testkit::census_unique(p), testkit::census_repeats(p));
    auto got = fitness::score(p.source, kTorch);
    if (got != expected) {
      ++mismatches;
      ADD_FAILURE() << p.source << "expected D=" << expected.depth << " U=" << expected.unique_calls
                    << " R=" << expected.repeats << ", got D=" << got.depth << " U=" << got.unique_calls
                    << " R=" << got.repeats;
    }
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(FitnessScoreTest, ChainingANewApiAddsTwo) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"a = torch.rand(3)\n", "b = torch.log(a)\n"},
      {"a = torch.rand(3)\nb = torch.log(a)\n", "c = torch.exp(b)\n"},
      {"x = torch.ones(2)\ny = torch.zeros(2)\nz = torch.add(x, y)\n", "w = torch.sigmoid(z)\n"},
  };
  for (const auto& [base, extra] : cases) {
    auto before = fitness::score(base, kTorch);
    auto after = fitness::score(base + extra, kTorch);
    EXPECT_EQ(after.total - before.total, 2) << base << extra;
    EXPECT_EQ(after.depth, before.depth + 1);
    EXPECT_EQ(after.unique_calls, before.unique_calls + 1);
    EXPECT_EQ(after.repeats, before.repeats);
  }
}

TEST(FitnessScoreTest, ExactDuplicateCallSubtractsOne) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"a = torch.rand(3)\nb = torch.log(a)\n", "c = torch.log(a)\n"},
      {"a = torch.rand(3)\n", "b = torch.rand(3)\n"},
      {"x = torch.ones(2)\ny = torch.mm(x, x)\n", "z = torch.mm(x,x)\n"},
  };
  for (const auto& [base, extra] : cases) {
    auto before = fitness::score(base, kTorch);
    auto after = fitness::score(base + extra, kTorch);
    EXPECT_EQ(after.total - before.total, -1) << base << extra;
  }
}

TEST(FitnessScoreTest, InvariantUnderCommentsAndWhitespace) {
  const std::string plain = "a = torch.rand(3)\nb = torch.log(a)\nc = torch.abs(b)\n";
  const std::string noisy =
      "# setup\na = torch.rand( 3 )   # input\n\n\nb = torch.log(a)\n# log\nc = torch.abs(  b )\n\n";
  EXPECT_EQ(fitness::score(plain, kTorch), fitness::score(noisy, kTorch));
}

TEST(FitnessScoreTest, GraphOverloadAgrees) {
  const std::string src = "a = torch.rand(3)\nb = torch.log(a)\nb2 = torch.log(a)\n";
  EXPECT_EQ(fitness::score(pyast::build_dataflow(src, kTorch)), fitness::score(src, kTorch));
}

TEST(FitnessScoreTest, ParseErrorPropagates) {
  EXPECT_THROW(fitness::score("x = torch.", kTorch), pyast::ParseError);
}

TEST(FitnessCompare, HigherTotalRanksFirst) {
  auto a = FitnessScore::make(2, 3, 0);
  auto b = FitnessScore::make(1, 1, 0);
  EXPECT_TRUE(fitness::compare(a, b) < 0);
  EXPECT_TRUE(fitness::compare(b, a) > 0);
}

TEST(FitnessCompare, EqualTotalsAreEquivalent) {
  EXPECT_TRUE(fitness::compare(FitnessScore::make(2, 0, 0), FitnessScore::make(0, 3, 1)) == 0);
}

TEST(FitnessCompare, IsAntisymmetric) {
  for (int x = -3; x <= 3; ++x) {
    for (int y = -3; y <= 3; ++y) {
      auto a = FitnessScore::make(x, 0, 0);
      auto b = FitnessScore::make(y, 0, 0);
      EXPECT_EQ(fitness::compare(a, b) < 0, fitness::compare(b, a) > 0);
    }
  }
}

}  // namespace
