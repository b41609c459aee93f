#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "evofuzz/corpus.hpp"

namespace {

using namespace evofuzz;
using namespace evofuzz::corpus;

const ApiTarget kTarget = ApiTarget::make("torch.log");

TestProgram valid_program(const std::string& source, int total) {
  auto p = TestProgram::make(source, kTarget);
  p.validity = Validity::kValid;
  p.fitness = FitnessScore::make(total, 0, 0);
  return p;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("evofuzz-corpus-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(ApiTargetTest, RejectsMalformedNames) {
  EXPECT_THROW(ApiTarget::make(""), InvalidTarget);
  EXPECT_THROW(ApiTarget::make("torch. mm"), InvalidTarget);
  EXPECT_THROW(ApiTarget::make("torch.mm", "tf.abs(x)"), InvalidTarget);
  EXPECT_NO_THROW(ApiTarget::make("torch.mm", "torch.mm(input, mat2)"));
  EXPECT_NO_THROW(ApiTarget::make("torch.mm", "mm(input, mat2)"));
}

TEST(ApiTargetTest, InfersLibraryFromRoot) {
  EXPECT_EQ(ApiTarget::make("torch.mm").library, Library::kTorchLike);
  EXPECT_EQ(ApiTarget::make("tf.nn.conv2d").library, Library::kTensorflowLike);
  EXPECT_EQ(ApiTarget::make("numpy.abs").library, Library::kGeneric);
  EXPECT_EQ(ApiTarget::make("tf.nn.conv2d").root(), "tf");
  EXPECT_EQ(ApiTarget::make("tf.nn.conv2d").leaf(), "conv2d");
}

TEST(ApiTargetTest, TensorflowRootsAreInterchangeable) {
  auto t = ApiTarget::make("tf.math.abs");
  EXPECT_TRUE(is_target_callee("tf.math.abs", t));
  EXPECT_TRUE(is_target_callee("tensorflow.math.abs", t));
  EXPECT_FALSE(is_target_callee("tf.math.abs_x", t));
  EXPECT_FALSE(is_target_callee("torch.mm", ApiTarget::make("torch.mm.x")));
}

TEST(Normalize, StripsCommentAndBlankLines) { EXPECT_EQ(normalize("x=1  # c\n\n"), "x=1"); }

TEST(Normalize, IsIdempotent) {
  const char* inputs[] = {"x=1", "x=1  # c\n\n", "a = '#not a comment'  # real\n\n\nb = 2   \n",
                          "s = '''\n\n# keep\n'''\n", "x = 'a\\\nb'\n", "\n\n\n"};
  for (const char* in : inputs) {
    auto once = normalize(in);
    EXPECT_EQ(normalize(once), once) << in;
  }
}

TEST(Normalize, CommentsOnlyDifferenceIsInvisible) {
  EXPECT_EQ(normalize("x = 1\n# header\ny = 2  # tail\n"), normalize("x = 1\ny = 2\n"));
}

TEST(Normalize, KeepsStringContents) {
  EXPECT_EQ(normalize("a = '#not a comment'  # real\n"), "a = '#not a comment'");
  EXPECT_EQ(normalize("s = '''\n\n# keep\n'''\n"), "s = '''\n\n# keep\n'''");
}

TEST(Normalize, HashFollowsNormalization) {
  EXPECT_EQ(norm_hash("x = 1  \n\n"), norm_hash("x = 1"));
  EXPECT_NE(norm_hash("x = 1"), norm_hash("x = 2"));
  EXPECT_EQ(norm_hash("x = 1").size(), 64u);
}

TEST(SeedBankTest, InsertReportsNovelty) {
  SeedBank bank;
  EXPECT_TRUE(bank.insert(valid_program("x = torch.log(a)", 1)));
  EXPECT_EQ(bank.size(), 1u);
  EXPECT_FALSE(bank.insert(valid_program("x = torch.log(a)", 1)));
  EXPECT_FALSE(bank.insert(valid_program("x = torch.log(a)   # again\n\n", 1)));
  EXPECT_EQ(bank.size(), 1u);
}

TEST(SeedBankTest, OnlyValidProgramsAreIndexed) {
  SeedBank bank;
  auto bad = TestProgram::make("x = (", kTarget);
  bad.validity = Validity::kParseError;
  EXPECT_TRUE(bank.insert(bad));
  EXPECT_TRUE(bank.insert(valid_program("y = torch.log(b)", 2)));
  EXPECT_EQ(bank.size(), 2u);
  EXPECT_EQ(bank.valid_count(), 1u);
  EXPECT_TRUE(bank.contains(bad.norm_hash));
}

TEST(SeedBankTest, EmptyBankSelectionThrows) {
  SeedBank bank;
  Rng rng(1);
  EXPECT_THROW(bank.select_seed(10, rng), EmptyBankError);
  auto bad = TestProgram::make("x = (", kTarget);
  bad.validity = Validity::kRuntimeError;
  bank.insert(bad);
  EXPECT_THROW(bank.select_seed(10, rng), EmptyBankError);
}

TEST(SeedBankTest, IndexConsistentAfterRandomInserts) {
  SeedBank bank;
  std::mt19937 gen(99);
  std::uniform_int_distribution<int> total(-3, 12);
  std::uniform_int_distribution<int> coin(0, 3);
  std::map<std::string, std::size_t> order;
  for (int i = 0; i < 1000; ++i) {
    auto p = valid_program("x = torch.log(" + std::to_string(gen() % 700) + ")", total(gen));
    if (coin(gen) == 0) p.validity = Validity::kRuntimeError;
    auto hash = p.norm_hash;
    if (bank.insert(std::move(p))) order.emplace(hash, order.size());
  }
  auto ranked = bank.fitness_order();
  std::size_t valid = 0;
  for (const auto& e : bank.entries()) valid += e.validity == Validity::kValid;
  ASSERT_EQ(ranked.size(), valid);
  ASSERT_EQ(bank.valid_count(), valid);
  for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
    const auto* a = ranked[i];
    const auto* b = ranked[i + 1];
    ASSERT_EQ(a->validity, Validity::kValid);
    ASSERT_GE(a->fitness.total, b->fitness.total);
    if (a->fitness.total == b->fitness.total) {
      ASSERT_GT(order.at(a->norm_hash), order.at(b->norm_hash));
    }
  }
  auto top = bank.top(10);
  ASSERT_EQ(top.size(), 10u);
  for (std::size_t i = 0; i < top.size(); ++i) EXPECT_EQ(top[i], ranked[i]);
}

TEST(SelectSeed, EqualFitnessIsUniform) {
  SeedBank bank;
  for (int i = 0; i < 3; ++i) bank.insert(valid_program("y = torch.log(" + std::to_string(i) + ")", 4));
  Rng rng(7);
  std::map<std::string, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[bank.select_seed(10, rng).norm_hash];
  ASSERT_EQ(counts.size(), 3u);
  double chi2 = 0;
  for (const auto& [_, c] : counts) chi2 += std::pow(c - n / 3.0, 2) / (n / 3.0);
  EXPECT_LT(chi2, 9.21);  // chi-square, 2 degrees of freedom, 99%
}

TEST(SelectSeed, SoftmaxRatioMatchesClosedForm) {
  SeedBank bank;
  bank.insert(valid_program("a = torch.log(1)", 5));
  bank.insert(valid_program("b = torch.log(2)", 2));
  Rng rng(12345);
  const int n = 100000;
  int low = 0;
  for (int i = 0; i < n; ++i) low += bank.select_seed(10, rng).fitness.total == 2;
  double p = 1.0 / (1.0 + std::exp(3.0));
  double sd = std::sqrt(n * p * (1 - p));
  EXPECT_NEAR(low, n * p, 4 * sd);
  double ratio = static_cast<double>(n - low) / low;
  EXPECT_NEAR(ratio, std::exp(3.0), 0.1 * std::exp(3.0));
}

TEST(SelectSeed, TopOneAlwaysReturnsBest) {
  SeedBank bank;
  bank.insert(valid_program("a = torch.log(1)", 3));
  bank.insert(valid_program("b = torch.log(2)", 9));
  bank.insert(valid_program("c = torch.log(3)", 1));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(bank.select_seed(1, rng).fitness.total, 9);
}

TEST(SelectSeed, NeverLeavesTopN) {
  SeedBank bank;
  for (int i = 0; i < 30; ++i) bank.insert(valid_program("x = torch.log(" + std::to_string(i) + ")", i % 7));
  auto top = bank.top(5);
  std::set<std::string> allowed;
  for (const auto* p : top) allowed.insert(p->norm_hash);
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) EXPECT_TRUE(allowed.count(bank.select_seed(5, rng).norm_hash));
}

TEST(SelectSeed, ReproducibleForSameSeed) {
  SeedBank bank;
  for (int i = 0; i < 12; ++i) bank.insert(valid_program("x = torch.log(" + std::to_string(i) + ")", i % 4));
  Rng a(42), b(42);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(bank.select_seed(10, a).norm_hash, bank.select_seed(10, b).norm_hash);
}

TEST(Softmax, WeightsSumToOneAndAreStable) {
  auto w = softmax({1000, 1000, 998});
  ASSERT_EQ(w.size(), 3u);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
  EXPECT_NEAR(w[0], w[1], 1e-12);
  EXPECT_NEAR(w[0] / w[2], std::exp(2.0), 1e-9);
}

TEST(Persistence, RoundTripsEntriesAndManifest) {
  auto dir = fresh_dir("roundtrip");
  SeedBank bank;
  auto seed = valid_program("import torch\nx = torch.log(torch.rand(3))\n", 3);
  seed.fitness = FitnessScore::make(1, 2, 0);
  auto seed_hash = seed.norm_hash;
  bank.insert(seed);
  auto mutant = TestProgram::make("import torch\nx = torch.log(torch.ones(3))\n", kTarget,
                                  Provenance::mutant(OperatorId::kArgument, seed_hash));
  mutant.validity = Validity::kValid;
  mutant.fitness = FitnessScore::make(1, 2, 0);
  bank.insert(mutant);
  auto broken = TestProgram::make("x = (", kTarget, Provenance::mutant(OperatorId::kSuffix, seed_hash));
  broken.validity = Validity::kParseError;
  bank.insert(broken);

  save_bank(bank, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / (seed_hash + ".py")));

  auto loaded = load_bank(dir, kTarget);
  ASSERT_EQ(loaded.size(), bank.size());
  EXPECT_EQ(loaded.valid_count(), bank.valid_count());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& a = bank.entries()[i];
    const auto& b = loaded.entries()[i];
    EXPECT_EQ(a.source, b.source);
    EXPECT_EQ(a.norm_hash, b.norm_hash);
    EXPECT_EQ(a.fitness, b.fitness);
    EXPECT_EQ(a.validity, b.validity);
    EXPECT_EQ(a.provenance, b.provenance);
  }
  std::filesystem::remove_all(dir);
}

TEST(Persistence, MissingProgramFileIsAnError) {
  auto dir = fresh_dir("missing");
  SeedBank bank;
  auto p = valid_program("x = torch.log(1)", 1);
  bank.insert(p);
  save_bank(bank, dir);
  std::filesystem::remove(dir / (p.norm_hash + ".py"));
  EXPECT_THROW(load_bank(dir, kTarget), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(OperatorNames, RoundTrip) {
  for (auto op : kAllOperators) {
    EXPECT_EQ(operator_from_string(to_string(op)), op);
    EXPECT_EQ(operator_from_code(to_code(op)), op);
  }
  EXPECT_THROW(operator_from_string("splice"), std::invalid_argument);
}

}  // namespace
