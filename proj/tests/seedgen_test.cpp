#include <gtest/gtest.h>

#include "evofuzz/seedgen.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace evofuzz;
using namespace evofuzz::seedgen;

TEST(BuildPrompt, GoldenTorchPrompt) {
  auto target = ApiTarget::make("torch.mm", "torch.mm(input, mat2, *, out=None)");
  EXPECT_EQ(build_prompt(target),
            "\"\"\"\n"
            "This is a Python program that uses the PyTorch library.\n"
            "Target API: torch.mm(input, mat2, *, out=None)\n"
            "Task 1: import PyTorch\n"
            "Task 2: generate input data\n"
            "Task 3: call the API torch.mm\n"
            "\"\"\"\n"
            "import torch\n");
}

TEST(BuildPrompt, TensorflowTemplateAndBareName) {
  auto target = ApiTarget::make("tf.math.abs");
  auto prompt = build_prompt(target);
  EXPECT_NE(prompt.find("uses the TensorFlow library"), std::string::npos);
  EXPECT_NE(prompt.find("Target API: tf.math.abs\n"), std::string::npos);
  EXPECT_TRUE(prompt.ends_with("import tensorflow as tf\n"));
}

TEST(BuildPrompt, VersionNoteAndGenericLibrary) {
  auto target = ApiTarget::make("numpy.linalg.inv");
  auto tmpl = PromptTemplate::for_target(target);
  EXPECT_EQ(tmpl.import_line, "import numpy");
  tmpl.version_note = "1.26";
  auto prompt = build_prompt(target, tmpl);
  EXPECT_NE(prompt.find("uses the numpy 1.26 library"), std::string::npos);
}

TEST(SeedRequest, UsesPromptAndParams) {
  auto target = ApiTarget::make("torch.log");
  auto params = genbackend::SamplingParams::seed_defaults();
  auto req = seed_request(target, params);
  EXPECT_EQ(req.prompt, build_prompt(target));
  EXPECT_EQ(req.params, params);
}

// Backend returning a fixed list of completions, or failing.
class ScriptedBackend : public genbackend::Backend {
 public:
  std::vector<std::string> completions;
  std::optional<genbackend::BackendError::Kind> failure;
  int calls = 0;

  std::vector<std::string> complete(const genbackend::CompletionRequest&) override {
    ++calls;
    if (failure) throw genbackend::BackendError(*failure, "scripted failure");
    return completions;
  }
  std::vector<std::vector<std::string>> infill(const genbackend::InfillRequest&) override { return {}; }
  std::string name() const override { return "scripted"; }
};

TEST(GenerateSeeds, KeepsUniqueValidPrograms) {
  auto target = ApiTarget::make("torch.log");
  ScriptedBackend backend;
  backend.completions = {
      "x = torch.rand(3)\ny = torch.log(x)\n",
      "x = torch.rand(3)\n\ny = torch.log(x)  # same program\n",
      "x = torch.rand(3)\nprint(x)\n",
      "x = torch.ones(2)\nz = torch.log(x)\nw = torch.exp(z",
      "   ",
      "y = torch.log(torch.ones(4))\n",
  };
  auto result = generate_seeds(target, backend, genbackend::SamplingParams::seed_defaults());
  EXPECT_FALSE(result.error.has_value());
  EXPECT_EQ(result.stats.completions, 6u);
  EXPECT_EQ(result.stats.duplicates, 1u);
  EXPECT_EQ(result.stats.rejected_no_target, 1u);
  EXPECT_EQ(result.stats.rejected_empty, 1u);
  EXPECT_EQ(result.stats.rejected_unparseable, 0u);
  ASSERT_EQ(result.seeds.size(), 3u);
  for (const auto& s : result.seeds) {
    EXPECT_TRUE(s.source.starts_with("import torch\n"));
    EXPECT_TRUE(s.provenance.is_seed());
    EXPECT_EQ(s.target, target);
  }
  EXPECT_EQ(result.seeds[1].source, "import torch\nx = torch.ones(2)\nz = torch.log(x)");
}

TEST(GenerateSeeds, BackendErrorIsCaptured) {
  auto target = ApiTarget::make("torch.log");
  ScriptedBackend backend;
  backend.failure = genbackend::BackendError::Kind::kTimeout;
  auto result = generate_seeds(target, backend, genbackend::SamplingParams::seed_defaults());
  ASSERT_TRUE(result.error.has_value());
  EXPECT_NE(result.error->find("timeout"), std::string::npos);
  EXPECT_TRUE(result.seeds.empty());
  EXPECT_EQ(backend.calls, 1);
}

TEST(GenerateSeeds, MockFixturesYieldSeedsForEveryCatalogApi) {
  auto mock = genbackend::MockBackend::from_directory(testkit::fixture_dir() / "mock");
  for (const auto& target : load_catalog(testkit::fixture_dir() / "catalog.jsonl")) {
    auto result = generate_seeds(target, mock, genbackend::SamplingParams::seed_defaults());
    EXPECT_GE(result.seeds.size(), 1u) << target.qualified_name;
    EXPECT_GT(result.stats.completions, 1u) << target.qualified_name;
  }
}

TEST(LoadCatalog, ReadsFixtureCatalog) {
  auto targets = load_catalog(testkit::fixture_dir() / "catalog.jsonl");
  ASSERT_EQ(targets.size(), 5u);
  EXPECT_EQ(targets[0].qualified_name, "torch.mm");
  EXPECT_EQ(targets[0].library, Library::kTorchLike);
  EXPECT_FALSE(targets[0].signature.empty());
  EXPECT_EQ(targets[3].library, Library::kTensorflowLike);
}

TEST(LoadCatalog, ExplicitLibraryAndBlankLines) {
  testkit::ScratchDir dir("catalog");
  auto path = dir.write("c.jsonl",
                        "{\"name\": \"torch.abs\"}\n\n"
                        "{\"name\": \"jax.numpy.sum\", \"library\": \"generic\", \"signature\": \"jax.numpy.sum(a)\"}\n");
  auto targets = load_catalog(path);
  ASSERT_EQ(targets.size(), 2u);
  EXPECT_EQ(targets[1].library, Library::kGeneric);
  EXPECT_EQ(targets[1].signature, "jax.numpy.sum(a)");
}

TEST(LoadCatalog, ErrorsNameTheLine) {
  testkit::ScratchDir dir("catalog-bad");
  auto path = dir.write("c.jsonl", "{\"name\": \"torch.abs\"}\n{\"signature\": \"x\"}\n");
  try {
    load_catalog(path);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_catalog(dir.path() / "missing.jsonl"), std::runtime_error);
}

}  // namespace
