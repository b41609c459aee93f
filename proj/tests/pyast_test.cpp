#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "evofuzz/pyast.hpp"
#include "support/fixtures.hpp"
#include "support/program_model.hpp"

namespace {

using namespace evofuzz;
using namespace evofuzz::pyast;

const std::vector<std::string> kTorch = {"torch"};

using testkit::is_line_prefix;

TEST(ParseCheck, AcceptsSimpleAssignment) { EXPECT_FALSE(parse_check("x = 1")); }

TEST(ParseCheck, AcceptsEmptyModule) { EXPECT_FALSE(parse_check("")); }

TEST(ParseCheck, ReportsDanglingAttributeOnLineOne) {
  auto err = parse_check("x = torch.");
  ASSERT_TRUE(err);
  EXPECT_EQ(err->line, 1);
}

TEST(ParseCheck, ReportsFirstOffendingLine) {
  auto err = parse_check("a = 1\nb = (2\nc = 3\n");
  ASSERT_TRUE(err);
  EXPECT_GE(err->line, 2);
}

TEST(ParseCheck, AcceptsCommonStatementForms) {
  const char* ok[] = {
      "import torch\nimport tensorflow as tf\nfrom a.b import c as d, e\n",
      "def f(a, b=1, *args, c, d=2, **kw):\n    return a\n",
      "class A(B, metaclass=M):\n    x: int = 3\n    def m(self):\n        pass\n",
      "for i in range(3):\n    if i % 2:\n        continue\n    else:\n        break\nelse:\n    pass\n",
      "while x < 3:\n    x += 1\n",
      "try:\n    f()\nexcept (A, B) as e:\n    raise\nexcept Exception:\n    pass\nfinally:\n    g()\n",
      "with open(p) as f, lock:\n    data = f.read()\n",
      "y = [i * 2 for i in range(10) if i]\nz = {k: v for k, v in d.items()}\n",
      "s = x[1:2, ::3, ...]\n",
      "f(*args, **kwargs)\n",
      "lam = lambda a, *b, **c: a + 1\n",
      "a, *b = c\n",
      "if (n := len(a)) > 10:\n    pass\n",
      "x = 'a' 'b' f\"{y!r:>10}\" b'z'\n",
      "x = \"\"\"multi\nline\"\"\"\n",
      "async def g():\n    async with a as b:\n        await b\n    async for i in c:\n        yield i\n",
      "@decorator(1)\ndef h():\n    global q\n    del q[0]\n    assert q, 'm'\n",
      "x = 1 if y else 2\nz = not a and b or c\nw = a is not b\nv = a not in b\n",
      "m = a @ b\nm @= c\nt = -x ** 2\n",
      "x = (\n    1,\n    2,\n)\n",
      "x = 1; y = 2\n",
      "if x: y = 1\n",
      "print(1, end='')\n",
      "return 5\n",
  };
  for (const char* src : ok) {
    auto err = parse_check(src);
    EXPECT_FALSE(err) << src << "\n-> " << (err ? err->message : "");
  }
}

TEST(ParseCheck, RejectsInvalidForms) {
  const char* bad[] = {
      "def f(:\n",
      "x = = 1\n",
      "f(a=1, 2)\n",
      "f(**a, *b)\n",
      "f(x for x in y, 1)\n",
      "f(a=1, a=2)\n",
      "if x\n    y = 1\n",
      "def g():\nreturn 1\n",
      "  x = 1\n",
      "x = (1, 2\n",
      "x = 'unterminated\n",
      "1 = x\n",
      "f() = 3\n",
      "else:\n    pass\n",
      "x = [1, 2\ny = 3\n",
      "del f()\n",
      "for f() in x:\n    pass\n",
  };
  for (const char* src : bad) EXPECT_TRUE(parse_check(src)) << src;
}

TEST(ParseCheck, ParseErrorCarriesLocation) {
  try {
    find_calls("x = torch.", kTorch);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.error().line, 1);
    EXPECT_FALSE(e.error().message.empty());
  }
}

TEST(TrimToParse, DropsTruncatedLastLine) {
  EXPECT_EQ(trim_to_parse("a = torch.rand(3)\nb = torch."), "a = torch.rand(3)");
}

TEST(TrimToParse, ReturnsValidSourceUnchanged) {
  const std::string src = "import torch\nx = torch.rand(3)\n\ny = torch.log(x)\n";
  EXPECT_EQ(trim_to_parse(src), src);
}

TEST(TrimToParse, SingleBadLineBecomesEmpty) { EXPECT_EQ(trim_to_parse("def f(:"), ""); }

TEST(TrimToParse, DropsUnclosedBlockHeader) {
  EXPECT_EQ(trim_to_parse("x = 1\nfor i in range(3):"), "x = 1");
}

TEST(TrimToParse, DropsEveryLineOfAnUnclosedBracket) {
  EXPECT_EQ(trim_to_parse("x = 1\ny = f(1,\n      2,\n"), "x = 1");
}

TEST(TrimToParse, OutputIsLinePrefixThatParses) {
  const std::vector<std::string> inputs = {
      "import torch\nx = torch.rand(3)\ny = torch.lo",
      "x = '''abc\ndef",
      "if x:\n    y = 1\n    z = (",
      "a = 1\nb = 2\nc = [1,\n",
      "@dec\n",
      "x = 1\n  y = 2\n",
  };
  for (const auto& in : inputs) {
    auto out = trim_to_parse(in);
    EXPECT_TRUE(is_line_prefix(out, in)) << in;
    EXPECT_FALSE(parse_check(out)) << in;
  }
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

TEST(TrimToParse, TruncatedCompletionsMatchReferenceParser) {
  auto records = testkit::read_jsonl(testkit::fixture_dir() / "truncated.jsonl");
  ASSERT_EQ(records.size(), 30u);
  for (const auto& r : records) {
    auto completion = r["completion"].get<std::string>();
    auto out = trim_to_parse(completion);
    EXPECT_TRUE(parse_check(completion).has_value()) << completion;
    EXPECT_EQ(strip_trailing_newlines(out), strip_trailing_newlines(r["expected"].get<std::string>())) << completion;
    EXPECT_TRUE(is_line_prefix(out, completion)) << completion;
    EXPECT_FALSE(parse_check(out)) << completion;
  }
}

TEST(FindCalls, SingleLibraryCall) {
  auto sites = find_calls("t = torch.mm(a, b)", kTorch);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].callee, "torch.mm");
  EXPECT_EQ(sites[0].normalized_args, "a,b");
}

TEST(FindCalls, IgnoresNonLibraryCalls) { EXPECT_TRUE(find_calls("print(x)", kTorch).empty()); }

TEST(FindCalls, NestedCallsComeInnerFirst) {
  const std::string src = "y = torch.matrix_exp(torch.log(x))";
  auto sites = find_calls(src, kTorch);
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_EQ(sites[0].callee, "torch.log");
  EXPECT_EQ(sites[1].callee, "torch.matrix_exp");
  EXPECT_TRUE(sites[1].arg_span.contains(sites[0].call_span));
}

TEST(FindCalls, SpansAreConsistent) {
  const std::string src = "import torch\nz = torch.nn.functional.relu(torch.rand( 2 ,3 ), inplace=True)\n";
  auto sites = find_calls(src, kTorch);
  ASSERT_EQ(sites.size(), 2u);
  for (const auto& s : sites) {
    EXPECT_TRUE(s.call_span.contains(s.arg_span));
    EXPECT_LT(s.call_span.begin, s.arg_span.begin);
    EXPECT_LT(s.arg_span.end, s.call_span.end);
    EXPECT_EQ(s.callee_span.slice(src), s.callee);
    EXPECT_EQ(s.first_line, 2);
    auto call_text = std::string(s.call_span.slice(src));
    EXPECT_FALSE(parse_check("_ = " + call_text)) << call_text;
    EXPECT_EQ(call_text.back(), ')');
  }
  EXPECT_EQ(sites[0].normalized_args, "2,3");
  EXPECT_EQ(sites[1].callee, "torch.nn.functional.relu");
}

TEST(FindCalls, MethodOnLibraryValueIsAttributed) {
  auto sites = find_calls("ds = tf.data.Dataset.range(10)\nb = ds.batch(5)\n",
                          std::vector<std::string>{"tf"});
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_EQ(sites[1].callee, std::string("tf.") + std::string(kMethodMarker) + "batch");
  EXPECT_TRUE(sites[1].is_method);
}

TEST(FindCalls, MethodOnPlainValueIsIgnored) {
  EXPECT_TRUE(find_calls("s = 'a,b'.split(',')\n", kTorch).empty());
}

TEST(FindCalls, PrefixMatchesWholeComponents) {
  EXPECT_TRUE(find_calls("y = torchvision.ops.nms(a, b, 0.5)", kTorch).empty());
  EXPECT_TRUE(has_dotted_prefix("torch.mm", "torch"));
  EXPECT_TRUE(has_dotted_prefix("torch", "torch"));
  EXPECT_FALSE(has_dotted_prefix("torchvision.ops", "torch"));
}

TEST(FindCalls, CallsInsideBlocksAreFound) {
  auto sites = find_calls("for i in range(2):\n    if i:\n        y = torch.abs(x)\n", kTorch);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].first_line, 3);
  EXPECT_EQ(sites[0].statement_indent, 8);
}

TEST(BuildDataflow, ThreeCallChainHasDepthTwo) {
  auto g = build_dataflow("a = torch.rand(3)\nb = torch.log(a)\nc = torch.matrix_exp(b)", kTorch);
  ASSERT_EQ(g.nodes.size(), 3u);
  std::set<std::pair<std::size_t, std::size_t>> edges(g.edges.begin(), g.edges.end());
  EXPECT_EQ(edges, (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}}));
  EXPECT_EQ(g.depth, 2);
}

TEST(BuildDataflow, IndependentCallsHaveDepthZero) {
  auto g = build_dataflow("a = torch.rand(3)\nb = torch.ones(2)\n", kTorch);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.depth, 0);
}

TEST(BuildDataflow, NestedCallGivesInnerToOuterEdge) {
  auto g = build_dataflow("torch.mm(torch.rand(2,2), b)", kTorch);
  ASSERT_EQ(g.nodes.size(), 2u);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(g.depth, 1);
}

TEST(BuildDataflow, ReassignmentKillsEarlierDefinition) {
  auto g = build_dataflow("a = torch.rand(3)\na = 5\nb = torch.log(a)\n", kTorch);
  EXPECT_TRUE(g.edges.empty());
}

TEST(BuildDataflow, PlainAssignmentsCarryDefinitions) {
  auto g = build_dataflow("a = torch.rand(3)\nb = a * 2\nc = torch.log(b)\n", kTorch);
  EXPECT_EQ(g.depth, 1);
}

TEST(BuildDataflow, TupleUnpackingKillsDefinitions) {
  auto g = build_dataflow("a = torch.rand(3)\na, b = 1, 2\nc = torch.log(a)\n", kTorch);
  EXPECT_TRUE(g.edges.empty());
}

TEST(BuildDataflow, LoopBodyIsAnalyzedOnce) {
  auto g = build_dataflow(
      "x = torch.rand(3)\nfor i in range(3):\n    x = torch.log(x)\ny = torch.abs(x)\n", kTorch);
  EXPECT_EQ(g.depth, 2);
}

TEST(BuildDataflow, DepthIsZeroIffNoEdges) {
  testkit::ProgramGenerator gen(11);
  for (int i = 0; i < 100; ++i) {
    auto p = gen.generate(8);
    auto g = build_dataflow(p.source, kTorch);
    EXPECT_EQ(g.depth == 0, g.edges.empty()) << p.source;
  }
}

TEST(BuildDataflow, MatchesExhaustiveLongestPathOracle) {
  testkit::ProgramGenerator gen(2024);
  for (int i = 0; i < 200; ++i) {
    auto p = gen.generate(12);
    auto g = build_dataflow(p.source, kTorch);
    ASSERT_EQ(g.nodes.size(), p.call_count) << p.source;
    std::set<std::pair<std::size_t, std::size_t>> edges(g.edges.begin(), g.edges.end());
    EXPECT_EQ(edges, p.edges) << p.source;
    for (const auto& [a, b] : edges) EXPECT_LT(a, b) << p.source;
    EXPECT_EQ(g.depth, testkit::brute_force_longest_path(p.call_count, p.edges)) << p.source;
  }
}

TEST(EliminateDeadCode, RemovesUnusedPlainAssignment) {
  auto target = ApiTarget::make("torch.abs");
  EXPECT_EQ(eliminate_dead_code("x = 1\ny = torch.abs(torch.rand(2))", target),
            "y = torch.abs(torch.rand(2))");
}

TEST(EliminateDeadCode, KeepsEverythingFeedingTheTarget) {
  auto target = ApiTarget::make("torch.log");
  const std::string src = "import torch\nn = 3\nx = torch.rand(n)\ny = torch.log(x)\n";
  EXPECT_EQ(eliminate_dead_code(src, target), src);
}

TEST(EliminateDeadCode, RemovesChainsToFixpoint) {
  auto target = ApiTarget::make("torch.log");
  auto out = eliminate_dead_code("a = 1\nb = a + 1\nc = b * 2\ny = torch.log(torch.rand(2))\n", target);
  EXPECT_EQ(out, "y = torch.log(torch.rand(2))\n");
}

TEST(EliminateDeadCode, KeepsFunctionsThatCallTheLibrary) {
  auto target = ApiTarget::make("torch.log");
  const std::string src =
      "import torch\ndef make():\n    return torch.rand(3)\ny = torch.log(make())\n";
  EXPECT_EQ(eliminate_dead_code(src, target), src);
}

TEST(EliminateDeadCode, PreservesTargetInputStatements) {
  testkit::ProgramGenerator gen(5);
  auto target = ApiTarget::make("torch.log");
  for (int i = 0; i < 100; ++i) {
    auto p = gen.generate(10);
    auto out = eliminate_dead_code(p.source, target);
    EXPECT_FALSE(parse_check(out)) << p.source;
    auto before = find_calls(p.source, kTorch);
    auto after = find_calls(out, kTorch);
    // Library calls are never removed, so dataflow into the target survives.
    EXPECT_EQ(before.size(), after.size()) << p.source;
    EXPECT_EQ(build_dataflow(out, kTorch).edges.size(), build_dataflow(p.source, kTorch).edges.size())
        << p.source;
  }
}

TEST(RemovePrints, DropsPrintStatements) {
  EXPECT_EQ(remove_prints("y = torch.abs(x)\nprint(y)\n"), "y = torch.abs(x)\n");
}

TEST(RemovePrints, EmptiedBlockGetsPass) {
  auto out = remove_prints("for i in range(3):\n    print(i)\ny = 1\n");
  EXPECT_FALSE(parse_check(out));
  EXPECT_EQ(out.find("print"), std::string::npos);
  EXPECT_NE(out.find("pass"), std::string::npos);
}

TEST(RemovePrints, KeepsPrintUsedAsValue) {
  const std::string src = "f = print\nx = [print(1)]\n";
  EXPECT_EQ(remove_prints(src), src);
}

TEST(CanonicalTokens, CollapsesWhitespace) {
  EXPECT_EQ(canonical_tokens(" a ,  b = 2 "), "a,b=2");
  EXPECT_EQ(canonical_tokens("x if y else z"), "x if y else z");
  EXPECT_EQ(canonical_tokens("'a  b'"), "'a  b'");
}

}  // namespace
