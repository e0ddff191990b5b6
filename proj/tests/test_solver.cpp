#include "apz/generator.hpp"
#include "apz/parser.hpp"
#include "apz/solver.hpp"
#include "example_puzzles.hpp"

#include <gtest/gtest.h>

using namespace apz;
using apz::testing::base_puzzle;
using apz::testing::isomorphic_puzzle;
using apz::testing::relative_puzzle;

namespace {

std::vector<std::string> texts(const ReasoningTrace &t) {
  std::vector<std::string> out;
  for (const auto &s : t.steps) out.push_back(s.text);
  return out;
}

} // namespace

TEST(Solver, BasePuzzleTraceIsVerbatim) {
  const ReasoningTrace t = solve_with_trace(base_puzzle());
  const std::vector<std::string> expected{
      "Applying clue: The person wearing pink is not sitting on the far left.",
      "The person wearing pink cannot be at position left.",
      "Red cannot be worn by someone at position right because it is worn by someone at position left.",
      "Position right must have someone wearing pink because it's the only color left.",
      "Applying clue: Blake is sitting on the far right.",
      "Blake must be at position right.",
      "Ava cannot be at position right because they are at position left.",
      "Position right must have Blake because they're the only person left.",
      "Ava is wearing one of pink or red, and they are at position left which contains someone wearing red. "
      "Therefore, Ava must be wearing red at position left.",
      "Red is worn by one of Ava or Blake, and it is at position left which contains Ava. "
      "Therefore, position left must have Ava wearing red.",
      "Blake is wearing one of pink or red, and they are at position right which contains someone wearing pink. "
      "Therefore, Blake must be wearing pink at position right.",
      "Pink is worn by one of Ava or Blake, and it is at position right which contains Blake. "
      "Therefore, position right must have Blake wearing pink.",
      "All positions have been determined.",
  };
  EXPECT_EQ(texts(t), expected);
  EXPECT_EQ(t.final, base_puzzle().solution);
  const auto doc = render_trace_document(t);
  const auto [b, e] = doc.line_spans.back();
  EXPECT_EQ(doc.text.substr(b, e - b),
            "Final answer: Ava (Color red, position left), Blake (Color pink, position right)");
}

TEST(Solver, IsomorphicPuzzleTraceIsVerbatim) {
  const ReasoningTrace t = solve_with_trace(isomorphic_puzzle());
  ASSERT_EQ(t.steps.size(), 13u);
  EXPECT_EQ(t.steps[8].text,
            "Andrew is wearing one of chocolate or mint, and they are at position left which contains someone "
            "wearing mint. Therefore, Andrew must be wearing mint at position left.");
  EXPECT_EQ(t.steps[11].text, "Chocolate is worn by one of Andrew or Bella, and it is at position right which "
                              "contains Bella. Therefore, position right must have Bella wearing chocolate.");
}

TEST(Solver, RelativePuzzle) {
  const ReasoningTrace t = solve_with_trace(relative_puzzle());
  EXPECT_EQ(t.final, (Arrangement{{"Aaron", "Blake"}, {"mint", "lilac"}}));
  ASSERT_GE(t.steps.size(), 5u);
  EXPECT_EQ(t.steps[0].text, "Applying clue: Blake is somewhere to the right of the person wearing mint.");
  EXPECT_EQ(t.steps[1].text,
            "Because the person wearing mint is at one of positions left or right, Blake must be in position right.");
  EXPECT_EQ(t.steps[2].text, "Because Blake is at position right, the person wearing mint must be in position left.");
  EXPECT_EQ(t.steps[3].text, "Aaron cannot be at position right because they are at position left.");
  EXPECT_EQ(t.steps[4].text, "Position right must have Blake because they're the only person left.");
  EXPECT_EQ(t.steps.back().text, "All positions have been determined.");
}

TEST(Solver, SharedLineSitsAtDifferentSteps) {
  const auto a = solve_with_trace(base_puzzle());
  const auto b = solve_with_trace(relative_puzzle());
  const std::string line = "Position right must have Blake because they're the only person left.";
  int ia = -1, ib = -1;
  for (const auto &s : a.steps) if (s.text == line) ia = s.index;
  for (const auto &s : b.steps) if (s.text == line) ib = s.index;
  EXPECT_GE(ia, 0);
  EXPECT_GE(ib, 0);
  EXPECT_NE(ia, ib);
}

TEST(Solver, StepsAreIndexedAndTyped) {
  const auto t = solve_with_trace(base_puzzle());
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    EXPECT_EQ(t.steps[i].index, static_cast<int>(i));
    EXPECT_EQ(t.steps[i].claim.has_value(), t.steps[i].kind != StepKind::ClueHeader);
    EXPECT_EQ(template_info(t.steps[i].template_id).kind, t.steps[i].kind);
  }
  EXPECT_EQ(t.steps.back().kind, StepKind::Terminal);
}

TEST(Solver, StallIsReported) {
  // Unique solution, but only reachable by case analysis.
  Puzzle p;
  p.id = "stall";
  p.n = 3;
  p.names = {"A", "B", "C"};
  p.colors = {"x", "y", "z"};
  p.solution = {{"A", "B", "C"}, {"x", "y", "z"}};
  const std::vector<Clue> pool = all_true_clues(p.solution, p.vocabulary());
  // Search small clue subsets for one that is unique but stalls.
  bool found = false;
  for (std::size_t i = 0; i < pool.size() && !found; ++i) {
    for (std::size_t j = i + 1; j < pool.size() && !found; ++j) {
      for (std::size_t k = j + 1; k < pool.size() && !found; ++k) {
        std::vector<Clue> c{pool[i], pool[j], pool[k]};
        if (count_solutions(c, p.vocabulary()) != 1) continue;
        p.clues = c;
        try {
          solve_with_trace(p);
        } catch (const StallError &) {
          found = true;
        }
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(Solver, ContradictionIsReported) {
  Puzzle p = base_puzzle();
  p.clues = {Clue::at_end(Entity::person("Blake"), End::Left), Clue::at_end(Entity::person("Blake"), End::Right)};
  EXPECT_THROW(solve_with_trace(p), ContradictionError);
}

TEST(Solver, GeneratedPuzzlesAreSoundAndMonotone) {
  for (int n = 2; n <= 4; ++n) {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      GeneratorConfig cfg;
      cfg.n = n;
      cfg.seed = seed * 1000 + static_cast<std::uint64_t>(n);
      cfg.name_pool = default_name_pool();
      cfg.color_pool = default_color_pool();
      const Puzzle p = generate_puzzle(cfg);
      const ReasoningTrace t = solve_with_trace(p);
      const auto witnesses = find_solutions(p.clues, p.vocabulary(), 2);
      ASSERT_EQ(witnesses.size(), 1u);
      ASSERT_EQ(t.final, witnesses[0]);
      std::array<int, 3> prev{n * n, n * n, n * n};
      for (const auto &s : t.steps) {
        if (s.claim) {
          ASSERT_TRUE(claim_holds(*s.claim, t.final)) << s.text;
        }
        for (int m = 0; m < 3; ++m) ASSERT_LE(s.live_cells[m], prev[m]) << s.text;
        prev = s.live_cells;
      }
      EXPECT_EQ(prev, (std::array<int, 3>{n, n, n}));
    }
  }
}

TEST(RenderStep, Examples) {
  StepContext ctx;
  ctx.id = TemplateId::CluePersonAt;
  EXPECT_EQ(render_step(Claim::person_at("Blake", 1), StepKind::ClueApplication, ctx),
            "Blake must be at position right.");
  ctx = {};
  ctx.id = TemplateId::Terminal;
  EXPECT_EQ(render_step(Claim::done(), StepKind::Terminal, ctx), "All positions have been determined.");
  ctx = {};
  ctx.id = TemplateId::ComposeByPerson;
  ctx.options = {"pink", "red"};
  const std::string text = render_step(Claim::person_wears_at("Ava", "red", 0), StepKind::Composition, ctx);
  const std::string tail = "Therefore, Ava must be wearing red at position left.";
  EXPECT_EQ(text.substr(text.size() - tail.size()), tail);
}

TEST(RenderStep, MismatchedClaimIsRejected) {
  StepContext ctx;
  ctx.id = TemplateId::CluePersonAt;
  EXPECT_THROW(render_step(Claim::color_at("red", 1), StepKind::ClueApplication, ctx), DomainError);
  EXPECT_THROW(render_step(Claim::person_at("Blake", 1), StepKind::Elimination, ctx), DomainError);
}

TEST(RenderStep, TemplateKeysRoundTrip) {
  for (const auto &info : template_table()) {
    EXPECT_EQ(template_from_key(info.key), info.id);
    EXPECT_EQ(step_kind_from_string(to_string(info.kind)), info.kind);
  }
  EXPECT_FALSE(template_from_key("nope").has_value());
}

TEST(TraceDocument, LineSpansCoverLines) {
  const auto t = solve_with_trace(base_puzzle());
  const auto doc = render_trace_document(t);
  ASSERT_EQ(doc.line_spans.size(), t.steps.size() + 1);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto [b, e] = doc.line_spans[i];
    EXPECT_EQ(doc.text.substr(b, e - b), t.steps[i].text);
  }
}
