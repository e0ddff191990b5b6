#include "apz/abstraction.hpp"
#include "apz/generator.hpp"
#include "example_puzzles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <memory>
#include <set>

using namespace apz;
using apz::testing::base_puzzle;
using apz::testing::isomorphic_puzzle;
using apz::testing::relative_puzzle;

namespace {

struct Solved {
  Puzzle puzzle;
  ReasoningTrace trace;
  SynthDocument doc;
};

std::vector<std::unique_ptr<Solved>> solve_all(const std::vector<Puzzle> &ps) {
  std::vector<std::unique_ptr<Solved>> out;
  for (const auto &p : ps) {
    auto s = std::make_unique<Solved>();
    s->puzzle = p;
    s->trace = solve_with_trace(p);
    s->doc = trace_document(s->trace);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ProbeDocument> documents(const std::vector<std::unique_ptr<Solved>> &solved) {
  std::vector<ProbeDocument> out;
  for (const auto &s : solved) {
    out.push_back({s->puzzle.id, canonical_key(s->puzzle), &s->trace, s->doc.lines, reference_tokenize(s->doc.text)});
  }
  return out;
}

} // namespace

TEST(Pearson, UnitCases) {
  const std::vector<double> u{1, 2, 3, 4}, v{2, 1, 4, 3}, w{-1, -2, -3, -4};
  EXPECT_NEAR(pearson(u, u), 1.0, 1e-12);
  EXPECT_NEAR(pearson(u, w), -1.0, 1e-12);
  EXPECT_NEAR(pearson(u, v), 0.6, 1e-12);
}

TEST(Pearson, ZeroVarianceAndErrors) {
  long zero = 0;
  const std::vector<double> flat{2, 2, 2}, u{1, 2, 3};
  EXPECT_EQ(pearson(flat, u, &zero), 0.0);
  EXPECT_EQ(zero, 1);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, u), DomainError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), DomainError);
}

TEST(Pearson, Properties) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(16), v(16);
    for (auto &x : u) x = rng.normal();
    for (auto &x : v) x = rng.normal();
    const double r = pearson(u, v);
    EXPECT_GE(r, -1.0);
    EXPECT_LE(r, 1.0);
    EXPECT_EQ(r, pearson(v, u));
    std::vector<double> scaled = u, negated = u;
    const double a = 0.1 + 5 * rng.uniform(), b = rng.normal() * 3;
    for (auto &x : scaled) x = a * x + b;
    for (auto &x : negated) x = -x;
    EXPECT_NEAR(pearson(scaled, v), r, 1e-12);
    EXPECT_NEAR(pearson(negated, v), -r, 1e-12);
  }
}

TEST(SampleLinePairs, WorkedExamples) {
  const auto solved = solve_all({base_puzzle(), relative_puzzle(), isomorphic_puzzle()});
  const auto docs = documents(solved);
  SampleDiagnostics diag;
  const auto identical = sample_line_pairs(docs, Condition::Identical, 1000, 1, &diag);
  bool shared_line = false;
  for (const auto &p : identical) {
    EXPECT_NE(p.step_a, p.step_b);
    EXPECT_EQ(p.tokens_a.size(), p.tokens_b.size());
    if (p.puzzle_a != "ex-isomorphic" && p.puzzle_b != "ex-isomorphic") {
      const auto &ta = p.puzzle_a == "ex-base" ? solved[0]->trace : solved[1]->trace;
      if (ta.steps[static_cast<std::size_t>(p.step_a)].text ==
          "Position right must have Blake because they're the only person left.") {
        shared_line = true;
      }
    }
  }
  EXPECT_TRUE(shared_line);
  EXPECT_EQ(diag.returned, identical.size());
  EXPECT_EQ(diag.shortfall, 1000 - identical.size());

  const auto iso = sample_line_pairs(docs, Condition::Isomorphic, 1000, 1, &diag);
  bool therefore = false;
  for (const auto &p : iso) {
    EXPECT_EQ(p.step_a, p.step_b);
    EXPECT_NE(solved[0]->trace.steps[static_cast<std::size_t>(p.step_a)].text,
              solved[2]->trace.steps[static_cast<std::size_t>(p.step_b)].text);
    if (p.step_a == 8) therefore = true;
  }
  EXPECT_TRUE(therefore);
}

TEST(SampleLinePairs, UnequalTokenCountsAreExcluded) {
  // A subword tokenizer: words are cut into pieces of at most four characters,
  // so "Andrew" becomes two tokens while "Ava" stays one.
  const auto solved = solve_all({base_puzzle(), isomorphic_puzzle()});
  auto docs = documents(solved);
  for (auto &d : docs) {
    std::vector<CharSpan> pieces;
    for (auto [b, e] : d.tokens) {
      for (std::size_t s = b; s < e; s += 4) pieces.emplace_back(s, std::min(e, s + 4));
    }
    d.tokens = pieces;
  }
  SampleDiagnostics diag;
  const auto iso = sample_line_pairs(docs, Condition::Isomorphic, 100, 1, &diag);
  EXPECT_GT(diag.excluded_token_count, 0u);
  EXPECT_EQ(diag.eligible, iso.size());
  for (const auto &p : iso) EXPECT_EQ(p.tokens_a.size(), p.tokens_b.size());
}

TEST(SampleLinePairs, NothingEligible) {
  const auto solved = solve_all({base_puzzle()});
  EXPECT_THROW(sample_line_pairs(documents(solved), Condition::Identical, 10, 1), DomainError);
}

TEST(SampleLinePairs, DeterministicWithoutReplacement) {
  std::vector<Puzzle> ps;
  for (std::uint64_t s = 0; s < 30; ++s) {
    GeneratorConfig cfg;
    cfg.n = 2;
    cfg.seed = s;
    cfg.name_pool = default_name_pool();
    cfg.color_pool = default_color_pool();
    ps.push_back(generate_puzzle(cfg));
  }
  const auto solved = solve_all(ps);
  const auto docs = documents(solved);
  const auto a = sample_line_pairs(docs, Condition::Identical, 50, 3);
  const auto b = sample_line_pairs(docs, Condition::Identical, 50, 3);
  ASSERT_EQ(a.size(), b.size());
  std::set<std::tuple<std::string, int, std::string, int>> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].puzzle_a, b[i].puzzle_a);
    EXPECT_EQ(a[i].step_b, b[i].step_b);
    EXPECT_TRUE(seen.insert({a[i].puzzle_a, a[i].step_a, a[i].puzzle_b, a[i].step_b}).second);
  }
}

TEST(LayerProfile, IdenticalTensorsGiveOne) {
  ActivationTensor t{3, 1, 8, {}};
  Rng rng(1);
  for (int i = 0; i < 24; ++i) t.values.push_back(static_cast<float>(rng.normal()));
  LinePair p{Condition::Identical, "a", "b", 0, 1, {0, 1, 2}, {0, 1, 2}};
  const std::vector<LinePair> pairs{p};
  const auto prof = layer_profile(pairs, [&](const std::string &) { return &t; }, std::vector<int>{0});
  EXPECT_DOUBLE_EQ(prof.find(0, Condition::Identical)->mean, 1.0);
  EXPECT_EQ(prof.find(0, Condition::Isomorphic)->pairs, 0);
}

TEST(LayerProfile, OrderAndSideInvariance) {
  std::map<std::string, ActivationTensor> tensors;
  Rng rng(3);
  for (const char *id : {"a", "b", "c"}) {
    ActivationTensor t{6, 2, 8, {}};
    for (int i = 0; i < 96; ++i) t.values.push_back(static_cast<float>(rng.normal()));
    tensors[id] = t;
  }
  std::vector<LinePair> pairs{{Condition::Identical, "a", "b", 0, 2, {0, 1}, {3, 4}},
                              {Condition::Isomorphic, "b", "c", 1, 1, {1, 2, 5}, {0, 2, 4}},
                              {Condition::Identical, "c", "a", 3, 1, {2, 3}, {0, 5}},
                              {Condition::Identical, "a", "missing", 3, 1, {2}, {0}}};
  auto lookup = [&](const std::string &id) -> const ActivationTensor * {
    auto it = tensors.find(id);
    return it == tensors.end() ? nullptr : &it->second;
  };
  const std::vector<int> layers{0, 1};
  const auto base = layer_profile(pairs, lookup, layers);
  EXPECT_EQ(base.dropped_pairs, 1);
  std::reverse(pairs.begin(), pairs.end());
  for (auto &p : pairs) {
    std::swap(p.puzzle_a, p.puzzle_b);
    std::swap(p.tokens_a, p.tokens_b);
    std::swap(p.step_a, p.step_b);
  }
  const auto flipped = layer_profile(pairs, lookup, layers);
  ASSERT_EQ(base.rows.size(), flipped.rows.size());
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    EXPECT_EQ(base.rows[i].mean, flipped.rows[i].mean);
    EXPECT_EQ(base.rows[i].pairs, flipped.rows[i].pairs);
  }
}
