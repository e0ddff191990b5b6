#include "apz/generator.hpp"
#include "example_puzzles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace apz;

namespace {

GeneratorConfig config(int n, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.name_pool = default_name_pool();
  cfg.color_pool = default_color_pool();
  return cfg;
}

std::vector<Entity> entities(const Vocabulary &v) {
  std::vector<Entity> es;
  for (const auto &n : v.names) es.push_back(Entity::person(n));
  for (const auto &c : v.colors) es.push_back(Entity::wearer(c));
  return es;
}

} // namespace

TEST(Generator, UniqueMinimalAndDeterministic) {
  for (int n : {2, 3}) {
    for (std::uint64_t seed : {1ull, 2ull, 99ull, 123456789ull}) {
      const Puzzle a = generate_puzzle(config(n, seed));
      const Puzzle b = generate_puzzle(config(n, seed));
      EXPECT_EQ(a, b);
      EXPECT_EQ(count_solutions(a.clues, a.vocabulary()), 1);
      EXPECT_NO_THROW(verify_puzzle(a));
    }
  }
}

TEST(Generator, DrawsWithoutReplacement) {
  const Puzzle p = generate_puzzle(config(5, 77));
  EXPECT_EQ(std::set<std::string>(p.names.begin(), p.names.end()).size(), 5u);
  EXPECT_EQ(std::set<std::string>(p.colors.begin(), p.colors.end()).size(), 5u);
  for (const auto &name : p.names) {
    EXPECT_NE(std::find(default_name_pool().begin(), default_name_pool().end(), name), default_name_pool().end());
  }
}

TEST(Generator, SeedsDiffer) {
  EXPECT_NE(generate_puzzle(config(3, 1)), generate_puzzle(config(3, 2)));
}

TEST(Generator, InvalidConfigs) {
  EXPECT_THROW(generate_puzzle(config(1, 5)), DomainError);
  EXPECT_THROW(generate_puzzle(config(7, 5)), DomainError);
  GeneratorConfig cfg = config(3, 5);
  cfg.name_pool = {"Ann", "Bob"};
  EXPECT_THROW(generate_puzzle(cfg), DomainError);
  cfg = config(2, 5);
  cfg.name_pool = {"Ann", "Ann", "Bob"};
  EXPECT_THROW(generate_puzzle(cfg), DomainError);
  cfg = config(2, 5);
  cfg.name_pool = {"Ann", "Red"};
  cfg.color_pool = {"red", "blue"};
  EXPECT_THROW(validate_config(cfg), DomainError);
  cfg = config(2, 5);
  cfg.max_attempts = 0;
  EXPECT_THROW(validate_config(cfg), DomainError);
}

TEST(AllTrueClues, MatchesVocabularyEnumeration) {
  for (int n = 2; n <= 4; ++n) {
    GeneratorConfig cfg = config(n, 40 + static_cast<std::uint64_t>(n));
    const Puzzle p = generate_puzzle(cfg);
    const Vocabulary v = p.vocabulary();
    const auto got = all_true_clues(p.solution, v);
    std::vector<Clue> expected;
    const auto es = entities(v);
    for (const auto &e : es) {
      for (End end : {End::Left, End::Right}) {
        for (const Clue &c : {Clue::at_end(e, end), Clue::not_at_end(e, end)}) {
          if (clue_satisfied(c, p.solution)) expected.push_back(c);
        }
      }
      for (const auto &o : es) {
        if (o == e) continue;
        for (const Clue &c : {Clue::right_of(e, o), Clue::left_of(e, o)}) {
          if (clue_satisfied(c, p.solution)) expected.push_back(c);
        }
      }
    }
    EXPECT_EQ(got.size(), expected.size());
    for (const auto &c : expected) EXPECT_NE(std::find(got.begin(), got.end(), c), got.end());
    for (const auto &c : got) {
      EXPECT_TRUE(clue_satisfied(c, p.solution));
      if (c.relative()) EXPECT_NE(c.subject, c.object);
    }
  }
}

TEST(AllTrueClues, ContainsExampleClue) {
  const Puzzle p = apz::testing::base_puzzle();
  const auto clues = all_true_clues(p.solution, p.vocabulary());
  EXPECT_NE(std::find(clues.begin(), clues.end(), Clue::at_end(Entity::person("Blake"), End::Right)), clues.end());
}

TEST(MinimizeClues, ExampleCluesAreBothKept) {
  const Puzzle p = apz::testing::base_puzzle();
  EXPECT_EQ(minimize_clues(p.clues, p.vocabulary()), p.clues);
  for (std::size_t drop = 0; drop < 2; ++drop) {
    std::vector<Clue> rest{p.clues[1 - drop]};
    EXPECT_EQ(count_solutions(rest, p.vocabulary()), 2);
  }
}

TEST(MinimizeClues, DuplicateIsDropped) {
  const Puzzle p = apz::testing::relative_puzzle();
  const Clue c = p.clues[0];
  EXPECT_EQ(minimize_clues(std::vector<Clue>{c, c}, p.vocabulary()), std::vector<Clue>{c});
}

TEST(MinimizeClues, SupersetShrinksToMinimalSet) {
  const Puzzle p = generate_puzzle(config(3, 2024));
  const auto all = all_true_clues(p.solution, p.vocabulary());
  const auto min = minimize_clues(all, p.vocabulary());
  EXPECT_EQ(count_solutions(min, p.vocabulary()), 1);
  for (std::size_t i = 0; i < min.size(); ++i) {
    std::vector<Clue> rest = min;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    EXPECT_GE(count_solutions(rest, p.vocabulary()), 2);
  }
  // survivors keep input order
  std::size_t cursor = 0;
  for (const auto &c : min) {
    while (cursor < all.size() && !(all[cursor] == c)) ++cursor;
    ASSERT_LT(cursor, all.size());
  }
}

TEST(MinimizeClues, RejectsNonUniqueInput) {
  const Puzzle p = apz::testing::base_puzzle();
  EXPECT_THROW(minimize_clues(std::vector<Clue>{p.clues[0]}, p.vocabulary()), DomainError);
}
