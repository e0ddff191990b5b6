#include "apz/generator.hpp"

#include "apz/rng.hpp"
#include "apz/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>

namespace apz {

const std::vector<std::string> &default_name_pool() {
  static const std::vector<std::string> pool = {
      "Aaron", "Abigail", "Alice",  "Andrew", "Ava",   "Bella",  "Blake",  "Caleb", "Chloe",
      "Daniel", "Dylan",  "Elena",  "Ethan",  "Fiona", "Gavin",  "Grace",  "Hannah", "Isaac",
      "Jack",  "Julia",   "Kevin",  "Laura",  "Liam",  "Maya",   "Nathan", "Nora",  "Oliver",
      "Paige", "Quinn",   "Ryan",   "Sophie", "Tyler", "Uma",    "Victor", "Wendy", "Zoe",
  };
  return pool;
}

const std::vector<std::string> &default_color_pool() {
  static const std::vector<std::string> pool = {
      "red",   "pink",   "mint",   "lilac", "chocolate", "blue",  "green",  "yellow",
      "orange", "purple", "teal",  "beige", "gray",      "navy",  "maroon", "olive",
      "coral", "cyan",   "gold",   "silver", "white",    "black", "brown",  "ivory",
  };
  return pool;
}

namespace {

bool is_name_word(const std::string &s) {
  if (s.empty() || !std::isupper(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c); });
}

bool is_color_word(const std::string &s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::islower(c); });
}

} // namespace

void validate_config(const GeneratorConfig &cfg) {
  if (cfg.n < 2 || cfg.n > kMaxOracleN) {
    throw DomainError("n must be in [2, " + std::to_string(kMaxOracleN) + "], got " + std::to_string(cfg.n));
  }
  if (cfg.max_attempts <= 0) {
    throw DomainError("max_attempts must be positive");
  }
  auto check_pool = [&](const std::vector<std::string> &pool, const char *what, bool (*word)(const std::string &)) {
    if (static_cast<int>(pool.size()) < cfg.n) {
      throw DomainError(std::string(what) + " pool has fewer than n entries");
    }
    if (std::set<std::string>(pool.begin(), pool.end()).size() != pool.size()) {
      throw DomainError(std::string(what) + " pool contains duplicates");
    }
    for (const auto &entry : pool) {
      if (!word(entry)) throw DomainError(std::string(what) + " pool entry '" + entry + "' is not a plain word");
    }
  };
  check_pool(cfg.name_pool, "name", is_name_word);
  check_pool(cfg.color_pool, "color", is_color_word);
  for (const auto &color : cfg.color_pool) {
    if (std::find(cfg.name_pool.begin(), cfg.name_pool.end(), capitalize_first(color)) != cfg.name_pool.end()) {
      throw DomainError("color '" + color + "' collides with a name when capitalized");
    }
  }
}

std::vector<Clue> all_true_clues(const Arrangement &arr, const Vocabulary &vocab) {
  std::vector<Entity> entities;
  for (const auto &name : vocab.names) entities.push_back(Entity::person(name));
  for (const auto &color : vocab.colors) entities.push_back(Entity::wearer(color));

  std::vector<Clue> clues;
  auto keep = [&](Clue c) {
    if (clue_satisfied(c, arr)) clues.push_back(std::move(c));
  };
  for (const auto &e : entities) {
    keep(Clue::at_end(e, End::Left));
    keep(Clue::at_end(e, End::Right));
  }
  for (const auto &e : entities) {
    keep(Clue::not_at_end(e, End::Left));
    keep(Clue::not_at_end(e, End::Right));
  }
  for (const auto &a : entities) {
    for (const auto &b : entities) {
      if (a != b) keep(Clue::right_of(a, b));
    }
  }
  for (const auto &a : entities) {
    for (const auto &b : entities) {
      if (a != b) keep(Clue::left_of(a, b));
    }
  }
  return clues;
}

std::vector<Clue> minimize_clues(std::span<const Clue> clues, const Vocabulary &vocab,
                                 std::optional<std::span<const std::size_t>> removal_order) {
  if (count_solutions(clues, vocab) != 1) {
    throw DomainError("minimize_clues requires a clue set with exactly one solution");
  }
  std::vector<std::size_t> order(clues.size());
  if (removal_order) {
    if (removal_order->size() != clues.size()) {
      throw DomainError("removal order length does not match the clue count");
    }
    order.assign(removal_order->begin(), removal_order->end());
  } else {
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<bool> kept(clues.size(), true);
  std::vector<Clue> trial;
  for (std::size_t victim : order) {
    if (victim >= clues.size() || !kept[victim]) {
      throw DomainError("removal order is not a permutation of clue indices");
    }
    trial.clear();
    for (std::size_t i = 0; i < clues.size(); ++i) {
      if (kept[i] && i != victim) trial.push_back(clues[i]);
    }
    if (find_solutions(trial, vocab, 2).size() == 1) {
      kept[victim] = false;
    }
  }
  std::vector<Clue> result;
  for (std::size_t i = 0; i < clues.size(); ++i) {
    if (kept[i]) result.push_back(clues[i]);
  }
  return result;
}

namespace {

std::vector<std::string> draw(Rng &rng, const std::vector<std::string> &pool, int count) {
  std::vector<std::string> items = pool;
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (int i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

std::string seed_id(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "puzzle-%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

} // namespace

Puzzle generate_puzzle(const GeneratorConfig &cfg) {
  validate_config(cfg);
  Rng rng(cfg.seed);
  const int n = cfg.n;

  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    Puzzle puzzle;
    puzzle.id = cfg.id.empty() ? seed_id(cfg.seed) : cfg.id;
    puzzle.n = n;
    puzzle.names = draw(rng, cfg.name_pool, n);
    std::sort(puzzle.names.begin(), puzzle.names.end());
    puzzle.colors = draw(rng, cfg.color_pool, n);

    puzzle.solution.person_at = puzzle.names;
    puzzle.solution.color_at = puzzle.colors;
    rng.shuffle(puzzle.solution.person_at);
    rng.shuffle(puzzle.solution.color_at);

    const Vocabulary vocab = puzzle.vocabulary();
    std::vector<Clue> pool = all_true_clues(puzzle.solution, vocab);
    rng.shuffle(pool);

    std::vector<Clue> chosen;
    std::int64_t count = count_solutions(chosen, vocab);
    for (const Clue &clue : pool) {
      if (count == 1) break;
      chosen.push_back(clue);
      const std::int64_t next = count_solutions(chosen, vocab);
      if (next == count) {
        chosen.pop_back();
      } else {
        count = next;
      }
    }
    if (count != 1) {
      throw DomainError("true-clue pool does not determine the arrangement");
    }

    std::vector<std::size_t> order(chosen.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    puzzle.clues = minimize_clues(chosen, vocab, std::span<const std::size_t>(order));

    try {
      solve_with_trace(puzzle);
    } catch (const SolveError &) {
      continue;
    }
    return puzzle;
  }
  throw GenerationError("no propagation-solvable minimal puzzle found after " + std::to_string(cfg.max_attempts) +
                            " attempts",
                        cfg.max_attempts);
}

} // namespace apz
