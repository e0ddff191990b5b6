#pragma once

// Puzzle equivalence under clue permutation and bijective renaming of people
// and colors, class-disjoint dataset splits, and trace-level isomorphism.

#include "apz/core.hpp"
#include "apz/solver.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace apz {

/// Text encoding of the lexicographically smallest clue multiset over all
/// renamings of names to P1..Pn and colors to C1..Cn. Equal keys iff the
/// puzzles are isomorphic. Positions are never mirrored.
std::string canonical_key(const Puzzle &puzzle);
std::string canonical_key(std::span<const Clue> clues, const Vocabulary &vocab);

enum class Split : std::uint8_t { Train, Validation, Test };

std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view text);

struct SplitAssignment {
  std::map<std::string, Split> by_id;
  std::array<int, 3> counts{};
  std::array<double, 3> targets{}; // fraction * total
};

struct KeyedPuzzle {
  std::string id;
  std::string key;
};

/// Whole isomorphism classes go to one split. Classes are taken largest
/// first (equal sizes in seeded random order), each into the split furthest
/// below its target. Throws DomainError for fewer than 3 classes or bad
/// fractions.
SplitAssignment split_dataset(std::span<const KeyedPuzzle> puzzles, std::array<double, 3> fractions,
                              std::uint64_t seed);
SplitAssignment split_dataset(std::span<const Puzzle> puzzles, std::array<double, 3> fractions, std::uint64_t seed);

struct Substitution {
  std::map<std::string, std::string> names;
  std::map<std::string, std::string> colors;

  friend bool operator==(const Substitution &, const Substitution &) = default;
};

/// Applies `sub` word by word; colors are also replaced in capitalized form.
std::string substitute(std::string_view text, const Substitution &sub);

/// The renaming under which every step text of `a` becomes the corresponding
/// step text of `b`, if there is one.
std::optional<Substitution> traces_isomorphic(const ReasoningTrace &a, const ReasoningTrace &b);

} // namespace apz
