#pragma once

// Domain vocabulary for arrangement puzzles: n people sit in a row of n
// chairs, each wearing a distinct shirt color. Position 0 is the far left,
// position n-1 the far right.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apz {

/// Largest n the exhaustive oracle accepts ((6!)^2 = 518,400 arrangements).
inline constexpr int kMaxOracleN = 6;

class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class EntityKind : std::uint8_t { Person, ColorWearer };

/// Either a named person or "the person wearing <color>".
struct Entity {
  EntityKind kind = EntityKind::Person;
  std::string value;

  static Entity person(std::string name) { return {EntityKind::Person, std::move(name)}; }
  static Entity wearer(std::string color) { return {EntityKind::ColorWearer, std::move(color)}; }

  friend bool operator==(const Entity &, const Entity &) = default;
  friend auto operator<=>(const Entity &, const Entity &) = default;
};

enum class End : std::uint8_t { Left, Right };

enum class ClueKind : std::uint8_t { AtEnd, NotAtEnd, SomewhereRightOf, SomewhereLeftOf };

/// One constraint. For AtEnd/NotAtEnd only `subject` and `end` are used; for
/// the relative kinds `subject` is to the right (left) of `object`.
struct Clue {
  ClueKind kind = ClueKind::AtEnd;
  Entity subject;
  Entity object;
  End end = End::Left;

  static Clue at_end(Entity e, End end) { return {ClueKind::AtEnd, std::move(e), {}, end}; }
  static Clue not_at_end(Entity e, End end) { return {ClueKind::NotAtEnd, std::move(e), {}, end}; }
  static Clue right_of(Entity a, Entity b) { return {ClueKind::SomewhereRightOf, std::move(a), std::move(b), End::Left}; }
  static Clue left_of(Entity a, Entity b) { return {ClueKind::SomewhereLeftOf, std::move(a), std::move(b), End::Left}; }

  bool relative() const {
    return kind == ClueKind::SomewhereRightOf || kind == ClueKind::SomewhereLeftOf;
  }

  friend bool operator==(const Clue &, const Clue &) = default;
};

/// A complete assignment of people and colors to positions.
struct Arrangement {
  std::vector<std::string> person_at;
  std::vector<std::string> color_at;

  int size() const { return static_cast<int>(person_at.size()); }
  int position_of_person(const std::string &name) const;
  int position_of_color(const std::string &color) const;

  friend bool operator==(const Arrangement &, const Arrangement &) = default;
};

enum class ClaimKind : std::uint8_t {
  PersonAt,
  PersonNotAt,
  ColorAt,
  ColorNotAt,
  PersonWears,
  PersonWearsAt,
  Done,
  FinalAnswer,
};

/// An atomic, checkable assertion about the arrangement. Fields not used by
/// `kind` stay empty (-1 for position).
struct Claim {
  ClaimKind kind = ClaimKind::Done;
  std::string name;
  std::string color;
  int position = -1;
  std::optional<Arrangement> answer;

  static Claim person_at(std::string n, int p) { return {ClaimKind::PersonAt, std::move(n), {}, p, {}}; }
  static Claim person_not_at(std::string n, int p) { return {ClaimKind::PersonNotAt, std::move(n), {}, p, {}}; }
  static Claim color_at(std::string c, int p) { return {ClaimKind::ColorAt, {}, std::move(c), p, {}}; }
  static Claim color_not_at(std::string c, int p) { return {ClaimKind::ColorNotAt, {}, std::move(c), p, {}}; }
  static Claim person_wears(std::string n, std::string c) { return {ClaimKind::PersonWears, std::move(n), std::move(c), -1, {}}; }
  static Claim person_wears_at(std::string n, std::string c, int p) {
    return {ClaimKind::PersonWearsAt, std::move(n), std::move(c), p, {}};
  }
  static Claim done() { return {}; }
  static Claim final_answer(Arrangement a) { return {ClaimKind::FinalAnswer, {}, {}, -1, std::move(a)}; }

  friend bool operator==(const Claim &, const Claim &) = default;
};

/// The names, colors and seat count a puzzle (or a parser) works over.
struct Vocabulary {
  int n = 0;
  std::vector<std::string> names;
  std::vector<std::string> colors;

  int name_index(const std::string &name) const;   // -1 if absent
  int color_index(const std::string &color) const; // -1 if absent
  bool contains(const Entity &e) const;
};

struct Puzzle {
  std::string id;
  int n = 0;
  std::vector<std::string> names;
  std::vector<std::string> colors;
  std::vector<Clue> clues;
  Arrangement solution;

  Vocabulary vocabulary() const { return {n, names, colors}; }

  friend bool operator==(const Puzzle &, const Puzzle &) = default;
};

// ---------------------------------------------------------------------------
// Position naming: n = 2 uses "left"/"right"; larger n uses "1".."n".

std::string position_name(int position, int n);
/// Inverse of position_name; nullopt for anything else.
std::optional<int> parse_position(std::string_view text, int n);

// ---------------------------------------------------------------------------
// Semantics.

/// Throws DomainError if the arrangement is not a pair of bijections onto the
/// vocabulary's names and colors.
void validate_arrangement(const Arrangement &arr, const Vocabulary &vocab);

/// Truth of a clue under an arrangement. Relative clues compare position
/// indices strictly, at any distance.
bool clue_satisfied(const Clue &clue, const Arrangement &arr);

/// Truth of a claim under an arrangement. Done holds vacuously; FinalAnswer
/// holds iff its arrangement equals `arr`.
bool claim_holds(const Claim &claim, const Arrangement &arr);

/// Exact number of arrangements over (names, colors) satisfying every clue.
/// Refuses n outside [2, kMaxOracleN].
std::int64_t count_solutions(std::span<const Clue> clues, const Vocabulary &vocab);

/// Enumerates satisfying arrangements, stopping after `limit` of them.
std::vector<Arrangement> find_solutions(std::span<const Clue> clues, const Vocabulary &vocab,
                                        std::size_t limit = SIZE_MAX);

/// Checks every Puzzle invariant (vocabulary, solution validity, uniqueness
/// and single-removal minimality) against the oracle. Throws DomainError.
void verify_puzzle(const Puzzle &puzzle);

// ---------------------------------------------------------------------------
// Natural-language rendering of puzzle statements.

/// "Ava" or "the person wearing pink"; `capitalize` upper-cases the first letter.
std::string describe(const Entity &e, bool capitalize = false);

/// "Blake is sitting on the far right." etc.
std::string clue_text(const Clue &clue);

/// "a and b" / "a, b and c"
std::string join_and(std::span<const std::string> items);
/// "a or b" / "a, b or c"
std::string join_or(std::span<const std::string> items);

std::string capitalize_first(std::string s);

/// Puzzle statement: setting sentences, then "Clues:" with one clue per line.
std::string puzzle_text(const Puzzle &puzzle);

} // namespace apz
