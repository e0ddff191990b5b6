#include "apz/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <set>

namespace apz {

int Arrangement::position_of_person(const std::string &name) const {
  auto it = std::find(person_at.begin(), person_at.end(), name);
  return it == person_at.end() ? -1 : static_cast<int>(it - person_at.begin());
}

int Arrangement::position_of_color(const std::string &color) const {
  auto it = std::find(color_at.begin(), color_at.end(), color);
  return it == color_at.end() ? -1 : static_cast<int>(it - color_at.begin());
}

int Vocabulary::name_index(const std::string &name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

int Vocabulary::color_index(const std::string &color) const {
  auto it = std::find(colors.begin(), colors.end(), color);
  return it == colors.end() ? -1 : static_cast<int>(it - colors.begin());
}

bool Vocabulary::contains(const Entity &e) const {
  return e.kind == EntityKind::Person ? name_index(e.value) >= 0 : color_index(e.value) >= 0;
}

std::string position_name(int position, int n) {
  if (position < 0 || position >= n) {
    throw DomainError("position " + std::to_string(position) + " out of range for n=" + std::to_string(n));
  }
  if (n == 2) {
    return position == 0 ? "left" : "right";
  }
  return std::to_string(position + 1);
}

std::optional<int> parse_position(std::string_view text, int n) {
  if (n == 2) {
    if (text == "left") return 0;
    if (text == "right") return 1;
    return std::nullopt;
  }
  if (text.empty() || text.size() > 2 || text[0] == '0') {
    return std::nullopt;
  }
  int value = 0;
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + (c - '0');
  }
  if (value < 1 || value > n) return std::nullopt;
  return value - 1;
}

void validate_arrangement(const Arrangement &arr, const Vocabulary &vocab) {
  const auto n = static_cast<std::size_t>(vocab.n);
  if (arr.person_at.size() != n || arr.color_at.size() != n) {
    throw DomainError("arrangement size does not match n=" + std::to_string(vocab.n));
  }
  std::set<std::string> people(arr.person_at.begin(), arr.person_at.end());
  std::set<std::string> colors(arr.color_at.begin(), arr.color_at.end());
  if (people != std::set<std::string>(vocab.names.begin(), vocab.names.end())) {
    throw DomainError("arrangement people are not a bijection onto the names");
  }
  if (colors != std::set<std::string>(vocab.colors.begin(), vocab.colors.end())) {
    throw DomainError("arrangement colors are not a bijection onto the colors");
  }
}

namespace {

int entity_position(const Entity &e, const Arrangement &arr) {
  const int pos = e.kind == EntityKind::Person ? arr.position_of_person(e.value)
                                               : arr.position_of_color(e.value);
  if (pos < 0) {
    throw DomainError("unknown " + std::string(e.kind == EntityKind::Person ? "name" : "color") +
                      " '" + e.value + "'");
  }
  return pos;
}

int require_position(int pos, int n) {
  if (pos < 0 || pos >= n) {
    throw DomainError("claim position " + std::to_string(pos) + " out of range");
  }
  return pos;
}

// Index form of a clue for the enumeration loop: entity = (is_color, index).
struct IndexedClue {
  ClueKind kind;
  bool a_color;
  int a;
  bool b_color;
  int b;
  End end;
};

IndexedClue index_clue(const Clue &clue, const Vocabulary &vocab) {
  auto lookup = [&](const Entity &e) {
    const int idx = e.kind == EntityKind::Person ? vocab.name_index(e.value) : vocab.color_index(e.value);
    if (idx < 0) {
      throw DomainError("clue references unknown " +
                        std::string(e.kind == EntityKind::Person ? "name" : "color") + " '" + e.value + "'");
    }
    return idx;
  };
  IndexedClue ic{clue.kind, clue.subject.kind == EntityKind::ColorWearer, lookup(clue.subject), false, 0, clue.end};
  if (clue.relative()) {
    ic.b_color = clue.object.kind == EntityKind::ColorWearer;
    ic.b = lookup(clue.object);
  }
  return ic;
}

bool indexed_satisfied(const IndexedClue &c, std::span<const int> person_pos, std::span<const int> color_pos,
                       int n) {
  const int pa = c.a_color ? color_pos[c.a] : person_pos[c.a];
  switch (c.kind) {
  case ClueKind::AtEnd:
    return pa == (c.end == End::Left ? 0 : n - 1);
  case ClueKind::NotAtEnd:
    return pa != (c.end == End::Left ? 0 : n - 1);
  case ClueKind::SomewhereRightOf:
    return pa > (c.b_color ? color_pos[c.b] : person_pos[c.b]);
  case ClueKind::SomewhereLeftOf:
    return pa < (c.b_color ? color_pos[c.b] : person_pos[c.b]);
  }
  return false;
}

void check_oracle_size(const Vocabulary &vocab) {
  if (vocab.n < 2 || vocab.n > kMaxOracleN) {
    throw DomainError("exhaustive oracle supports 2 <= n <= " + std::to_string(kMaxOracleN) +
                      ", got n=" + std::to_string(vocab.n));
  }
  if (static_cast<int>(vocab.names.size()) != vocab.n || static_cast<int>(vocab.colors.size()) != vocab.n) {
    throw DomainError("vocabulary size does not match n");
  }
}

template <typename Visit>
void enumerate(std::span<const Clue> clues, const Vocabulary &vocab, Visit &&visit) {
  check_oracle_size(vocab);
  const int n = vocab.n;
  std::vector<IndexedClue> person_only;
  std::vector<IndexedClue> rest;
  for (const Clue &clue : clues) {
    IndexedClue ic = index_clue(clue, vocab);
    const bool colors = ic.a_color || (clue.relative() && ic.b_color);
    (colors ? rest : person_only).push_back(ic);
  }
  std::vector<int> person_pos(n);
  std::vector<int> color_pos(n);
  std::iota(person_pos.begin(), person_pos.end(), 0);
  do {
    bool ok = std::all_of(person_only.begin(), person_only.end(),
                          [&](const IndexedClue &c) { return indexed_satisfied(c, person_pos, color_pos, n); });
    if (!ok) continue;
    std::iota(color_pos.begin(), color_pos.end(), 0);
    do {
      if (std::all_of(rest.begin(), rest.end(),
                      [&](const IndexedClue &c) { return indexed_satisfied(c, person_pos, color_pos, n); })) {
        if (!visit(person_pos, color_pos)) return;
      }
    } while (std::next_permutation(color_pos.begin(), color_pos.end()));
  } while (std::next_permutation(person_pos.begin(), person_pos.end()));
}

} // namespace

bool clue_satisfied(const Clue &clue, const Arrangement &arr) {
  const int n = arr.size();
  const int pa = entity_position(clue.subject, arr);
  switch (clue.kind) {
  case ClueKind::AtEnd:
    return pa == (clue.end == End::Left ? 0 : n - 1);
  case ClueKind::NotAtEnd:
    return pa != (clue.end == End::Left ? 0 : n - 1);
  case ClueKind::SomewhereRightOf:
    return pa > entity_position(clue.object, arr);
  case ClueKind::SomewhereLeftOf:
    return pa < entity_position(clue.object, arr);
  }
  return false;
}

bool claim_holds(const Claim &claim, const Arrangement &arr) {
  const int n = arr.size();
  auto person = [&] {
    const int p = arr.position_of_person(claim.name);
    if (p < 0) throw DomainError("unknown name '" + claim.name + "'");
    return p;
  };
  auto color = [&] {
    const int p = arr.position_of_color(claim.color);
    if (p < 0) throw DomainError("unknown color '" + claim.color + "'");
    return p;
  };
  switch (claim.kind) {
  case ClaimKind::PersonAt:
    return person() == require_position(claim.position, n);
  case ClaimKind::PersonNotAt:
    return person() != require_position(claim.position, n);
  case ClaimKind::ColorAt:
    return color() == require_position(claim.position, n);
  case ClaimKind::ColorNotAt:
    return color() != require_position(claim.position, n);
  case ClaimKind::PersonWears:
    return person() == color();
  case ClaimKind::PersonWearsAt: {
    const int pos = require_position(claim.position, n);
    const int pp = person();
    const int cp = color();
    return pp == pos && cp == pos;
  }
  case ClaimKind::Done:
    return true;
  case ClaimKind::FinalAnswer:
    return claim.answer.has_value() && *claim.answer == arr;
  }
  return false;
}

std::int64_t count_solutions(std::span<const Clue> clues, const Vocabulary &vocab) {
  std::int64_t count = 0;
  enumerate(clues, vocab, [&](std::span<const int>, std::span<const int>) {
    ++count;
    return true;
  });
  return count;
}

std::vector<Arrangement> find_solutions(std::span<const Clue> clues, const Vocabulary &vocab, std::size_t limit) {
  std::vector<Arrangement> found;
  if (limit == 0) return found;
  enumerate(clues, vocab, [&](std::span<const int> person_pos, std::span<const int> color_pos) {
    Arrangement arr;
    arr.person_at.resize(vocab.n);
    arr.color_at.resize(vocab.n);
    for (int i = 0; i < vocab.n; ++i) {
      arr.person_at[person_pos[i]] = vocab.names[i];
      arr.color_at[color_pos[i]] = vocab.colors[i];
    }
    found.push_back(std::move(arr));
    return found.size() < limit;
  });
  return found;
}

void verify_puzzle(const Puzzle &puzzle) {
  const Vocabulary vocab = puzzle.vocabulary();
  check_oracle_size(vocab);
  if (std::set<std::string>(puzzle.names.begin(), puzzle.names.end()).size() != puzzle.names.size()) {
    throw DomainError(puzzle.id + ": names are not pairwise distinct");
  }
  if (std::set<std::string>(puzzle.colors.begin(), puzzle.colors.end()).size() != puzzle.colors.size()) {
    throw DomainError(puzzle.id + ": colors are not pairwise distinct");
  }
  validate_arrangement(puzzle.solution, vocab);
  for (const Clue &clue : puzzle.clues) {
    if (clue.relative() && clue.subject == clue.object) {
      throw DomainError(puzzle.id + ": relative clue relates an entity to itself");
    }
    if (!clue_satisfied(clue, puzzle.solution)) {
      throw DomainError(puzzle.id + ": solution violates clue '" + clue_text(clue) + "'");
    }
  }
  const auto solutions = find_solutions(puzzle.clues, vocab, 2);
  if (solutions.size() != 1) {
    throw DomainError(puzzle.id + ": clues admit " + std::to_string(count_solutions(puzzle.clues, vocab)) +
                      " solutions, expected 1");
  }
  if (!(solutions.front() == puzzle.solution)) {
    throw DomainError(puzzle.id + ": recorded solution differs from the unique solution");
  }
  for (std::size_t skip = 0; skip < puzzle.clues.size(); ++skip) {
    std::vector<Clue> reduced;
    for (std::size_t i = 0; i < puzzle.clues.size(); ++i) {
      if (i != skip) reduced.push_back(puzzle.clues[i]);
    }
    if (find_solutions(reduced, vocab, 2).size() < 2) {
      throw DomainError(puzzle.id + ": clue '" + clue_text(puzzle.clues[skip]) + "' is redundant");
    }
  }
}

std::string capitalize_first(std::string s) {
  if (!s.empty()) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  }
  return s;
}

std::string describe(const Entity &e, bool capitalize) {
  std::string text = e.kind == EntityKind::Person ? e.value : "the person wearing " + e.value;
  return capitalize ? capitalize_first(std::move(text)) : text;
}

std::string clue_text(const Clue &clue) {
  const std::string subject = describe(clue.subject, true);
  const char *end = clue.end == End::Left ? "left" : "right";
  switch (clue.kind) {
  case ClueKind::AtEnd:
    return subject + " is sitting on the far " + end + ".";
  case ClueKind::NotAtEnd:
    return subject + " is not sitting on the far " + end + ".";
  case ClueKind::SomewhereRightOf:
    return subject + " is somewhere to the right of " + describe(clue.object) + ".";
  case ClueKind::SomewhereLeftOf:
    return subject + " is somewhere to the left of " + describe(clue.object) + ".";
  }
  return {};
}

namespace {

std::string join_with(std::span<const std::string> items, const char *last) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? last : ", ";
    out += items[i];
  }
  return out;
}

} // namespace

std::string join_and(std::span<const std::string> items) { return join_with(items, " and "); }
std::string join_or(std::span<const std::string> items) { return join_with(items, " or "); }

std::string puzzle_text(const Puzzle &puzzle) {
  std::string text = join_and(puzzle.names) + " are sitting in a row on " + std::to_string(puzzle.n) +
                     " chairs. They are wearing shirts with colors " + join_and(puzzle.colors) +
                     ". Each of them is wearing a different color.\n\nClues:\n";
  for (const Clue &clue : puzzle.clues) {
    text += clue_text(clue);
    text += '\n';
  }
  return text;
}

} // namespace apz
