#pragma once

// The three two-person example puzzles used throughout the test suite.

#include "apz/core.hpp"

namespace apz::testing {

/// Ava and Blake, colors red and pink.
inline Puzzle base_puzzle() {
  Puzzle p;
  p.id = "ex-base";
  p.n = 2;
  p.names = {"Ava", "Blake"};
  p.colors = {"red", "pink"};
  p.clues = {Clue::not_at_end(Entity::wearer("pink"), End::Left), Clue::at_end(Entity::person("Blake"), End::Right)};
  p.solution = {{"Ava", "Blake"}, {"red", "pink"}};
  return p;
}

/// Andrew and Bella, colors mint and chocolate; isomorphic to base_puzzle.
inline Puzzle isomorphic_puzzle() {
  Puzzle p;
  p.id = "ex-isomorphic";
  p.n = 2;
  p.names = {"Andrew", "Bella"};
  p.colors = {"mint", "chocolate"};
  p.clues = {Clue::not_at_end(Entity::wearer("chocolate"), End::Left),
             Clue::at_end(Entity::person("Bella"), End::Right)};
  p.solution = {{"Andrew", "Bella"}, {"mint", "chocolate"}};
  return p;
}

/// Aaron and Blake, colors mint and lilac; one relative clue.
inline Puzzle relative_puzzle() {
  Puzzle p;
  p.id = "ex-relative";
  p.n = 2;
  p.names = {"Aaron", "Blake"};
  p.colors = {"mint", "lilac"};
  p.clues = {Clue::right_of(Entity::person("Blake"), Entity::wearer("mint"))};
  p.solution = {{"Aaron", "Blake"}, {"mint", "lilac"}};
  return p;
}

} // namespace apz::testing
