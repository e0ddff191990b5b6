#pragma once

#include "apz/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apz {

struct GeneratorConfig {
  int n = 2;
  std::vector<std::string> name_pool;
  std::vector<std::string> color_pool;
  std::uint64_t seed = 0;
  int max_attempts = 200;
  /// Id stamped on the puzzle; empty means "puzzle-<seed in hex>".
  std::string id;
};

/// Thrown when no acceptable puzzle was found within max_attempts.
class GenerationError : public std::runtime_error {
public:
  GenerationError(const std::string &what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

private:
  int attempts_;
};

/// Built-in vocabularies. Names are capitalized single words, colors are
/// lower-case single words, and no name equals a capitalized color.
const std::vector<std::string> &default_name_pool();
const std::vector<std::string> &default_color_pool();

/// Throws DomainError on an invalid configuration.
void validate_config(const GeneratorConfig &cfg);

/// Every clue of the fixed vocabulary that `arr` satisfies, in canonical order:
/// AtEnd, NotAtEnd, SomewhereRightOf, SomewhereLeftOf; people (in seat order
/// of `names`) before color wearers; Left before Right.
std::vector<Clue> all_true_clues(const Arrangement &arr, const Vocabulary &vocab);

/// Drops clues one at a time (in `removal_order`, default input order) while
/// the oracle count stays 1. The survivors keep their input order and each is
/// necessary. Throws DomainError if the input does not have exactly one
/// solution.
std::vector<Clue> minimize_clues(std::span<const Clue> clues, const Vocabulary &vocab,
                                 std::optional<std::span<const std::size_t>> removal_order = std::nullopt);

/// Random puzzle with a unique solution, no redundant clue, and a complete
/// propagation trace. Bit-identical output for identical configs.
Puzzle generate_puzzle(const GeneratorConfig &cfg);

} // namespace apz
