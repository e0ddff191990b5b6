#pragma once

// The sentence template table shared by the solver (rendering) and the parser
// (recognition). docs/templates.md is the published copy of this table; keep
// the two in sync.

#include "apz/core.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace apz {

enum class StepKind : std::uint8_t {
  ClueHeader,      // "Applying clue: ..." (no claim)
  ClueApplication, // deduction read directly off the clue being applied
  Elimination,     // singleton elimination
  OnlyRemaining,   // the last candidate for a position
  Composition,     // person + color joined at a known position
  Terminal,
};

enum class TemplateId : std::uint8_t {
  ClueHeader,
  CluePersonAt,
  ClueColorAt,
  CluePersonNotAt,
  ClueColorNotAt,
  RelativePersonAt,
  RelativeColorAt,
  RelativePersonNotAt,
  RelativeColorNotAt,
  FixedPersonElsewhere,
  FixedColorElsewhere,
  OccupiedPerson,
  OccupiedColor,
  OnlyPerson,
  OnlyColor,
  ComposeByPerson,
  ComposeByColor,
  PersonWears,
  Terminal,
  FinalAnswer,
};

struct TemplateInfo {
  TemplateId id;
  std::string_view key;                 // stable identifier used in files
  StepKind kind;
  std::optional<ClaimKind> claim;       // nullopt: the sentence carries no claim
  std::string_view skeleton;
};

std::span<const TemplateInfo> template_table();
const TemplateInfo &template_info(TemplateId id);
std::optional<TemplateId> template_from_key(std::string_view key);

std::string_view to_string(StepKind kind);
std::optional<StepKind> step_kind_from_string(std::string_view text);

/// The slot values a template needs beyond the claim itself.
struct StepContext {
  TemplateId id = TemplateId::Terminal;
  int n = 2;
  std::string clue;                 // ClueHeader: rendered clue sentence
  std::optional<Entity> other;      // Relative*: the other clue entity; Occupied*: the occupant
  std::vector<int> other_positions; // Relative*: candidate positions of `other`
  int from_position = -1;           // Fixed*Elsewhere: where the subject is known to be
  std::vector<std::string> options; // Compose*: candidate colors (by person) or names (by color)
};

/// Renders one reasoning step. Composition templates render two sentences
/// (premise, then the "Therefore, ..." conclusion); only the conclusion
/// carries the claim. Throws DomainError if claim and template disagree.
std::string render_step(const Claim &claim, StepKind kind, const StepContext &context);

/// "Final answer: Ava (Color red, position left), Blake (Color pink, position right)"
/// People are listed in the order given by `names`.
std::string render_final_answer(const Arrangement &arr, std::span<const std::string> names);

} // namespace apz
