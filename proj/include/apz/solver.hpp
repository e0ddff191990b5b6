#pragma once

#include "apz/core.hpp"
#include "apz/templates.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace apz {

class SolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Some entity or position ran out of candidates.
class ContradictionError : public SolveError {
public:
  using SolveError::SolveError;
};

/// A full pass over the clues changed nothing and the puzzle is not solved.
class StallError : public SolveError {
public:
  using SolveError::SolveError;
};

/// Candidate sets for a puzzle of size n, each stored row-major as n x n bytes.
///
/// person_pos[i][q]: person i may sit at position q.
/// color_pos[j][q]:  color j may be worn at position q.
/// The person/color relation is kept from both sides: person_colors[i][j] is
/// narrowed when a person's color is composed, color_persons[j][i] when a
/// color's wearer is composed. Their conjunction is the person_color matrix.
class PossibilityState {
public:
  explicit PossibilityState(int n);

  int n() const { return n_; }

  bool person_pos(int person, int pos) const { return person_pos_[at(person, pos)] != 0; }
  bool color_pos(int color, int pos) const { return color_pos_[at(color, pos)] != 0; }
  bool person_color(int person, int color) const {
    return person_colors_[at(person, color)] != 0 && color_persons_[at(color, person)] != 0;
  }

  /// Live cell counts of (person_pos, color_pos, person_color).
  std::array<int, 3> live_cells() const;

  /// True iff all three matrices are permutation matrices.
  bool solved() const;

private:
  friend class Propagator;
  std::size_t at(int row, int col) const { return static_cast<std::size_t>(row * n_ + col); }

  int n_;
  std::vector<std::uint8_t> person_pos_;
  std::vector<std::uint8_t> color_pos_;
  std::vector<std::uint8_t> person_colors_;
  std::vector<std::uint8_t> color_persons_;
};

struct ReasoningStep {
  int index = 0;
  StepKind kind = StepKind::Terminal;
  TemplateId template_id = TemplateId::Terminal;
  std::string text;
  /// Absent only for ClueHeader steps.
  std::optional<Claim> claim;
  StepContext context;
  /// PossibilityState::live_cells() after the step.
  std::array<int, 3> live_cells{};

  friend bool operator==(const ReasoningStep &a, const ReasoningStep &b) {
    return a.index == b.index && a.kind == b.kind && a.template_id == b.template_id && a.text == b.text &&
           a.claim == b.claim;
  }
};

struct ReasoningTrace {
  std::string puzzle_id;
  int n = 0;
  std::vector<std::string> names;
  std::vector<std::string> colors;
  std::vector<ReasoningStep> steps;
  Arrangement final;

  friend bool operator==(const ReasoningTrace &, const ReasoningTrace &) = default;
};

/// Deterministic propagation solve. Clues are applied in listed order; after
/// each clue that changes anything, propagation runs to a fixpoint (people,
/// then colors, then compositions by position). Passes over the clue list
/// repeat until solved. Throws StallError or ContradictionError.
ReasoningTrace solve_with_trace(const Puzzle &puzzle);

/// One reasoning line per step, then the final-answer line. Character ranges
/// of every line (end exclusive, no newline) are written to `line_spans`.
struct TraceDocument {
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> line_spans;
};
TraceDocument render_trace_document(const ReasoningTrace &trace);

} // namespace apz
