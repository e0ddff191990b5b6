#include "apz/solver.hpp"

#include <algorithm>

namespace apz {

PossibilityState::PossibilityState(int n)
    : n_(n), person_pos_(n * n, 1), color_pos_(n * n, 1), person_colors_(n * n, 1), color_persons_(n * n, 1) {}

std::array<int, 3> PossibilityState::live_cells() const {
  std::array<int, 3> counts{};
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) {
      counts[0] += person_pos(r, c);
      counts[1] += color_pos(r, c);
      counts[2] += person_color(r, c);
    }
  }
  return counts;
}

bool PossibilityState::solved() const {
  auto permutation = [&](auto cell) {
    for (int r = 0; r < n_; ++r) {
      int row = 0;
      int col = 0;
      for (int c = 0; c < n_; ++c) {
        row += cell(r, c);
        col += cell(c, r);
      }
      if (row != 1 || col != 1) return false;
    }
    return true;
  };
  return permutation([&](int r, int c) { return person_pos(r, c); }) &&
         permutation([&](int r, int c) { return color_pos(r, c); }) &&
         permutation([&](int r, int c) { return person_color(r, c); });
}

class Propagator {
public:
  explicit Propagator(const Puzzle &puzzle)
      : puzzle_(puzzle), vocab_(puzzle.vocabulary()), n_(puzzle.n), state_(puzzle.n),
        handled_(2, std::vector<bool>(puzzle.n, false)), person_composed_(puzzle.n, false),
        color_composed_(puzzle.n, false) {}

  ReasoningTrace run() {
    if (n_ < 2) throw DomainError("puzzle needs at least two people");
    ReasoningTrace trace;
    trace.puzzle_id = puzzle_.id;
    trace.n = n_;
    trace.names = puzzle_.names;
    trace.colors = puzzle_.colors;

    while (!complete()) {
      bool progress = false;
      for (const Clue &clue : puzzle_.clues) {
        const auto before = state_.live_cells();
        std::vector<ReasoningStep> deductions = apply_clue(clue);
        if (deductions.empty()) continue;
        progress = true;
        StepContext header;
        header.id = TemplateId::ClueHeader;
        header.n = n_;
        header.clue = clue_text(clue);
        push(StepKind::ClueHeader, std::nullopt, header);
        steps_.back().live_cells = before;
        for (auto &step : deductions) {
          step.index = static_cast<int>(steps_.size());
          steps_.push_back(std::move(step));
        }
        propagate();
        if (complete()) break;
      }
      if (!complete() && !progress) {
        throw StallError(puzzle_.id + ": propagation stalled with " + std::to_string(state_.live_cells()[0]) +
                         " person and " + std::to_string(state_.live_cells()[1]) + " color placements open");
      }
    }
    StepContext terminal;
    terminal.id = TemplateId::Terminal;
    terminal.n = n_;
    push(StepKind::Terminal, Claim::done(), terminal);

    trace.final.person_at.resize(n_);
    trace.final.color_at.resize(n_);
    for (int q = 0; q < n_; ++q) {
      for (int i = 0; i < n_; ++i) {
        if (state_.person_pos(i, q)) trace.final.person_at[q] = puzzle_.names[i];
        if (state_.color_pos(i, q)) trace.final.color_at[q] = puzzle_.colors[i];
      }
    }
    trace.steps = std::move(steps_);
    return trace;
  }

private:
  using Matrix = std::vector<std::uint8_t>;

  enum Side { kPeople = 0, kColors = 1 };

  bool complete() const {
    return std::all_of(person_composed_.begin(), person_composed_.end(), [](bool b) { return b; }) &&
           std::all_of(color_composed_.begin(), color_composed_.end(), [](bool b) { return b; });
  }

  Matrix &matrix(Side side) { return side == kPeople ? state_.person_pos_ : state_.color_pos_; }
  Entity entity(Side side, int idx) const {
    return side == kPeople ? Entity::person(puzzle_.names[idx]) : Entity::wearer(puzzle_.colors[idx]);
  }
  std::size_t at(int r, int c) const { return static_cast<std::size_t>(r * n_ + c); }

  std::vector<int> candidates(Side side, int idx) {
    std::vector<int> out;
    const Matrix &m = matrix(side);
    for (int q = 0; q < n_; ++q) {
      if (m[at(idx, q)]) out.push_back(q);
    }
    return out;
  }

  std::vector<int> occupants(Side side, int pos) {
    std::vector<int> out;
    const Matrix &m = matrix(side);
    for (int i = 0; i < n_; ++i) {
      if (m[at(i, pos)]) out.push_back(i);
    }
    return out;
  }

  Claim at_claim(Side side, int idx, int pos) const {
    return side == kPeople ? Claim::person_at(puzzle_.names[idx], pos) : Claim::color_at(puzzle_.colors[idx], pos);
  }
  Claim not_at_claim(Side side, int idx, int pos) const {
    return side == kPeople ? Claim::person_not_at(puzzle_.names[idx], pos)
                           : Claim::color_not_at(puzzle_.colors[idx], pos);
  }

  ReasoningStep make_step(StepKind kind, std::optional<Claim> claim, StepContext ctx) {
    ReasoningStep step;
    step.kind = kind;
    step.template_id = ctx.id;
    step.text = render_step(claim ? *claim : Claim::done(), kind, ctx);
    step.claim = std::move(claim);
    step.context = std::move(ctx);
    step.live_cells = state_.live_cells();
    return step;
  }

  void push(StepKind kind, std::optional<Claim> claim, StepContext ctx) {
    ReasoningStep step = make_step(kind, std::move(claim), std::move(ctx));
    step.index = static_cast<int>(steps_.size());
    steps_.push_back(std::move(step));
  }

  void check_consistent(Side side) {
    const Matrix &m = matrix(side);
    for (int i = 0; i < n_; ++i) {
      bool row = false;
      bool col = false;
      for (int q = 0; q < n_; ++q) {
        row = row || m[at(i, q)];
        col = col || m[at(q, i)];
      }
      if (!row) {
        throw ContradictionError(puzzle_.id + ": no position left for " + describe(entity(side, i)));
      }
      if (!col) {
        throw ContradictionError(puzzle_.id + ": no " + std::string(side == kPeople ? "person" : "color") +
                                 " left for position " + position_name(i, n_));
      }
    }
  }

  int index_of(const Entity &e, Side &side) const {
    side = e.kind == EntityKind::Person ? kPeople : kColors;
    const int idx = side == kPeople ? vocab_.name_index(e.value) : vocab_.color_index(e.value);
    if (idx < 0) throw DomainError(puzzle_.id + ": clue references unknown entity '" + e.value + "'");
    return idx;
  }

  // Deductions read off one clue against the current candidate sets.
  std::vector<ReasoningStep> apply_clue(const Clue &clue) {
    std::vector<ReasoningStep> out;
    Side side_a;
    const int a = index_of(clue.subject, side_a);
    Matrix &ma = matrix(side_a);

    if (clue.kind == ClueKind::AtEnd || clue.kind == ClueKind::NotAtEnd) {
      const int target = clue.end == End::Left ? 0 : n_ - 1;
      StepContext ctx;
      ctx.n = n_;
      if (clue.kind == ClueKind::AtEnd) {
        bool changed = false;
        for (int q = 0; q < n_; ++q) {
          if (q != target && ma[at(a, q)]) {
            ma[at(a, q)] = 0;
            changed = true;
          }
        }
        if (changed) {
          ctx.id = side_a == kPeople ? TemplateId::CluePersonAt : TemplateId::ClueColorAt;
          out.push_back(make_step(StepKind::ClueApplication, at_claim(side_a, a, target), ctx));
        }
      } else if (ma[at(a, target)]) {
        ma[at(a, target)] = 0;
        ctx.id = side_a == kPeople ? TemplateId::CluePersonNotAt : TemplateId::ClueColorNotAt;
        out.push_back(make_step(StepKind::ClueApplication, not_at_claim(side_a, a, target), ctx));
      }
      check_consistent(side_a);
      return out;
    }

    Side side_b;
    const int b = index_of(clue.object, side_b);
    // Normalize to "right entity is strictly right of left entity".
    const bool subject_right = clue.kind == ClueKind::SomewhereRightOf;
    const Entity &right_e = subject_right ? clue.subject : clue.object;
    const Entity &left_e = subject_right ? clue.object : clue.subject;
    const Side right_side = subject_right ? side_a : side_b;
    const Side left_side = subject_right ? side_b : side_a;
    const int right_idx = subject_right ? a : b;
    const int left_idx = subject_right ? b : a;

    // Subject first, as the clue reads.
    auto prune_right = [&] {
      const auto left_cands = candidates(left_side, left_idx);
      prune(out, right_side, right_idx, left_e, left_cands, [&](int q) { return q <= left_cands.front(); });
    };
    auto prune_left = [&] {
      const auto right_cands = candidates(right_side, right_idx);
      prune(out, left_side, left_idx, right_e, right_cands, [&](int q) { return q >= right_cands.back(); });
    };
    if (subject_right) {
      prune_right();
      prune_left();
    } else {
      prune_left();
      prune_right();
    }
    return out;
  }

  template <typename Excluded>
  void prune(std::vector<ReasoningStep> &out, Side side, int idx, const Entity &other, const std::vector<int> &other_cands,
             Excluded excluded) {
    Matrix &m = matrix(side);
    std::vector<int> removed;
    for (int q = 0; q < n_; ++q) {
      if (m[at(idx, q)] && excluded(q)) {
        m[at(idx, q)] = 0;
        removed.push_back(q);
      }
    }
    if (removed.empty()) return;
    check_consistent(side);
    StepContext ctx;
    ctx.n = n_;
    ctx.other = other;
    ctx.other_positions = other_cands;
    const auto left = candidates(side, idx);
    if (left.size() == 1) {
      ctx.id = side == kPeople ? TemplateId::RelativePersonAt : TemplateId::RelativeColorAt;
      out.push_back(make_step(StepKind::ClueApplication, at_claim(side, idx, left.front()), ctx));
      return;
    }
    ctx.id = side == kPeople ? TemplateId::RelativePersonNotAt : TemplateId::RelativeColorNotAt;
    for (int q : removed) {
      out.push_back(make_step(StepKind::ClueApplication, not_at_claim(side, idx, q), ctx));
    }
  }

  // Singleton rules on one placement matrix; returns whether anything changed.
  bool position_phase(Side side) {
    Matrix &m = matrix(side);
    bool any = false;
    bool changed = true;
    while (changed) {
      changed = false;
      // A position with one candidate pins that candidate there.
      for (int q = 0; q < n_; ++q) {
        const auto occ = occupants(side, q);
        if (occ.size() != 1 || handled_[side][q]) continue;
        const int e = occ.front();
        handled_[side][q] = true;
        changed = true;
        bool eliminated = false;
        for (int r = 0; r < n_; ++r) {
          if (r == q || !m[at(e, r)]) continue;
          m[at(e, r)] = 0;
          eliminated = true;
          StepContext ctx;
          ctx.n = n_;
          ctx.id = side == kPeople ? TemplateId::FixedPersonElsewhere : TemplateId::FixedColorElsewhere;
          ctx.from_position = q;
          push(StepKind::Elimination, not_at_claim(side, e, r), ctx);
        }
        if (!eliminated) {
          StepContext ctx;
          ctx.n = n_;
          ctx.id = side == kPeople ? TemplateId::OnlyPerson : TemplateId::OnlyColor;
          push(StepKind::OnlyRemaining, at_claim(side, e, q), ctx);
        }
        check_consistent(side);
      }
      // An entity with one candidate position evicts everyone else from it.
      for (int e = 0; e < n_; ++e) {
        const auto cands = candidates(side, e);
        if (cands.size() != 1) continue;
        const int q = cands.front();
        for (int other = 0; other < n_; ++other) {
          if (other == e || !m[at(other, q)]) continue;
          m[at(other, q)] = 0;
          changed = true;
          StepContext ctx;
          ctx.n = n_;
          ctx.id = side == kPeople ? TemplateId::OccupiedPerson : TemplateId::OccupiedColor;
          ctx.other = entity(side, e);
          push(StepKind::Elimination, not_at_claim(side, other, q), ctx);
        }
        check_consistent(side);
      }
      any = any || changed;
    }
    return any;
  }

  // Index of the entity pinned to `pos` (sole candidate both ways), or -1.
  int pinned(Side side, int pos) {
    const auto occ = occupants(side, pos);
    if (occ.size() != 1) return -1;
    return candidates(side, occ.front()).size() == 1 ? occ.front() : -1;
  }

  void composition_phase() {
    for (int q = 0; q < n_; ++q) {
      const int person = pinned(kPeople, q);
      const int color = pinned(kColors, q);
      if (person < 0 || color < 0) continue;
      const Claim claim = Claim::person_wears_at(puzzle_.names[person], puzzle_.colors[color], q);
      if (!person_composed_[person]) {
        StepContext ctx;
        ctx.n = n_;
        ctx.id = TemplateId::ComposeByPerson;
        for (int j = 0; j < n_; ++j) {
          if (state_.person_colors_[at(person, j)]) ctx.options.push_back(puzzle_.colors[j]);
        }
        std::sort(ctx.options.begin(), ctx.options.end());
        for (int j = 0; j < n_; ++j) state_.person_colors_[at(person, j)] = j == color;
        person_composed_[person] = true;
        push(StepKind::Composition, claim, ctx);
      }
      if (!color_composed_[color]) {
        StepContext ctx;
        ctx.n = n_;
        ctx.id = TemplateId::ComposeByColor;
        for (int i = 0; i < n_; ++i) {
          if (state_.color_persons_[at(color, i)]) ctx.options.push_back(puzzle_.names[i]);
        }
        std::sort(ctx.options.begin(), ctx.options.end());
        for (int i = 0; i < n_; ++i) state_.color_persons_[at(color, i)] = i == person;
        color_composed_[color] = true;
        push(StepKind::Composition, claim, ctx);
      }
    }
  }

  void propagate() {
    bool changed = true;
    while (changed) {
      const bool people = position_phase(kPeople);
      const bool colors = position_phase(kColors);
      changed = people || colors;
    }
    composition_phase();
  }

  const Puzzle &puzzle_;
  Vocabulary vocab_;
  int n_;
  PossibilityState state_;
  std::vector<std::vector<bool>> handled_;
  std::vector<bool> person_composed_;
  std::vector<bool> color_composed_;
  std::vector<ReasoningStep> steps_;
};

ReasoningTrace solve_with_trace(const Puzzle &puzzle) { return Propagator(puzzle).run(); }

TraceDocument render_trace_document(const ReasoningTrace &trace) {
  TraceDocument doc;
  for (const auto &step : trace.steps) {
    const std::size_t start = doc.text.size();
    doc.text += step.text;
    doc.line_spans.emplace_back(start, doc.text.size());
    doc.text += '\n';
  }
  const std::size_t start = doc.text.size();
  doc.text += render_final_answer(trace.final, trace.names);
  doc.line_spans.emplace_back(start, doc.text.size());
  doc.text += '\n';
  return doc;
}

} // namespace apz
