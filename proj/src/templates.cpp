#include "apz/templates.hpp"

#include <algorithm>
#include <array>

namespace apz {

namespace {

constexpr std::array<TemplateInfo, 20> kTable{{
    {TemplateId::ClueHeader, "clue_header", StepKind::ClueHeader, std::nullopt, "Applying clue: {clue}"},
    {TemplateId::CluePersonAt, "clue_person_at", StepKind::ClueApplication, ClaimKind::PersonAt,
     "{Name} must be at position {pos}."},
    {TemplateId::ClueColorAt, "clue_color_at", StepKind::ClueApplication, ClaimKind::ColorAt,
     "The person wearing {color} must be at position {pos}."},
    {TemplateId::CluePersonNotAt, "clue_person_not_at", StepKind::ClueApplication, ClaimKind::PersonNotAt,
     "{Name} cannot be at position {pos}."},
    {TemplateId::ClueColorNotAt, "clue_color_not_at", StepKind::ClueApplication, ClaimKind::ColorNotAt,
     "The person wearing {color} cannot be at position {pos}."},
    {TemplateId::RelativePersonAt, "relative_person_at", StepKind::ClueApplication, ClaimKind::PersonAt,
     "Because {reason}, {Name} must be in position {pos}."},
    {TemplateId::RelativeColorAt, "relative_color_at", StepKind::ClueApplication, ClaimKind::ColorAt,
     "Because {reason}, the person wearing {color} must be in position {pos}."},
    {TemplateId::RelativePersonNotAt, "relative_person_not_at", StepKind::ClueApplication, ClaimKind::PersonNotAt,
     "Because {reason}, {Name} cannot be in position {pos}."},
    {TemplateId::RelativeColorNotAt, "relative_color_not_at", StepKind::ClueApplication, ClaimKind::ColorNotAt,
     "Because {reason}, the person wearing {color} cannot be in position {pos}."},
    {TemplateId::FixedPersonElsewhere, "fixed_person_elsewhere", StepKind::Elimination, ClaimKind::PersonNotAt,
     "{Name} cannot be at position {pos} because they are at position {from}."},
    {TemplateId::FixedColorElsewhere, "fixed_color_elsewhere", StepKind::Elimination, ClaimKind::ColorNotAt,
     "{Color} cannot be worn by someone at position {pos} because it is worn by someone at position {from}."},
    {TemplateId::OccupiedPerson, "occupied_person", StepKind::Elimination, ClaimKind::PersonNotAt,
     "{Name} cannot be at position {pos} because {Other} is at position {pos}."},
    {TemplateId::OccupiedColor, "occupied_color", StepKind::Elimination, ClaimKind::ColorNotAt,
     "{Color} cannot be worn by someone at position {pos} because the person wearing {other} is at position {pos}."},
    {TemplateId::OnlyPerson, "only_person", StepKind::OnlyRemaining, ClaimKind::PersonAt,
     "Position {pos} must have {Name} because they're the only person left."},
    {TemplateId::OnlyColor, "only_color", StepKind::OnlyRemaining, ClaimKind::ColorAt,
     "Position {pos} must have someone wearing {color} because it's the only color left."},
    {TemplateId::ComposeByPerson, "compose_by_person", StepKind::Composition, ClaimKind::PersonWearsAt,
     "{Name} is wearing one of {colors}, and they are at position {pos} which contains someone wearing {color}. "
     "Therefore, {Name} must be wearing {color} at position {pos}."},
    {TemplateId::ComposeByColor, "compose_by_color", StepKind::Composition, ClaimKind::PersonWearsAt,
     "{Color} is worn by one of {names}, and it is at position {pos} which contains {Name}. "
     "Therefore, position {pos} must have {Name} wearing {color}."},
    {TemplateId::PersonWears, "person_wears", StepKind::Composition, ClaimKind::PersonWears,
     "{Name} must be wearing {color}."},
    {TemplateId::Terminal, "terminal", StepKind::Terminal, ClaimKind::Done, "All positions have been determined."},
    {TemplateId::FinalAnswer, "final_answer", StepKind::Terminal, ClaimKind::FinalAnswer,
     "Final answer: {Name} (Color {color}, position {pos}), ..."},
}};

constexpr std::array<std::string_view, 6> kKindNames{
    "clue_header", "clue_application", "elimination", "only_remaining", "composition", "terminal"};

std::string reason_text(const StepContext &ctx) {
  if (!ctx.other || ctx.other_positions.empty()) {
    throw DomainError("relative template needs the other entity and its candidate positions");
  }
  std::string text = describe(*ctx.other) + " is at ";
  if (ctx.other_positions.size() == 1) {
    return text + "position " + position_name(ctx.other_positions.front(), ctx.n);
  }
  std::vector<std::string> names;
  for (int p : ctx.other_positions) names.push_back(position_name(p, ctx.n));
  return text + "one of positions " + join_or(names);
}

} // namespace

std::span<const TemplateInfo> template_table() { return kTable; }

const TemplateInfo &template_info(TemplateId id) {
  auto it = std::find_if(kTable.begin(), kTable.end(), [&](const TemplateInfo &t) { return t.id == id; });
  return *it;
}

std::optional<TemplateId> template_from_key(std::string_view key) {
  for (const auto &t : kTable) {
    if (t.key == key) return t.id;
  }
  return std::nullopt;
}

std::string_view to_string(StepKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<StepKind> step_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<StepKind>(i);
  }
  return std::nullopt;
}

std::string render_step(const Claim &claim, StepKind kind, const StepContext &ctx) {
  const TemplateInfo &info = template_info(ctx.id);
  if (info.kind != kind) {
    throw DomainError("template '" + std::string(info.key) + "' does not render steps of kind '" +
                      std::string(to_string(kind)) + "'");
  }
  if (info.claim && *info.claim != claim.kind) {
    throw DomainError("template '" + std::string(info.key) + "' does not match the claim kind");
  }
  auto pos = [&](int p) { return position_name(p, ctx.n); };

  switch (ctx.id) {
  case TemplateId::ClueHeader:
    return "Applying clue: " + ctx.clue;
  case TemplateId::CluePersonAt:
    return claim.name + " must be at position " + pos(claim.position) + ".";
  case TemplateId::ClueColorAt:
    return "The person wearing " + claim.color + " must be at position " + pos(claim.position) + ".";
  case TemplateId::CluePersonNotAt:
    return claim.name + " cannot be at position " + pos(claim.position) + ".";
  case TemplateId::ClueColorNotAt:
    return "The person wearing " + claim.color + " cannot be at position " + pos(claim.position) + ".";
  case TemplateId::RelativePersonAt:
    return "Because " + reason_text(ctx) + ", " + claim.name + " must be in position " + pos(claim.position) + ".";
  case TemplateId::RelativeColorAt:
    return "Because " + reason_text(ctx) + ", the person wearing " + claim.color + " must be in position " +
           pos(claim.position) + ".";
  case TemplateId::RelativePersonNotAt:
    return "Because " + reason_text(ctx) + ", " + claim.name + " cannot be in position " + pos(claim.position) + ".";
  case TemplateId::RelativeColorNotAt:
    return "Because " + reason_text(ctx) + ", the person wearing " + claim.color + " cannot be in position " +
           pos(claim.position) + ".";
  case TemplateId::FixedPersonElsewhere:
    return claim.name + " cannot be at position " + pos(claim.position) + " because they are at position " +
           pos(ctx.from_position) + ".";
  case TemplateId::FixedColorElsewhere:
    return capitalize_first(claim.color) + " cannot be worn by someone at position " + pos(claim.position) +
           " because it is worn by someone at position " + pos(ctx.from_position) + ".";
  case TemplateId::OccupiedPerson:
  case TemplateId::OccupiedColor: {
    if (!ctx.other) throw DomainError("occupied template needs the occupant");
    const std::string head = ctx.id == TemplateId::OccupiedPerson
                                 ? claim.name + " cannot be at position "
                                 : capitalize_first(claim.color) + " cannot be worn by someone at position ";
    return head + pos(claim.position) + " because " + describe(*ctx.other) + " is at position " +
           pos(claim.position) + ".";
  }
  case TemplateId::OnlyPerson:
    return "Position " + pos(claim.position) + " must have " + claim.name + " because they're the only person left.";
  case TemplateId::OnlyColor:
    return "Position " + pos(claim.position) + " must have someone wearing " + claim.color +
           " because it's the only color left.";
  case TemplateId::ComposeByPerson: {
    std::string conclusion = "Therefore, " + claim.name + " must be wearing " + claim.color + " at position " +
                             pos(claim.position) + ".";
    if (ctx.options.empty()) return conclusion;
    return claim.name + " is wearing one of " + join_or(ctx.options) + ", and they are at position " +
           pos(claim.position) + " which contains someone wearing " + claim.color + ". " + conclusion;
  }
  case TemplateId::ComposeByColor: {
    std::string conclusion = "Therefore, position " + pos(claim.position) + " must have " + claim.name +
                             " wearing " + claim.color + ".";
    if (ctx.options.empty()) return conclusion;
    return capitalize_first(claim.color) + " is worn by one of " + join_or(ctx.options) + ", and it is at position " +
           pos(claim.position) + " which contains " + claim.name + ". " + conclusion;
  }
  case TemplateId::PersonWears:
    return claim.name + " must be wearing " + claim.color + ".";
  case TemplateId::Terminal:
    return "All positions have been determined.";
  case TemplateId::FinalAnswer: {
    if (!claim.answer) throw DomainError("final answer claim without an arrangement");
    std::vector<std::string> names = claim.answer->person_at;
    std::sort(names.begin(), names.end());
    return render_final_answer(*claim.answer, names);
  }
  }
  return {};
}

std::string render_final_answer(const Arrangement &arr, std::span<const std::string> names) {
  std::string text = "Final answer: ";
  bool first = true;
  for (const auto &name : names) {
    const int p = arr.position_of_person(name);
    if (p < 0) throw DomainError("final answer: unknown name '" + name + "'");
    if (!first) text += ", ";
    first = false;
    text += name + " (Color " + arr.color_at[p] + ", position " + position_name(p, arr.size()) + ")";
  }
  return text;
}

} // namespace apz
