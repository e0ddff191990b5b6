#include "apz/parser.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <regex>
#include <set>

namespace apz {

namespace {

std::string escape(const std::string &word) {
  static const std::string special = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : word) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

std::string alternation(std::vector<std::string> words) {
  // Longest first so that a name never matches as a prefix of a longer one.
  std::sort(words.begin(), words.end(), [](const std::string &a, const std::string &b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  std::string out = "(";
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += '|';
    out += escape(words[i]);
  }
  return out + ")";
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Sentence boundaries: '.' ends a sentence (inclusive), a newline ends one
// (exclusive). Returned ranges are trimmed of surrounding whitespace.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && text[j] != '.' && text[j] != '\n') ++j;
    std::size_t end = j;
    if (j < text.size() && text[j] == '.') end = j + 1;
    std::size_t trimmed = end;
    while (trimmed > i && is_space(text[trimmed - 1])) --trimmed;
    if (trimmed > i) out.emplace_back(i, trimmed);
    i = end == j ? j + 1 : end;
  }
  return out;
}

} // namespace

struct StatementParser::Impl {
  using Builder = std::function<std::optional<Claim>(const std::smatch &)>;

  struct Rule {
    std::string prefix; // literal the sentence must start with ("" = any)
    std::regex pattern;
    TemplateId id;
    Builder build;      // empty: recognized sentence without a claim
  };

  Vocabulary vocab;
  std::vector<Rule> rules;
  std::regex answer_entry;

  explicit Impl(const Vocabulary &v) : vocab(v) {
    std::vector<std::string> capitalized;
    for (const auto &c : vocab.colors) capitalized.push_back(capitalize_first(c));
    std::vector<std::string> positions;
    for (int p = 0; p < vocab.n; ++p) positions.push_back(position_name(p, vocab.n));

    const std::string N = alternation(vocab.names);
    const std::string C = alternation(vocab.colors);
    const std::string CC = alternation(capitalized);
    const std::string P = alternation(positions);
    const std::string reason = "([^.]+)";

    auto pos = [this](const std::ssub_match &m) { return *parse_position(m.str(), vocab.n); };
    auto lower = [this](const std::ssub_match &m) {
      std::string s = m.str();
      s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
      return s;
    };
    auto add = [this](std::string prefix, const std::string &re, TemplateId id, Builder build) {
      rules.push_back({std::move(prefix), std::regex("^" + re + "$"), id, std::move(build)});
    };

    add("Therefore, position ", "Therefore, position " + P + " must have " + N + " wearing " + C + "\\.",
        TemplateId::ComposeByColor,
        [=](const std::smatch &m) { return Claim::person_wears_at(m[2], m[3], pos(m[1])); });
    add("Therefore, ", "Therefore, " + N + " must be wearing " + C + " at position " + P + "\\.",
        TemplateId::ComposeByPerson,
        [=](const std::smatch &m) { return Claim::person_wears_at(m[1], m[2], pos(m[3])); });
    add("Because ", "Because " + reason + ", " + N + " must be in position " + P + "\\.",
        TemplateId::RelativePersonAt, [=](const std::smatch &m) { return Claim::person_at(m[2], pos(m[3])); });
    add("Because ", "Because " + reason + ", the person wearing " + C + " must be in position " + P + "\\.",
        TemplateId::RelativeColorAt, [=](const std::smatch &m) { return Claim::color_at(m[2], pos(m[3])); });
    add("Because ", "Because " + reason + ", " + N + " cannot be in position " + P + "\\.",
        TemplateId::RelativePersonNotAt,
        [=](const std::smatch &m) { return Claim::person_not_at(m[2], pos(m[3])); });
    add("Because ", "Because " + reason + ", the person wearing " + C + " cannot be in position " + P + "\\.",
        TemplateId::RelativeColorNotAt, [=](const std::smatch &m) { return Claim::color_not_at(m[2], pos(m[3])); });
    add("Position ", "Position " + P + " must have " + N + " because they're the only person left\\.",
        TemplateId::OnlyPerson, [=](const std::smatch &m) { return Claim::person_at(m[2], pos(m[1])); });
    add("Position ", "Position " + P + " must have someone wearing " + C + " because it's the only color left\\.",
        TemplateId::OnlyColor, [=](const std::smatch &m) { return Claim::color_at(m[2], pos(m[1])); });
    add("The person wearing ", "The person wearing " + C + " must be at position " + P + "\\.",
        TemplateId::ClueColorAt, [=](const std::smatch &m) { return Claim::color_at(m[1], pos(m[2])); });
    add("The person wearing ", "The person wearing " + C + " cannot be at position " + P + "\\.",
        TemplateId::ClueColorNotAt, [=](const std::smatch &m) { return Claim::color_not_at(m[1], pos(m[2])); });
    add("", N + " cannot be at position " + P + " because they are at position " + P + "\\.",
        TemplateId::FixedPersonElsewhere,
        [=](const std::smatch &m) { return Claim::person_not_at(m[1], pos(m[2])); });
    add("", N + " cannot be at position " + P + " because (?:" + N + "|the person wearing " + C +
                ") is at position " + P + "\\.",
        TemplateId::OccupiedPerson, [=](const std::smatch &m) { return Claim::person_not_at(m[1], pos(m[2])); });
    add("", N + " must be at position " + P + "\\.", TemplateId::CluePersonAt,
        [=](const std::smatch &m) { return Claim::person_at(m[1], pos(m[2])); });
    add("", N + " cannot be at position " + P + "\\.", TemplateId::CluePersonNotAt,
        [=](const std::smatch &m) { return Claim::person_not_at(m[1], pos(m[2])); });
    add("", N + " must be wearing " + C + "\\.", TemplateId::PersonWears,
        [=](const std::smatch &m) { return Claim::person_wears(m[1], m[2]); });
    add("", CC + " cannot be worn by someone at position " + P + " because it is worn by someone at position " + P +
                "\\.",
        TemplateId::FixedColorElsewhere,
        [=](const std::smatch &m) { return Claim::color_not_at(lower(m[1]), pos(m[2])); });
    add("", CC + " cannot be worn by someone at position " + P + " because (?:" + N + "|the person wearing " + C +
                ") is at position " + P + "\\.",
        TemplateId::OccupiedColor, [=](const std::smatch &m) { return Claim::color_not_at(lower(m[1]), pos(m[2])); });

    // Recognized sentences that carry no claim.
    add("Applying clue: ", "Applying clue: .+", TemplateId::ClueHeader, {});
    add("All positions ", "All positions have been determined\\.", TemplateId::Terminal, {});
    add("", N + " is wearing one of [^.]+, and they are at position " + P + " which contains someone wearing " + C +
                "\\.",
        TemplateId::ComposeByPerson, {});
    add("", CC + " is worn by one of [^.]+, and it is at position " + P + " which contains " + N + "\\.",
        TemplateId::ComposeByColor, {});

    answer_entry = std::regex(N + " \\(Color " + C + ", position " + P + "\\)");
  }

  std::optional<Claim> final_answer(std::string_view sentence) const {
    static constexpr std::string_view head = "Final answer:";
    std::string body(sentence.substr(head.size()));
    if (!body.empty() && body.back() == '.') body.pop_back();
    Arrangement arr;
    arr.person_at.assign(vocab.n, "");
    arr.color_at.assign(vocab.n, "");
    std::set<std::string> seen_names;
    std::set<std::string> seen_colors;
    std::string rest;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), answer_entry); it != std::sregex_iterator(); ++it) {
      const std::smatch &m = *it;
      rest += m.prefix().str();
      const int p = *parse_position(m[3].str(), vocab.n);
      if (!arr.person_at[p].empty()) return std::nullopt;
      if (!seen_names.insert(m[1]).second || !seen_colors.insert(m[2]).second) return std::nullopt;
      arr.person_at[p] = m[1];
      arr.color_at[p] = m[2];
    }
    if (static_cast<int>(seen_names.size()) != vocab.n) return std::nullopt;
    // Only separators may remain between entries.
    for (char c : rest) {
      if (c != ',' && !is_space(c)) return std::nullopt;
    }
    return Claim::final_answer(std::move(arr));
  }

  // nullopt: unmatched. An empty claim: recognized sentence without a claim.
  std::optional<std::pair<TemplateId, std::optional<Claim>>> match(std::string_view sentence) const {
    if (sentence.starts_with("Final answer:")) {
      auto claim = final_answer(sentence);
      if (!claim) return std::nullopt;
      return std::make_pair(TemplateId::FinalAnswer, std::move(claim));
    }
    const std::string s(sentence);
    std::smatch m;
    for (const Rule &rule : rules) {
      if (!rule.prefix.empty() && !sentence.starts_with(rule.prefix)) continue;
      if (!std::regex_match(s, m, rule.pattern)) continue;
      if (!rule.build) return std::make_pair(rule.id, std::optional<Claim>{});
      return std::make_pair(rule.id, rule.build(m));
    }
    return std::nullopt;
  }
};

StatementParser::StatementParser(const Vocabulary &vocab) : impl_(std::make_unique<Impl>(vocab)) {}
StatementParser::~StatementParser() = default;
StatementParser::StatementParser(StatementParser &&) noexcept = default;
StatementParser &StatementParser::operator=(StatementParser &&) noexcept = default;

const Vocabulary &StatementParser::vocabulary() const { return impl_->vocab; }

std::optional<StatementSpan> StatementParser::parse_sentence(std::string_view sentence) const {
  auto hit = impl_->match(sentence);
  if (!hit || !hit->second) return std::nullopt;
  return StatementSpan{0, sentence.size(), std::move(*hit->second), hit->first};
}

std::vector<StatementSpan> StatementParser::parse(std::string_view text, ParseDiagnostics *diag) const {
  std::vector<StatementSpan> spans;
  for (const auto &[start, end] : split_sentences(text)) {
    auto hit = impl_->match(text.substr(start, end - start));
    if (diag) ++diag->sentences;
    if (!hit) {
      if (diag) ++diag->unmatched;
      continue;
    }
    if (!hit->second) {
      if (diag) ++diag->recognized_without_claim;
      continue;
    }
    if (diag) ++diag->claims;
    spans.push_back({start, end, std::move(*hit->second), hit->first});
  }
  return spans;
}

std::vector<StatementSpan> parse_statements(std::string_view text, const Vocabulary &vocab) {
  return StatementParser(vocab).parse(text);
}

namespace {

bool in_universe(const Claim &claim, const Arrangement &solution) {
  if (!claim.name.empty() && solution.position_of_person(claim.name) < 0) return false;
  if (!claim.color.empty() && solution.position_of_color(claim.color) < 0) return false;
  if (claim.position >= solution.size()) return false;
  if (claim.answer) {
    for (const auto &name : claim.answer->person_at) {
      if (solution.position_of_person(name) < 0) return false;
    }
    for (const auto &color : claim.answer->color_at) {
      if (solution.position_of_color(color) < 0) return false;
    }
  }
  return true;
}

} // namespace

LabelResult label_trace(std::string_view text, const Arrangement &solution, const StatementParser &parser) {
  LabelResult result;
  for (auto &span : parser.parse(text, &result.diagnostics)) {
    if (!in_universe(span.claim, solution)) {
      ++result.diagnostics.out_of_universe;
      continue;
    }
    const Label label = claim_holds(span.claim, solution) ? Label::Correct : Label::Incorrect;
    result.statements.push_back({std::move(span), label, std::nullopt});
  }
  return result;
}

LabelResult label_trace(std::string_view text, const Arrangement &solution, const Vocabulary *parse_vocab) {
  if (parse_vocab) return label_trace(text, solution, StatementParser(*parse_vocab));
  std::vector<std::string> names = solution.person_at;
  std::sort(names.begin(), names.end());
  std::vector<std::string> colors = solution.color_at;
  std::sort(colors.begin(), colors.end());
  return label_trace(text, solution, StatementParser(Vocabulary{solution.size(), names, colors}));
}

void attach_token_ranges(std::span<LabeledStatement> statements,
                         std::span<const std::pair<std::size_t, std::size_t>> token_spans) {
  for (auto &st : statements) {
    int first = -1;
    int last = -1;
    // Token spans are sorted; binary search for the first token ending after start.
    auto it = std::partition_point(token_spans.begin(), token_spans.end(),
                                   [&](const auto &t) { return t.second <= st.span.start; });
    for (; it != token_spans.end() && it->first < st.span.end; ++it) {
      const int idx = static_cast<int>(it - token_spans.begin());
      if (first < 0) first = idx;
      last = idx;
    }
    st.token_range = first < 0 ? std::nullopt : std::optional<TokenRange>(TokenRange{first, last});
  }
}

} // namespace apz
