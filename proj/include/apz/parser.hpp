#pragma once

// Regex-based extraction of reasoning statements from free text, and
// per-statement correctness labels against a ground-truth arrangement.

#include "apz/core.hpp"
#include "apz/templates.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace apz {

struct StatementSpan {
  std::size_t start = 0; // character offsets into the source text, end exclusive
  std::size_t end = 0;
  Claim claim;
  TemplateId template_id = TemplateId::Terminal;

  friend bool operator==(const StatementSpan &, const StatementSpan &) = default;
};

enum class Label : std::uint8_t { Correct, Incorrect };

using TokenRange = std::pair<int, int>; // inclusive token indices

struct LabeledStatement {
  StatementSpan span;
  Label label = Label::Correct;
  std::optional<TokenRange> token_range;

  friend bool operator==(const LabeledStatement &, const LabeledStatement &) = default;
};

/// Sentence accounting for one document.
struct ParseDiagnostics {
  int sentences = 0;
  int claims = 0;
  int recognized_without_claim = 0; // clue headers, composition premises, terminal line
  int unmatched = 0;
  int out_of_universe = 0;          // claims dropped by label_trace

  double unmatched_rate() const { return sentences == 0 ? 0.0 : static_cast<double>(unmatched) / sentences; }
};

/// Compiled matcher for one vocabulary. Sentences end at '.' (inclusive) or
/// a newline; each sentence yields at most one claim. Matching is
/// case-sensitive and ignores whitespace around sentences.
class StatementParser {
public:
  explicit StatementParser(const Vocabulary &vocab);
  ~StatementParser();
  StatementParser(StatementParser &&) noexcept;
  StatementParser &operator=(StatementParser &&) noexcept;

  std::vector<StatementSpan> parse(std::string_view text, ParseDiagnostics *diag = nullptr) const;

  /// Claim for a single, already isolated sentence, if it matches a template.
  std::optional<StatementSpan> parse_sentence(std::string_view sentence) const;

  const Vocabulary &vocabulary() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<StatementSpan> parse_statements(std::string_view text, const Vocabulary &vocab);

struct LabelResult {
  std::vector<LabeledStatement> statements;
  ParseDiagnostics diagnostics;
};

/// Parses `text` with `parse_vocab` (default: the solution's own names and
/// colors) and labels every claim with claim_holds against `solution`. Claims
/// naming anything outside the solution's universe are dropped and counted.
LabelResult label_trace(std::string_view text, const Arrangement &solution,
                        const Vocabulary *parse_vocab = nullptr);
LabelResult label_trace(std::string_view text, const Arrangement &solution, const StatementParser &parser);

/// Fills token_range with the first and last token whose character span
/// overlaps the statement. Statements touching no token keep nullopt.
void attach_token_ranges(std::span<LabeledStatement> statements,
                         std::span<const std::pair<std::size_t, std::size_t>> token_spans);

} // namespace apz
