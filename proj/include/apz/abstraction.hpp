#pragma once

// Identical-text versus isomorphic-line activation correlations, per layer.

#include "apz/activation.hpp"
#include "apz/isomorphism.hpp"
#include "apz/solver.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace apz {

enum class Condition : std::uint8_t { Identical, Isomorphic };

std::string_view to_string(Condition c);

/// Product-moment correlation. A zero-variance side yields 0 and bumps
/// `zero_variance` if given. Throws DomainError on unequal lengths or fewer
/// than two components.
double pearson(std::span<const double> u, std::span<const double> v, long *zero_variance = nullptr);
double pearson(std::span<const float> u, std::span<const float> v, long *zero_variance = nullptr);

/// One solved puzzle as seen by the probe: its trace, isomorphism key, and
/// the tokenization of its rendered document.
struct ProbeDocument {
  std::string puzzle_id;
  std::string key;
  const ReasoningTrace *trace = nullptr;
  std::vector<DocumentLine> lines; // one per step, then the final-answer line
  std::vector<CharSpan> tokens;
  /// Per step: the document line is the solver's own text. Empty means all
  /// lines are. Only such lines are paired.
  std::vector<bool> pristine;
};

struct LinePair {
  Condition condition = Condition::Identical;
  std::string puzzle_a, puzzle_b;
  int step_a = 0, step_b = 0;
  std::vector<int> tokens_a, tokens_b;
};

struct SampleDiagnostics {
  std::size_t eligible = 0;
  std::size_t excluded_token_count = 0; // candidate pairs whose lines tokenize to different lengths
  std::size_t returned = 0;
  std::size_t shortfall = 0;            // requested minus returned
};

/// Identical: byte-equal step texts from puzzles with different keys at
/// different step indices. Isomorphic: same-index steps of traces related by
/// traces_isomorphic, with different texts. Pairs with unequal token counts
/// are excluded; k pairs are drawn without replacement (all if fewer).
/// Throws DomainError when nothing is eligible.
std::vector<LinePair> sample_line_pairs(std::span<const ProbeDocument> docs, Condition condition, std::size_t k,
                                        std::uint64_t seed, SampleDiagnostics *diag = nullptr);

struct ProfileRow {
  int layer = 0;
  Condition condition = Condition::Identical;
  double mean = 0;
  int pairs = 0;
};

struct AbstractionProfile {
  std::vector<ProfileRow> rows; // layer-major, Identical before Isomorphic
  int dropped_pairs = 0;        // a side had no tensor or a token out of range
  long zero_variance = 0;

  const ProfileRow *find(int layer, Condition c) const;
};

using TensorLookup = std::function<const ActivationTensor *(const std::string &puzzle_id)>;

/// For every layer: per token pair correlation over hidden units, averaged
/// within each line pair, then averaged over line pairs of a condition.
AbstractionProfile layer_profile(std::span<const LinePair> pairs, const TensorLookup &lookup,
                                 std::span<const int> layers);

} // namespace apz
