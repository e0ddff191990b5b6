#pragma once

// Per-token, per-layer activation tensors: the binary file format, the
// reference tokenizer, and synthetic activations with planted structure.

#include "apz/parser.hpp"
#include "apz/rng.hpp"
#include "apz/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace apz {

using CharSpan = std::pair<std::size_t, std::size_t>; // end exclusive

struct ActivationTensor {
  std::uint32_t n_tokens = 0;
  std::uint32_t n_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<float> values; // [token][layer][dim]

  std::size_t index(std::size_t token, std::size_t layer) const {
    return (token * n_layers + layer) * hidden_dim;
  }
  std::span<const float> vec(std::size_t token, std::size_t layer) const {
    return {values.data() + index(token, layer), hidden_dim};
  }
  std::span<float> vec(std::size_t token, std::size_t layer) {
    return {values.data() + index(token, layer), hidden_dim};
  }

  friend bool operator==(const ActivationTensor &, const ActivationTensor &) = default;
};

/// Malformed activation bytes. `offset` is where reading went wrong.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string &what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

inline constexpr std::string_view kActivationMagic{"APZACT1\n", 8};
inline constexpr std::uint32_t kActivationVersion = 1;
inline constexpr std::size_t kActivationHeaderBytes = 8 + 4 * 4;

std::string encode_activations(const ActivationTensor &t);
ActivationTensor decode_activations(std::string_view bytes);
/// Header only; the payload size is still checked against the byte count.
ActivationTensor decode_activation_header(std::string_view bytes);

void write_activations(const ActivationTensor &t, const std::filesystem::path &path);
ActivationTensor read_activations(const std::filesystem::path &path);

/// Runs of ASCII letters/digits form one token; every other non-space
/// character is a token by itself; whitespace separates and is dropped.
std::vector<CharSpan> reference_tokenize(std::string_view text);

/// Mixture weights of one synthetic layer.
struct LayerMix {
  double token = 0;       // embedding of the token string
  double role = 0;        // embedding of (step index, template, offset in line)
  double correctness = 0; // +direction on Correct statements, -direction on Incorrect ones
  double noise = 0.05;    // standard deviation per component
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  int hidden_dim = 64;
  std::vector<LayerMix> layers;

  int n_layers() const { return static_cast<int>(layers.size()); }
};

/// One line of a reasoning document and the step it renders.
struct DocumentLine {
  std::size_t start = 0;
  std::size_t end = 0;
  int step_index = 0;
  TemplateId template_id = TemplateId::Terminal;
};

struct SynthDocument {
  std::string text;
  std::vector<DocumentLine> lines;
};

/// The solver's rendering of `trace`, one line per step plus the final answer.
SynthDocument trace_document(const ReasoningTrace &trace);

/// Copy of the trace document in which each claim-bearing step is, with
/// probability `rate`, rewritten with one slot changed so that its claim is
/// false. The final-answer line is never altered.
SynthDocument corrupt_document(const ReasoningTrace &trace, double rate, Rng &rng);

/// Unit vector of length `dim` determined by (seed, label).
std::vector<float> seeded_unit_vector(std::uint64_t seed, std::string_view label, int dim);

/// Per-token activations for a tokenized document. Statements need
/// token_range filled; their tokens receive the signed correctness direction.
/// `noise_stream` separates noise draws between documents. Throws
/// DomainError when hidden_dim < 8 or a weight is negative.
ActivationTensor synthesize_activations(const SyntheticSpec &spec, const SynthDocument &doc,
                                        std::span<const CharSpan> tokens,
                                        std::span<const LabeledStatement> statements, std::string_view noise_stream);

} // namespace apz
