#include "apz/activation.hpp"
#include "apz/generator.hpp"
#include "example_puzzles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

using namespace apz;

namespace {

ActivationTensor distinct_tensor(std::uint32_t t, std::uint32_t l, std::uint32_t d) {
  ActivationTensor a{t, l, d, {}};
  for (std::uint32_t i = 0; i < t * l * d; ++i) a.values.push_back(static_cast<float>(i) * 0.25f - 3.0f);
  return a;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto [b, e] : reference_tokenize(text)) out.emplace_back(text.substr(b, e - b));
  return out;
}

struct Corpus {
  SynthDocument doc;
  std::vector<CharSpan> tokens;
  std::vector<LabeledStatement> statements;
};

Corpus corpus_for(const Puzzle &p, const SynthDocument &doc) {
  Corpus c{doc, reference_tokenize(doc.text), {}};
  c.statements = label_trace(doc.text, p.solution).statements;
  attach_token_ranges(c.statements, c.tokens);
  return c;
}

} // namespace

TEST(ActivationFile, RoundTripDistinctValues) {
  const auto t = distinct_tensor(3, 2, 4);
  EXPECT_EQ(decode_activations(encode_activations(t)), t);
  const auto path = std::filesystem::temp_directory_path() / "apz_roundtrip.apzact";
  write_activations(t, path);
  EXPECT_EQ(read_activations(path), t);
  std::filesystem::remove(path);
}

TEST(ActivationFile, RoundTripIsBitExact) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ActivationTensor t{static_cast<std::uint32_t>(rng.below(6)), 1 + static_cast<std::uint32_t>(rng.below(4)),
                       1 + static_cast<std::uint32_t>(rng.below(9)), {}};
    t.values.resize(std::size_t{t.n_tokens} * t.n_layers * t.hidden_dim);
    for (auto &v : t.values) {
      const auto bits = static_cast<std::uint32_t>(rng.next());
      std::memcpy(&v, &bits, 4);
      if (std::isnan(v)) v = 1.5f;
    }
    const std::string bytes = encode_activations(t);
    EXPECT_EQ(encode_activations(decode_activations(bytes)), bytes);
  }
}

TEST(ActivationFile, HeaderLayout) {
  const std::string bytes = encode_activations(distinct_tensor(1, 1, 2));
  ASSERT_EQ(bytes.size(), 24u + 8u);
  EXPECT_EQ(bytes.substr(0, 8), std::string("APZACT1\n"));
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 2u);
}

TEST(ActivationFile, TruncatedPayloadNamesByteCounts) {
  std::string bytes = encode_activations(distinct_tensor(3, 2, 4));
  bytes.resize(bytes.size() - 5);
  try {
    decode_activations(bytes);
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_NE(std::string(e.what()).find("expected 96 bytes, got 91"), std::string::npos) << e.what();
  }
}

TEST(ActivationFile, BadHeaders) {
  std::string bytes = encode_activations(distinct_tensor(1, 1, 1));
  std::string bad = bytes;
  bad[3] = 'X';
  EXPECT_THROW(decode_activations(bad), FormatError);
  bad = bytes;
  bad[8] = 2;
  try {
    decode_activations(bad);
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 8u);
  }
  EXPECT_THROW(decode_activations(bytes.substr(0, 10)), FormatError);
  EXPECT_THROW(decode_activations(""), FormatError);
  bad = bytes;
  bad[16] = 0;
  EXPECT_THROW(decode_activations(bad), FormatError);
}

TEST(ActivationFile, EmptyTensorIsValid) {
  const ActivationTensor t{0, 3, 4, {}};
  const auto back = decode_activations(encode_activations(t));
  EXPECT_EQ(back.n_tokens, 0u);
  EXPECT_EQ(back.n_layers, 3u);
  EXPECT_TRUE(back.values.empty());
}

TEST(Tokenizer, WordsAndPunctuation) {
  EXPECT_EQ(words("Position right must have Blake because they're the only person left."),
            (std::vector<std::string>{"Position", "right", "must", "have", "Blake", "because", "they", "'", "re",
                                      "the", "only", "person", "left", "."}));
  EXPECT_EQ(words("  Final answer: Ava (Color red, position 3)\n"),
            (std::vector<std::string>{"Final", "answer", ":", "Ava", "(", "Color", "red", ",", "position", "3", ")"}));
  EXPECT_TRUE(reference_tokenize(" \n\t").empty());
}

TEST(Synthesis, CorrectnessComponentIsExact) {
  const Puzzle p = apz::testing::base_puzzle();
  const auto trace = solve_with_trace(p);
  Corpus c = corpus_for(p, trace_document(trace));
  SyntheticSpec spec{5, 16, {LayerMix{0, 0, 1, 0}}};
  const auto plus = synthesize_activations(spec, c.doc, c.tokens, c.statements, "x");
  for (auto &s : c.statements) s.label = s.label == Label::Correct ? Label::Incorrect : Label::Correct;
  const auto minus = synthesize_activations(spec, c.doc, c.tokens, c.statements, "x");
  const auto dir = seeded_unit_vector(5, "correctness", 16);
  const int t = c.statements[0].token_range->first;
  for (int d = 0; d < 16; ++d) {
    EXPECT_FLOAT_EQ(plus.vec(t, 0)[d] - minus.vec(t, 0)[d], 2 * dir[d]);
  }
}

TEST(Synthesis, TokenIdentityLayerRepeatsAcrossContexts) {
  const Puzzle p = apz::testing::base_puzzle();
  Corpus c = corpus_for(p, trace_document(solve_with_trace(p)));
  SyntheticSpec spec{5, 16, {LayerMix{1, 0, 0, 0}}};
  const auto a = synthesize_activations(spec, c.doc, c.tokens, c.statements, "x");
  // "position" occurs many times
  std::vector<std::size_t> hits;
  for (std::size_t t = 0; t < c.tokens.size(); ++t) {
    if (c.doc.text.substr(c.tokens[t].first, c.tokens[t].second - c.tokens[t].first) == "position") hits.push_back(t);
  }
  ASSERT_GE(hits.size(), 2u);
  for (int d = 0; d < 16; ++d) EXPECT_EQ(a.vec(hits[0], 0)[d], a.vec(hits.back(), 0)[d]);
}

TEST(Synthesis, DeterministicAndValidated) {
  const Puzzle p = apz::testing::relative_puzzle();
  Corpus c = corpus_for(p, trace_document(solve_with_trace(p)));
  SyntheticSpec spec{9, 8, {LayerMix{0.5, 0.5, 0.5, 0.1}, LayerMix{}}};
  EXPECT_EQ(synthesize_activations(spec, c.doc, c.tokens, c.statements, "a"),
            synthesize_activations(spec, c.doc, c.tokens, c.statements, "a"));
  EXPECT_NE(synthesize_activations(spec, c.doc, c.tokens, c.statements, "a"),
            synthesize_activations(spec, c.doc, c.tokens, c.statements, "b"));
  spec.hidden_dim = 7;
  EXPECT_THROW(synthesize_activations(spec, c.doc, c.tokens, c.statements, "a"), DomainError);
  spec.hidden_dim = 8;
  spec.layers[0].role = -1;
  EXPECT_THROW(synthesize_activations(spec, c.doc, c.tokens, c.statements, "a"), DomainError);
}

TEST(Synthesis, PlantedMeansMatchSpec) {
  // projection on the correctness direction averages +w_c on Correct tokens
  SyntheticSpec spec{21, 32, {LayerMix{0.7, 0.4, 0.6, 0.05}}};
  const auto dir = seeded_unit_vector(21, "correctness", 32);
  double sum = 0, sum_sq = 0;
  std::size_t count = 0;
  Rng rng(4);
  for (std::uint64_t seed = 0; count < 10000; ++seed) {
    GeneratorConfig cfg;
    cfg.n = 3;
    cfg.seed = seed;
    cfg.name_pool = default_name_pool();
    cfg.color_pool = default_color_pool();
    const Puzzle p = generate_puzzle(cfg);
    const auto trace = solve_with_trace(p);
    Corpus c = corpus_for(p, corrupt_document(trace, 0.5, rng));
    const auto a = synthesize_activations(spec, c.doc, c.tokens, c.statements, p.id);
    for (const auto &s : c.statements) {
      const double want = s.label == Label::Correct ? 1.0 : -1.0;
      for (int t = s.token_range->first; t <= s.token_range->second; ++t) {
        double proj = 0;
        for (int d = 0; d < 32; ++d) proj += a.vec(t, 0)[d] * dir[d];
        sum += proj * want;
        sum_sq += proj * proj;
        ++count;
      }
    }
  }
  const double mean = sum / count;
  // token and role vectors are random directions: per-token spread about sqrt((0.7^2+0.4^2)/32)
  EXPECT_NEAR(mean, 0.6, 0.03);
}

TEST(Corruption, RewrittenStatementsAreIncorrect) {
  Rng rng(8);
  int incorrect = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorConfig cfg;
    cfg.n = 3;
    cfg.seed = seed;
    cfg.name_pool = default_name_pool();
    cfg.color_pool = default_color_pool();
    const Puzzle p = generate_puzzle(cfg);
    const auto trace = solve_with_trace(p);
    const auto doc = corrupt_document(trace, 0.5, rng);
    ASSERT_EQ(doc.lines.size(), trace.steps.size() + 1);
    const auto r = label_trace(doc.text, p.solution);
    EXPECT_EQ(r.diagnostics.unmatched, 0);
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
      const std::string line = doc.text.substr(doc.lines[k].start, doc.lines[k].end - doc.lines[k].start);
      if (line != trace.steps[k].text) {
        const auto spans = parse_statements(line, p.vocabulary());
        ASSERT_FALSE(spans.empty()) << line;
        EXPECT_FALSE(claim_holds(spans.back().claim, p.solution)) << line;
      }
    }
    for (const auto &s : r.statements) {
      incorrect += s.label == Label::Incorrect;
      ++total;
    }
  }
  EXPECT_GT(incorrect, total / 4);
  EXPECT_LT(incorrect, total * 3 / 4);
}
