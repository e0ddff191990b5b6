#include "apz/activation.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace apz {

static_assert(std::endian::native == std::endian::little, "activation files assume a little-endian host");
static_assert(sizeof(float) == 4);

namespace {

void put_u32(std::string &out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

} // namespace

std::string encode_activations(const ActivationTensor &t) {
  const std::size_t count = static_cast<std::size_t>(t.n_tokens) * t.n_layers * t.hidden_dim;
  if (t.values.size() != count) {
    throw DomainError("activation tensor holds " + std::to_string(t.values.size()) + " values, dims require " +
                      std::to_string(count));
  }
  std::string out(kActivationMagic);
  put_u32(out, kActivationVersion);
  put_u32(out, t.n_tokens);
  put_u32(out, t.n_layers);
  put_u32(out, t.hidden_dim);
  out.append(reinterpret_cast<const char *>(t.values.data()), count * 4);
  return out;
}

ActivationTensor decode_activation_header(std::string_view bytes) {
  if (bytes.size() < kActivationMagic.size()) {
    throw FormatError("truncated magic: expected " + std::to_string(kActivationMagic.size()) + " bytes, got " +
                          std::to_string(bytes.size()),
                      0);
  }
  if (bytes.substr(0, kActivationMagic.size()) != kActivationMagic) throw FormatError("bad magic", 0);
  if (bytes.size() < kActivationHeaderBytes) {
    throw FormatError("truncated header: expected " + std::to_string(kActivationHeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()),
                      bytes.size());
  }
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kActivationVersion) throw FormatError("unsupported version " + std::to_string(version), 8);
  ActivationTensor t;
  t.n_tokens = get_u32(bytes, 12);
  t.n_layers = get_u32(bytes, 16);
  t.hidden_dim = get_u32(bytes, 20);
  if (t.n_layers == 0) throw FormatError("n_layers must be positive", 16);
  if (t.hidden_dim == 0) throw FormatError("hidden_dim must be positive", 20);
  const std::uint64_t payload = std::uint64_t{t.n_tokens} * t.n_layers * t.hidden_dim * 4;
  const std::uint64_t actual = bytes.size() - kActivationHeaderBytes;
  if (payload != actual) {
    throw FormatError("payload size mismatch: expected " + std::to_string(payload) + " bytes, got " +
                          std::to_string(actual),
                      kActivationHeaderBytes + std::min(payload, actual));
  }
  return t;
}

ActivationTensor decode_activations(std::string_view bytes) {
  ActivationTensor t = decode_activation_header(bytes);
  t.values.resize(static_cast<std::size_t>(t.n_tokens) * t.n_layers * t.hidden_dim);
  std::memcpy(t.values.data(), bytes.data() + kActivationHeaderBytes, t.values.size() * 4);
  return t;
}

void write_activations(const ActivationTensor &t, const std::filesystem::path &path) {
  const std::string bytes = encode_activations(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ActivationTensor read_activations(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_activations(ss.str());
}

std::vector<CharSpan> reference_tokenize(std::string_view text) {
  std::vector<CharSpan> out;
  std::size_t i = 0;
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (word(c)) {
      std::size_t j = i;
      while (j < text.size() && word(text[j])) ++j;
      out.emplace_back(i, j);
      i = j;
    } else {
      out.emplace_back(i, i + 1);
      ++i;
    }
  }
  return out;
}

SynthDocument trace_document(const ReasoningTrace &trace) {
  const TraceDocument doc = render_trace_document(trace);
  SynthDocument out{doc.text, {}};
  for (std::size_t k = 0; k < doc.line_spans.size(); ++k) {
    const bool final_line = k == trace.steps.size();
    out.lines.push_back({doc.line_spans[k].first, doc.line_spans[k].second, static_cast<int>(k),
                         final_line ? TemplateId::FinalAnswer : trace.steps[k].template_id});
  }
  return out;
}

namespace {

// Claims that differ from `c` in exactly one slot and are false under `truth`.
std::vector<Claim> false_variants(const Claim &c, const ReasoningTrace &trace) {
  std::vector<Claim> out;
  auto keep = [&](Claim v) {
    if (!claim_holds(v, trace.final)) out.push_back(std::move(v));
  };
  if (!c.name.empty()) {
    for (const auto &name : trace.names) {
      if (name == c.name) continue;
      Claim v = c;
      v.name = name;
      keep(v);
    }
  }
  if (!c.color.empty()) {
    for (const auto &color : trace.colors) {
      if (color == c.color) continue;
      Claim v = c;
      v.color = color;
      keep(v);
    }
  }
  if (c.position >= 0) {
    for (int q = 0; q < trace.n; ++q) {
      if (q == c.position) continue;
      Claim v = c;
      v.position = q;
      keep(v);
    }
  }
  return out;
}

} // namespace

SynthDocument corrupt_document(const ReasoningTrace &trace, double rate, Rng &rng) {
  SynthDocument out;
  for (const auto &step : trace.steps) {
    std::string text = step.text;
    if (step.claim && step.kind != StepKind::Terminal && rng.uniform() < rate) {
      std::vector<Claim> variants = false_variants(*step.claim, trace);
      rng.shuffle(variants);
      for (const auto &v : variants) {
        try {
          text = render_step(v, step.kind, step.context);
          break;
        } catch (const DomainError &) {
        }
      }
    }
    const std::size_t start = out.text.size();
    out.text += text;
    out.lines.push_back({start, out.text.size(), step.index, step.template_id});
    out.text += '\n';
  }
  const std::size_t start = out.text.size();
  out.text += render_final_answer(trace.final, trace.names);
  out.lines.push_back({start, out.text.size(), static_cast<int>(trace.steps.size()), TemplateId::FinalAnswer});
  out.text += '\n';
  return out;
}

std::vector<float> seeded_unit_vector(std::uint64_t seed, std::string_view label, int dim) {
  Rng rng(derive_seed(seed, label));
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0;
  for (auto &x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

ActivationTensor synthesize_activations(const SyntheticSpec &spec, const SynthDocument &doc,
                                        std::span<const CharSpan> tokens,
                                        std::span<const LabeledStatement> statements,
                                        std::string_view noise_stream) {
  if (spec.hidden_dim < 8) throw DomainError("synthetic hidden_dim must be at least 8");
  if (spec.layers.empty()) throw DomainError("synthetic spec has no layers");
  for (const auto &m : spec.layers) {
    if (m.token < 0 || m.role < 0 || m.correctness < 0 || m.noise < 0) {
      throw DomainError("synthetic mixture weights must be non-negative");
    }
  }
  const int dim = spec.hidden_dim;
  const auto n_tokens = tokens.size();

  // Role of every token: its line's step index and template, and its offset in the line.
  std::vector<std::string> role(n_tokens);
  {
    std::size_t line = 0;
    int offset = 0;
    for (std::size_t t = 0; t < n_tokens; ++t) {
      while (line < doc.lines.size() && doc.lines[line].end <= tokens[t].first) {
        ++line;
        offset = 0;
      }
      if (line < doc.lines.size() && doc.lines[line].start <= tokens[t].first) {
        const auto &l = doc.lines[line];
        role[t] = "role:" + std::to_string(l.step_index) + ":" +
                  std::string(template_info(l.template_id).key) + ":" + std::to_string(offset++);
      } else {
        role[t] = "role:none:" + std::to_string(t);
      }
    }
  }

  std::vector<float> sign(n_tokens, 0.0f);
  for (const auto &s : statements) {
    if (!s.token_range) continue;
    for (int t = s.token_range->first; t <= s.token_range->second; ++t) {
      if (t < 0 || static_cast<std::size_t>(t) >= n_tokens) throw DomainError("statement token range out of bounds");
      sign[static_cast<std::size_t>(t)] = s.label == Label::Correct ? 1.0f : -1.0f;
    }
  }

  const std::vector<float> direction = seeded_unit_vector(spec.seed, "correctness", dim);
  Rng noise(derive_seed(derive_seed(spec.seed, "noise"), noise_stream));

  ActivationTensor out;
  out.n_tokens = static_cast<std::uint32_t>(n_tokens);
  out.n_layers = static_cast<std::uint32_t>(spec.layers.size());
  out.hidden_dim = static_cast<std::uint32_t>(dim);
  out.values.assign(n_tokens * spec.layers.size() * static_cast<std::size_t>(dim), 0.0f);
  for (std::size_t t = 0; t < n_tokens; ++t) {
    const std::string_view word(doc.text.data() + tokens[t].first, tokens[t].second - tokens[t].first);
    const std::vector<float> tok = seeded_unit_vector(spec.seed, "token:" + std::string(word), dim);
    const std::vector<float> rol = seeded_unit_vector(spec.seed, role[t], dim);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      const LayerMix &m = spec.layers[l];
      auto v = out.vec(t, l);
      for (int d = 0; d < dim; ++d) {
        const auto k = static_cast<std::size_t>(d);
        double x = m.token * tok[k] + m.role * rol[k] + m.correctness * sign[t] * direction[k];
        if (m.noise > 0) x += m.noise * noise.normal();
        v[k] = static_cast<float>(x);
      }
    }
  }
  return out;
}

} // namespace apz
