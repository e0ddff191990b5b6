#include "apz/isomorphism.hpp"

#include "apz/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace apz {

namespace {

// Entities encode as 1..n for people and n+1..2n for color wearers, 0 for none.
struct RawClue {
  int kind;
  int end;
  int subject; // person index or color index, before renaming
  bool subject_is_color;
  int object;
  bool object_is_color;
};

using Code = std::uint32_t;

Code pack(int kind, int end, int s, int o) {
  return static_cast<Code>(((kind * 2 + end) << 16) | (s << 8) | o);
}

std::string entity_code(int code, int n) {
  if (code == 0) return "-";
  return code <= n ? "P" + std::to_string(code) : "C" + std::to_string(code - n);
}

std::string render_key(const std::vector<Code> &codes, int n) {
  static constexpr const char *kinds[] = {"at", "not", "right", "left"};
  std::string out = "n" + std::to_string(n);
  for (Code c : codes) {
    const int ke = static_cast<int>(c >> 16);
    out += '|';
    out += kinds[ke / 2];
    if (ke / 2 < 2) out += ke % 2 ? ":R" : ":L";
    out += ':' + entity_code(static_cast<int>((c >> 8) & 0xff), n);
    if (ke / 2 >= 2) out += ':' + entity_code(static_cast<int>(c & 0xff), n);
  }
  return out;
}

} // namespace

std::string canonical_key(std::span<const Clue> clues, const Vocabulary &vocab) {
  const int n = vocab.n;
  if (n < 2 || n > kMaxOracleN) throw DomainError("canonical_key: n=" + std::to_string(n) + " outside [2, 6]");
  std::vector<RawClue> raw;
  auto index_of = [&](const Entity &e) {
    const int i = e.kind == EntityKind::Person ? vocab.name_index(e.value) : vocab.color_index(e.value);
    if (i < 0) throw DomainError("canonical_key: unknown entity '" + e.value + "'");
    return i;
  };
  for (const auto &c : clues) {
    RawClue r{static_cast<int>(c.kind), c.relative() ? 0 : static_cast<int>(c.end), index_of(c.subject),
              c.subject.kind == EntityKind::ColorWearer, -1, false};
    if (c.relative()) {
      r.object = index_of(c.object);
      r.object_is_color = c.object.kind == EntityKind::ColorWearer;
    }
    raw.push_back(r);
  }

  std::vector<int> pp(static_cast<std::size_t>(n)), cp(static_cast<std::size_t>(n));
  std::iota(pp.begin(), pp.end(), 0);
  std::vector<Code> best, cur(raw.size());
  bool have = false;
  do {
    std::iota(cp.begin(), cp.end(), 0);
    do {
      auto code_of = [&](int idx, bool color) { return color ? n + 1 + cp[static_cast<std::size_t>(idx)] : 1 + pp[static_cast<std::size_t>(idx)]; };
      for (std::size_t k = 0; k < raw.size(); ++k) {
        const RawClue &r = raw[k];
        cur[k] = pack(r.kind, r.end, code_of(r.subject, r.subject_is_color),
                      r.object < 0 ? 0 : code_of(r.object, r.object_is_color));
      }
      std::sort(cur.begin(), cur.end());
      if (!have || cur < best) {
        best = cur;
        have = true;
      }
    } while (std::next_permutation(cp.begin(), cp.end()));
  } while (std::next_permutation(pp.begin(), pp.end()));
  return render_key(best, n);
}

std::string canonical_key(const Puzzle &puzzle) { return canonical_key(puzzle.clues, puzzle.vocabulary()); }

std::string_view to_string(Split s) {
  switch (s) {
  case Split::Train: return "train";
  case Split::Validation: return "validation";
  case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> split_from_string(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation") return Split::Validation;
  if (text == "test") return Split::Test;
  return std::nullopt;
}

SplitAssignment split_dataset(std::span<const KeyedPuzzle> puzzles, std::array<double, 3> fractions,
                              std::uint64_t seed) {
  double sum = 0;
  for (double f : fractions) {
    if (!(f > 0)) throw DomainError("split_dataset: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("split_dataset: fractions must sum to 1");

  std::map<std::string, std::vector<std::string>> classes;
  for (const auto &p : puzzles) classes[p.key].push_back(p.id);
  if (classes.size() < 3) {
    throw DomainError("split_dataset: need at least 3 isomorphism classes, got " + std::to_string(classes.size()));
  }

  std::vector<const std::vector<std::string> *> order;
  for (const auto &[key, ids] : classes) order.push_back(&ids);
  Rng rng(seed);
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [](auto *a, auto *b) { return a->size() > b->size(); });

  SplitAssignment out;
  const double total = static_cast<double>(puzzles.size());
  for (int s = 0; s < 3; ++s) out.targets[static_cast<std::size_t>(s)] = fractions[static_cast<std::size_t>(s)] * total;
  for (const auto *ids : order) {
    std::size_t pick = 0;
    double best = -1e300;
    for (std::size_t s = 0; s < 3; ++s) {
      const double deficit = out.targets[s] - out.counts[s];
      if (deficit > best) {
        best = deficit;
        pick = s;
      }
    }
    for (const auto &id : *ids) {
      if (!out.by_id.emplace(id, static_cast<Split>(pick)).second) {
        throw DomainError("split_dataset: duplicate puzzle id '" + id + "'");
      }
    }
    out.counts[pick] += static_cast<int>(ids->size());
  }
  return out;
}

SplitAssignment split_dataset(std::span<const Puzzle> puzzles, std::array<double, 3> fractions, std::uint64_t seed) {
  std::vector<KeyedPuzzle> keyed;
  keyed.reserve(puzzles.size());
  for (const auto &p : puzzles) keyed.push_back({p.id, canonical_key(p)});
  return split_dataset(keyed, fractions, seed);
}

std::string substitute(std::string_view text, const Substitution &sub) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    std::string word(text.substr(i, j - i));
    if (auto it = sub.names.find(word); it != sub.names.end()) {
      out += it->second;
    } else if (auto c = sub.colors.find(word); c != sub.colors.end()) {
      out += c->second;
    } else {
      std::string lowered = word;
      lowered[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(lowered[0])));
      auto cap = sub.colors.find(lowered);
      out += cap != sub.colors.end() && lowered != word ? capitalize_first(cap->second) : word;
    }
    i = j;
  }
  return out;
}

std::optional<Substitution> traces_isomorphic(const ReasoningTrace &a, const ReasoningTrace &b) {
  if (a.n != b.n || a.steps.size() != b.steps.size()) return std::nullopt;
  if (a.final.size() != a.n || b.final.size() != b.n) return std::nullopt;
  Substitution sub;
  for (int q = 0; q < a.n; ++q) {
    const auto qi = static_cast<std::size_t>(q);
    sub.names[a.final.person_at[qi]] = b.final.person_at[qi];
    sub.colors[a.final.color_at[qi]] = b.final.color_at[qi];
  }
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const auto &sa = a.steps[k];
    const auto &sb = b.steps[k];
    if (sa.kind != sb.kind || sa.template_id != sb.template_id) return std::nullopt;
    if (substitute(sa.text, sub) != sb.text) return std::nullopt;
  }
  return sub;
}

} // namespace apz
