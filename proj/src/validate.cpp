#include "apz/pipeline.hpp"
#include "pipeline_io.hpp"

#include <algorithm>
#include <set>

namespace apz {

namespace fs = std::filesystem;
using namespace io;

namespace {

constexpr std::size_t kReportedFailures = 20;

CheckResult skipped(const char *name, const std::string &why) {
  return CheckResult{name, CheckStatus::Skipped, {why}};
}

void finish(CheckResult &c) {
  if (c.failures.size() > kReportedFailures) {
    const std::size_t more = c.failures.size() - kReportedFailures;
    c.failures.resize(kReportedFailures);
    c.failures.push_back("... and " + std::to_string(more) + " more");
  }
  if (c.status != CheckStatus::Skipped) c.status = c.failures.empty() ? CheckStatus::Passed : CheckStatus::Failed;
}

// Loads a record file into `out`; a schema error becomes a check failure.
template <typename T, typename F>
bool try_load(const fs::path &dir, const char *name, F from_json, std::vector<T> &out, CheckResult &check) {
  try {
    for (const auto &j : read_jsonl(dir / name)) out.push_back(from_json(j));
    return true;
  } catch (const std::exception &e) {
    check.failures.push_back(e.what());
    return false;
  }
}

CheckResult check_manifest(const fs::path &dir) {
  CheckResult c{"manifest", CheckStatus::Passed, {}};
  if (!fs::exists(dir / kManifest)) return skipped("manifest", "manifest.json not found");
  try {
    const Json m = Json::parse(read_file(dir / kManifest));
    for (const auto &[rel, digest] : m.at("files").items()) {
      const fs::path path = dir / rel;
      if (!fs::exists(path)) {
        c.failures.push_back(rel + ": listed in the manifest but missing");
      } else if (file_sha256(path) != digest.get<std::string>()) {
        c.failures.push_back(rel + ": digest differs from the manifest");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    c.failures.push_back(std::string("manifest.json: ") + e.what());
  }
  finish(c);
  return c;
}

CheckResult check_puzzles(const std::vector<Puzzle> &puzzles, int oracle_sample) {
  CheckResult c{"puzzles", CheckStatus::Passed, {}};
  std::set<std::string> ids;
  for (const auto &p : puzzles) {
    if (!ids.insert(p.id).second) c.failures.push_back("duplicate puzzle id " + p.id);
    try {
      for (const auto &clue : p.clues) {
        if (!clue_satisfied(clue, p.solution)) c.failures.push_back(p.id + ": solution violates a clue");
      }
    } catch (const DomainError &e) {
      c.failures.push_back(p.id + ": " + e.what());
    }
  }
  // evenly spaced sample for the exhaustive uniqueness and minimality check
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(oracle_sample, 0)), puzzles.size());
  for (std::size_t i = 0; i < k; ++i) {
    const Puzzle &p = puzzles[i * puzzles.size() / k];
    try {
      verify_puzzle(p);
    } catch (const DomainError &e) {
      c.failures.push_back(p.id + ": " + e.what());
    }
  }
  finish(c);
  return c;
}

CheckResult check_traces(const fs::path &dir, const std::map<std::string, const Puzzle *> &puzzle_of) {
  if (!fs::exists(dir / kTraces)) return skipped("traces", "traces.jsonl not found");
  CheckResult c{"traces", CheckStatus::Passed, {}};
  std::vector<ReasoningTrace> traces;
  if (try_load(dir, kTraces, trace_from_json, traces, c)) {
    for (const auto &t : traces) {
      const auto it = puzzle_of.find(t.puzzle_id);
      if (it == puzzle_of.end()) {
        c.failures.push_back("trace for unknown puzzle " + t.puzzle_id);
        continue;
      }
      const Arrangement &solution = it->second->solution;
      if (t.final != solution) c.failures.push_back(t.puzzle_id + ": final arrangement differs from the solution");
      for (const auto &s : t.steps) {
        try {
          if (s.claim && !claim_holds(*s.claim, solution)) {
            c.failures.push_back(t.puzzle_id + " step " + std::to_string(s.index) + ": claim is false");
          }
        } catch (const DomainError &e) {
          c.failures.push_back(t.puzzle_id + " step " + std::to_string(s.index) + ": " + e.what());
        }
      }
    }
  }
  finish(c);
  return c;
}

CheckResult check_split(const fs::path &dir, const std::vector<Puzzle> &puzzles) {
  if (!fs::exists(dir / kSplit)) return skipped("split", "split.jsonl not found");
  CheckResult c{"split", CheckStatus::Passed, {}};
  std::vector<SplitRecord> records;
  if (try_load(dir, kSplit, split_record_from_json, records, c)) {
    std::map<std::string, const SplitRecord *> by_id;
    for (const auto &r : records) {
      if (!by_id.emplace(r.id, &r).second) c.failures.push_back("puzzle " + r.id + " assigned more than once");
    }
    std::map<std::string, std::array<std::vector<std::string>, 3>> members; // recomputed key -> ids per split
    for (const auto &p : puzzles) {
      const auto it = by_id.find(p.id);
      if (it == by_id.end()) {
        c.failures.push_back("puzzle " + p.id + " has no split");
        continue;
      }
      const std::string key = canonical_key(p);
      if (it->second->key != key) c.failures.push_back("puzzle " + p.id + ": recorded key differs from its canonical key");
      if (it->second->key_digest != sha256_hex(key)) c.failures.push_back("puzzle " + p.id + ": key digest mismatch");
      members[key][static_cast<int>(it->second->split)].push_back(p.id);
    }
    for (const auto &[key, by_split] : members) {
      int major = 0;
      for (int s = 1; s < 3; ++s) {
        if (by_split[s].size() > by_split[major].size()) major = s;
      }
      for (int s = 0; s < 3; ++s) {
        if (s == major) continue;
        for (const auto &id : by_split[s]) {
          c.failures.push_back("puzzle " + id + " is in " + std::string(to_string(static_cast<Split>(s))) +
                               " but its isomorphism class " + key + " is in " +
                               std::string(to_string(static_cast<Split>(major))));
        }
      }
    }
  }
  finish(c);
  return c;
}

CheckResult check_labels(const fs::path &dir, const std::map<std::string, const Puzzle *> &puzzle_of,
                         const std::vector<GenerationRecord> &gens) {
  if (!fs::exists(dir / kLabels)) return skipped("labels", "labels.jsonl not found");
  CheckResult c{"labels", CheckStatus::Passed, {}};
  std::vector<LabelRecord> labels;
  if (try_load(dir, kLabels, label_record_from_json, labels, c)) {
    std::map<std::string, const GenerationRecord *> gen_of;
    for (const auto &g : gens) gen_of.emplace(g.puzzle_id, &g);
    for (const auto &r : labels) {
      const auto p = puzzle_of.find(r.puzzle_id);
      const auto g = gen_of.find(r.puzzle_id);
      if (p == puzzle_of.end() || g == gen_of.end()) {
        c.failures.push_back("labels for " + r.puzzle_id + " have no puzzle or generation");
        continue;
      }
      const StatementParser parser(p->second->vocabulary());
      LabelResult fresh = label_trace(g->second->text, p->second->solution, parser);
      attach_token_ranges(fresh.statements, g->second->token_spans);
      if (fresh.statements.size() != r.statements.size()) {
        c.failures.push_back(r.puzzle_id + ": " + std::to_string(r.statements.size()) + " statements recorded, " +
                             std::to_string(fresh.statements.size()) + " recomputed");
        continue;
      }
      for (std::size_t i = 0; i < fresh.statements.size(); ++i) {
        const auto &want = fresh.statements[i];
        const auto &got = r.statements[i];
        if (want == got) continue;
        std::string what = r.puzzle_id + " statement " + std::to_string(i) + ": ";
        if (want.label != got.label) {
          what += "recorded " + std::string(to_string(got.label)) + ", recomputed " + std::string(to_string(want.label));
        } else {
          what += "span, claim or token range differs from recomputation";
        }
        c.failures.push_back(what);
      }
    }
  }
  finish(c);
  return c;
}

} // namespace

namespace io {

void check_generations(const std::vector<GenerationRecord> &gens, CheckResult &out) {
  std::set<std::string> seen;
  for (const auto &g : gens) {
    if (!seen.insert(g.puzzle_id).second) out.failures.push_back("duplicate generation for " + g.puzzle_id);
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < g.token_spans.size(); ++i) {
      const auto [start, end] = g.token_spans[i];
      if (start >= end || end > g.text.size() || start < prev_end) {
        out.failures.push_back(g.puzzle_id + ": token span " + std::to_string(i) + " [" + std::to_string(start) + ", " +
                               std::to_string(end) + ") is empty, out of order or outside the text");
        break;
      }
      prev_end = end;
    }
    for (const auto &line : g.lines) {
      if (line.start > line.end || line.end > g.text.size()) {
        out.failures.push_back(g.puzzle_id + ": line " + std::to_string(line.step_index) + " lies outside the text");
        break;
      }
    }
  }
}

void check_activations(const fs::path &dir, const std::vector<GenerationRecord> &gens, CheckResult &out) {
  std::optional<std::pair<std::uint32_t, std::uint32_t>> shape; // layers, hidden_dim
  for (const auto &g : gens) {
    const std::string rel = activation_rel(g.puzzle_id);
    if (!fs::exists(dir / rel)) {
      out.failures.push_back(rel + ": missing");
      continue;
    }
    try {
      const std::string bytes = read_file(dir / rel);
      const ActivationTensor t = decode_activations(bytes);
      if (t.n_tokens != g.token_spans.size()) {
        out.failures.push_back(rel + ": " + std::to_string(t.n_tokens) + " tokens but the generation has " +
                               std::to_string(g.token_spans.size()) + " spans");
      }
      const std::pair<std::uint32_t, std::uint32_t> s{t.n_layers, t.hidden_dim};
      if (!shape) shape = s;
      if (*shape != s) out.failures.push_back(rel + ": layer count or hidden size differs from other documents");
      if (encode_activations(t) != bytes) out.failures.push_back(rel + ": does not round-trip");
    } catch (const FormatError &e) {
      out.failures.push_back(rel + ": " + e.what());
    }
  }
}

} // namespace io

bool ValidationReport::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult &c) { return c.status == CheckStatus::Failed; });
}

const CheckResult *ValidationReport::find(std::string_view name) const {
  for (const auto &c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Json ValidationReport::to_json() const {
  Json out{{"passed", passed()}, {"checks", Json::array()}};
  for (const auto &c : checks) {
    const char *status = c.status == CheckStatus::Passed ? "passed" : c.status == CheckStatus::Failed ? "failed" : "skipped";
    out["checks"].push_back(Json{{"name", c.name}, {"status", status}, {"failures", c.failures}});
  }
  return out;
}

ValidationReport validate_corpus(const fs::path &dir, int oracle_sample) {
  if (!fs::exists(dir / kPuzzles)) throw StageError("missing input " + (dir / kPuzzles).string(), kExitMissingInput);
  ValidationReport report;
  report.checks.push_back(check_manifest(dir));

  std::vector<Puzzle> puzzles;
  CheckResult pc{"puzzles", CheckStatus::Passed, {}};
  if (!try_load(dir, kPuzzles, puzzle_from_json, puzzles, pc)) {
    finish(pc);
    report.checks.push_back(pc);
    return report;
  }
  report.checks.push_back(check_puzzles(puzzles, oracle_sample));
  std::map<std::string, const Puzzle *> puzzle_of;
  for (const auto &p : puzzles) puzzle_of.emplace(p.id, &p);

  report.checks.push_back(check_traces(dir, puzzle_of));
  report.checks.push_back(check_split(dir, puzzles));

  std::vector<GenerationRecord> gens;
  if (fs::exists(dir / kGenerations)) {
    CheckResult gc{"generations", CheckStatus::Passed, {}};
    if (try_load(dir, kGenerations, generation_from_json, gens, gc)) check_generations(gens, gc);
    finish(gc);
    report.checks.push_back(gc);
    CheckResult ac{"activations", CheckStatus::Passed, {}};
    check_activations(dir, gens, ac);
    finish(ac);
    report.checks.push_back(ac);
  } else {
    report.checks.push_back(skipped("generations", "generations.jsonl not found"));
    report.checks.push_back(skipped("activations", "generations.jsonl not found"));
  }
  report.checks.push_back(check_labels(dir, puzzle_of, gens));
  return report;
}

} // namespace apz
