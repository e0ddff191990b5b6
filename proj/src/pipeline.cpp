#include "apz/pipeline.hpp"

#include "apz/abstraction.hpp"
#include "apz/classifier.hpp"
#include "apz/generator.hpp"
#include "apz/isomorphism.hpp"
#include "pipeline_io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sys/wait.h>
#include <unistd.h>

namespace apz {

namespace fs = std::filesystem;
using namespace io;

namespace {

constexpr const char *kToolVersion = "1.0.0";

Json default_synth_layers() {
  Json layers = Json::array();
  for (int l = 0; l < 8; ++l) {
    const double depth = l / 7.0;
    layers.push_back(Json{{"token", 1.0 - depth},
                          {"role", depth},
                          {"correctness", l >= 4 && l <= 6 ? 0.8 : 0.0},
                          {"noise", 0.05}});
  }
  return layers;
}

void merge_into(Json &base, const Json &user, const std::string &where) {
  if (!user.is_object()) throw StageError("config " + (where.empty() ? "root" : where) + " must be an object", kExitUsage);
  for (const auto &[key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw StageError("unknown config key '" + path + "'", kExitUsage);
    Json &slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
      continue;
    }
    const bool ok = slot.is_null() ? (value.is_array() || value.is_null())
                                   : (slot.is_number() && value.is_number()) ||
                                         (slot.is_array() && value.is_array()) ||
                                         (slot.is_string() && value.is_string()) ||
                                         (slot.is_boolean() && value.is_boolean());
    if (!ok) throw StageError("config key '" + path + "' has the wrong type", kExitUsage);
    slot = value;
  }
}

template <typename T>
T get(const Json &j, const char *key, const char *section) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw StageError(std::string("config ") + section + "." + key + " is invalid", kExitUsage);
  }
}

struct Context {
  fs::path dir;
  std::uint64_t seed;
  Json cfg;
  int jobs;
};

std::string puzzle_id_for(std::size_t i, std::size_t count) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::max<std::size_t>(6, std::to_string(count > 0 ? count - 1 : 0).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "p" + digits;
}

void write_jsonl(const fs::path &path, const std::vector<Json> &records) { atomic_write(path, jsonl_text(records)); }

std::vector<Puzzle> load_puzzles(const fs::path &dir) { return load<Puzzle>(dir, kPuzzles, puzzle_from_json); }
std::vector<ReasoningTrace> load_traces(const fs::path &dir) { return load<ReasoningTrace>(dir, kTraces, trace_from_json); }
std::vector<GenerationRecord> load_generations(const fs::path &dir) {
  return load<GenerationRecord>(dir, kGenerations, generation_from_json);
}
std::vector<LabelRecord> load_labels(const fs::path &dir) { return load<LabelRecord>(dir, kLabels, label_record_from_json); }
std::vector<SplitRecord> load_split(const fs::path &dir) { return load<SplitRecord>(dir, kSplit, split_record_from_json); }

std::vector<std::vector<int>> probe_sets(const Json &cfg) { return get<std::vector<std::vector<int>>>(cfg.at("train"), "probes", "train"); }

std::string probe_name(const std::vector<int> &layers) {
  std::string out = "layers";
  for (int l : layers) out += "-" + std::to_string(l);
  return out;
}

void clear_dir(const fs::path &dir, const std::string &extension) {
  if (!fs::exists(dir)) return;
  for (const auto &e : fs::directory_iterator(dir)) {
    if (e.path().extension() == extension) fs::remove(e.path());
  }
}

// ---------------------------------------------------------------------------

Json stage_gen(const Context &c, std::vector<std::string> &outputs) {
  const Json &g = c.cfg.at("gen");
  const auto count = get<std::size_t>(g, "count", "gen");
  const auto ns = get<std::vector<int>>(g, "n", "gen");
  if (ns.empty()) throw StageError("config gen.n must list at least one size", kExitUsage);
  GeneratorConfig base;
  base.name_pool = get<std::vector<std::string>>(g, "name_pool", "gen");
  base.color_pool = get<std::vector<std::string>>(g, "color_pool", "gen");
  base.max_attempts = get<int>(g, "max_attempts", "gen");
  for (int n : ns) {
    base.n = n;
    try {
      validate_config(base);
    } catch (const DomainError &e) {
      throw StageError(std::string("config gen: ") + e.what(), kExitUsage);
    }
  }
  const std::uint64_t stage_seed = derive_seed(c.seed, "gen");
  const auto puzzles = parallel_map<Puzzle>(count, c.jobs, [&](std::size_t i) {
    GeneratorConfig cfg = base;
    cfg.n = ns[i % ns.size()];
    cfg.seed = derive_seed(stage_seed, i);
    cfg.id = puzzle_id_for(i, count);
    Puzzle p = generate_puzzle(cfg);
    verify_puzzle(p);
    return p;
  });
  std::vector<Json> records;
  Json per_n = Json::object();
  for (const auto &p : puzzles) {
    records.push_back(to_json(p));
    per_n[std::to_string(p.n)] = per_n.value(std::to_string(p.n), 0) + 1;
  }
  write_jsonl(c.dir / kPuzzles, records);
  outputs.push_back(kPuzzles);
  return Json{{"puzzles", puzzles.size()}, {"by_n", per_n}, {"oracle_verified", puzzles.size()}};
}

Json stage_solve(const Context &c, std::vector<std::string> &outputs) {
  const auto puzzles = load_puzzles(c.dir);
  const auto traces =
      parallel_map<ReasoningTrace>(puzzles.size(), c.jobs, [&](std::size_t i) { return solve_with_trace(puzzles[i]); });
  std::vector<Json> records;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].final != puzzles[i].solution) {
      throw StageError("solver disagrees with the stored solution of " + puzzles[i].id, kExitRuntime);
    }
    steps += traces[i].steps.size();
    records.push_back(to_json(traces[i]));
  }
  write_jsonl(c.dir / kTraces, records);
  outputs.push_back(kTraces);
  return Json{{"traces", traces.size()}, {"steps", steps}};
}

Json stage_synth(const Context &c, std::vector<std::string> &outputs) {
  const Json &s = c.cfg.at("synth");
  SyntheticSpec spec;
  spec.seed = derive_seed(c.seed, "synth");
  spec.hidden_dim = get<int>(s, "hidden_dim", "synth");
  for (const auto &l : s.at("layers")) {
    spec.layers.push_back(LayerMix{get<double>(l, "token", "synth.layers"), get<double>(l, "role", "synth.layers"),
                                   get<double>(l, "correctness", "synth.layers"),
                                   get<double>(l, "noise", "synth.layers")});
  }
  const auto rate = get<double>(s, "corruption_rate", "synth");
  if (rate < 0 || rate > 1) throw StageError("config synth.corruption_rate must be in [0, 1]", kExitUsage);
  if (spec.hidden_dim < 8 || spec.layers.empty()) {
    throw StageError("config synth needs hidden_dim >= 8 and at least one layer", kExitUsage);
  }

  const auto puzzles = load_puzzles(c.dir);
  const auto traces = load_traces(c.dir);
  const auto trace_of = index_by<ReasoningTrace>(traces, [](const ReasoningTrace &t) { return t.puzzle_id; });
  clear_dir(c.dir / "activations", ".apzact");
  fs::create_directories(c.dir / "activations");

  const auto gens = parallel_map<GenerationRecord>(puzzles.size(), c.jobs, [&](std::size_t i) {
    const Puzzle &p = puzzles[i];
    const auto it = trace_of.find(p.id);
    if (it == trace_of.end()) throw StageError("no trace for puzzle " + p.id, kExitMissingInput);
    Rng rng(derive_seed(spec.seed, "corrupt:" + p.id));
    const SynthDocument doc = corrupt_document(*it->second, rate, rng);
    const auto tokens = reference_tokenize(doc.text);
    const StatementParser parser(p.vocabulary());
    LabelResult labels = label_trace(doc.text, p.solution, parser);
    attach_token_ranges(labels.statements, tokens);
    const ActivationTensor t = synthesize_activations(spec, doc, tokens, labels.statements, p.id);
    atomic_write(c.dir / activation_rel(p.id), encode_activations(t));
    GenerationRecord g;
    g.puzzle_id = p.id;
    g.source = "synthetic";
    g.text = doc.text;
    g.token_spans = tokens;
    g.lines = doc.lines;
    g.capture = Json{{"mode", "synthetic"}, {"tokenizer", "reference"}, {"corruption_rate", rate}};
    return g;
  });
  std::vector<Json> records;
  std::size_t tokens = 0;
  for (const auto &g : gens) {
    records.push_back(to_json(g));
    outputs.push_back(activation_rel(g.puzzle_id));
    tokens += g.token_spans.size();
  }
  write_jsonl(c.dir / kGenerations, records);
  outputs.push_back(kGenerations);
  return Json{{"documents", gens.size()}, {"tokens", tokens}, {"layers", spec.layers.size()},
              {"hidden_dim", spec.hidden_dim}};
}

int run_command(const std::vector<std::string> &argv) {
  std::vector<char *> args;
  for (const auto &a : argv) args.push_back(const_cast<char *>(a.c_str()));
  args.push_back(nullptr);
  std::fflush(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw StageError("fork failed", kExitRuntime);
  if (pid == 0) {
    ::execvp(args[0], args.data());
    std::perror(args[0]);
    ::_exit(127);
  }
  int status = 0;
  if (::waitpid(pid, &status, 0) < 0) throw StageError("waitpid failed", kExitRuntime);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

Json stage_extract(const Context &c, std::vector<std::string> &outputs) {
  auto command = get<std::vector<std::string>>(c.cfg.at("extract"), "command", "extract");
  if (command.empty()) throw StageError("config extract.command is empty; no adapter configured", kExitUsage);
  const auto puzzles = load_puzzles(c.dir);
  fs::create_directories(c.dir / "activations");
  command.insert(command.end(), {"--puzzles", (c.dir / kPuzzles).string(), "--out-dir", c.dir.string()});
  const int status = run_command(command);
  if (status != 0) throw StageError("adapter exited with status " + std::to_string(status), kExitRuntime);

  const auto gens = load_generations(c.dir);
  CheckResult check{"adapter output", CheckStatus::Passed, {}};
  check_generations(gens, check);
  check_activations(c.dir, gens, check);
  const auto known = index_by<Puzzle>(puzzles, [](const Puzzle &p) { return p.id; });
  for (const auto &g : gens) {
    if (!known.count(g.puzzle_id)) check.failures.push_back("generation for unknown puzzle " + g.puzzle_id);
  }
  if (!check.failures.empty()) {
    std::string msg = "adapter output failed validation:";
    for (const auto &f : check.failures) msg += "\n  " + f;
    throw StageError(msg, kExitValidation);
  }
  outputs.push_back(kGenerations);
  for (const auto &g : gens) outputs.push_back(activation_rel(g.puzzle_id));
  return Json{{"documents", gens.size()}};
}

Json stage_label(const Context &c, std::vector<std::string> &outputs) {
  const auto puzzles = load_puzzles(c.dir);
  const auto gens = load_generations(c.dir);
  const auto puzzle_of = index_by<Puzzle>(puzzles, [](const Puzzle &p) { return p.id; });
  const auto records = parallel_map<LabelRecord>(gens.size(), c.jobs, [&](std::size_t i) {
    const auto &g = gens[i];
    const auto it = puzzle_of.find(g.puzzle_id);
    if (it == puzzle_of.end()) throw StageError("generation for unknown puzzle " + g.puzzle_id, kExitMissingInput);
    const StatementParser parser(it->second->vocabulary());
    LabelResult r = label_trace(g.text, it->second->solution, parser);
    attach_token_ranges(r.statements, g.token_spans);
    return LabelRecord{g.puzzle_id, std::move(r.statements), r.diagnostics};
  });
  std::vector<Json> out;
  std::size_t statements = 0, correct = 0, sentences = 0, unmatched = 0, dropped = 0;
  for (const auto &r : records) {
    out.push_back(to_json(r));
    statements += r.statements.size();
    for (const auto &s : r.statements) correct += s.label == Label::Correct;
    sentences += static_cast<std::size_t>(r.diagnostics.sentences);
    unmatched += static_cast<std::size_t>(r.diagnostics.unmatched);
    dropped += static_cast<std::size_t>(r.diagnostics.out_of_universe);
  }
  write_jsonl(c.dir / kLabels, out);
  outputs.push_back(kLabels);
  return Json{{"documents", records.size()},
              {"statements", statements},
              {"correct", correct},
              {"incorrect", statements - correct},
              {"unmatched_rate", sentences ? static_cast<double>(unmatched) / static_cast<double>(sentences) : 0.0},
              {"out_of_universe", dropped}};
}

Json stage_split(const Context &c, std::vector<std::string> &outputs) {
  const auto fractions = get<std::array<double, 3>>(c.cfg.at("split"), "fractions", "split");
  const auto puzzles = load_puzzles(c.dir);
  const auto keys = parallel_map<std::string>(puzzles.size(), c.jobs,
                                              [&](std::size_t i) { return canonical_key(puzzles[i]); });
  std::vector<KeyedPuzzle> keyed;
  for (std::size_t i = 0; i < puzzles.size(); ++i) keyed.push_back({puzzles[i].id, keys[i]});
  SplitAssignment a;
  try {
    a = split_dataset(keyed, fractions, derive_seed(c.seed, "split"));
  } catch (const DomainError &e) {
    throw StageError(std::string("split: ") + e.what(), kExitUsage);
  }
  std::vector<Json> out;
  for (const auto &k : keyed) out.push_back(to_json(SplitRecord{k.id, k.key, sha256_hex(k.key), a.by_id.at(k.id)}));
  write_jsonl(c.dir / kSplit, out);
  outputs.push_back(kSplit);
  std::set<std::string> classes(keys.begin(), keys.end());
  return Json{{"classes", classes.size()},
              {"counts", {{"train", a.counts[0]}, {"validation", a.counts[1]}, {"test", a.counts[2]}}},
              {"targets", {{"train", a.targets[0]}, {"validation", a.targets[1]}, {"test", a.targets[2]}}}};
}

struct ExampleSource {
  std::vector<LabelRecord> labels;
  std::map<std::string, Split> split_of;
  std::map<std::string, ActivationTensor> tensors;
};

ExampleSource load_examples_source(const Context &c) {
  ExampleSource src;
  src.labels = load_labels(c.dir);
  for (const auto &r : load_split(c.dir)) src.split_of[r.id] = r.split;
  for (const auto &r : src.labels) {
    const fs::path path = c.dir / activation_rel(r.puzzle_id);
    if (!fs::exists(path)) throw StageError("missing input " + path.string(), kExitMissingInput);
    src.tensors.emplace(r.puzzle_id, read_activations(path));
  }
  return src;
}

std::vector<ProbeExample> examples_for(const ExampleSource &src, Split split, const std::vector<int> &layers,
                                       BuildDiagnostics &diag) {
  std::vector<ProbeExample> out;
  for (const auto &r : src.labels) {
    const auto it = src.split_of.find(r.puzzle_id);
    if (it == src.split_of.end()) throw StageError("puzzle " + r.puzzle_id + " has no split", kExitMissingInput);
    if (it->second != split) continue;
    append_examples(out, src.tensors.at(r.puzzle_id), r.statements, layers, r.puzzle_id, diag);
  }
  return out;
}

Json metrics_json(const ProbeMetrics &m) {
  return Json{{"count", m.count},
              {"accuracy", m.accuracy},
              {"true_correct", m.true_correct},
              {"false_correct", m.false_correct},
              {"true_incorrect", m.true_incorrect},
              {"false_incorrect", m.false_incorrect},
              {"precision_correct", m.precision_correct},
              {"recall_correct", m.recall_correct},
              {"precision_incorrect", m.precision_incorrect},
              {"recall_incorrect", m.recall_incorrect}};
}

Json stage_train(const Context &c, std::vector<std::string> &outputs) {
  const Json &t = c.cfg.at("train");
  TrainConfig base;
  base.epochs = get<int>(t, "epochs", "train");
  base.batch_size = get<int>(t, "batch_size", "train");
  base.learning_rate = get<double>(t, "learning_rate", "train");
  base.arch.conv_channels = get<int>(t, "conv_channels", "train");
  base.arch.hidden1 = get<int>(t, "hidden1", "train");
  base.arch.hidden2 = get<int>(t, "hidden2", "train");
  if (base.epochs <= 0) throw StageError("config train.epochs must be positive", kExitUsage);
  const ExampleSource src = load_examples_source(c);
  clear_dir(c.dir / "models", ".ckpt");
  fs::create_directories(c.dir / "models");
  std::vector<Json> log;
  Json summary = Json::array();
  for (const auto &layers : probe_sets(c.cfg)) {
    BuildDiagnostics diag;
    const auto train_x = examples_for(src, Split::Train, layers, diag);
    const auto val_x = examples_for(src, Split::Validation, layers, diag);
    TrainConfig cfg = base;
    cfg.layers = layers;
    cfg.seed = derive_seed(c.seed, "train:" + probe_name(layers));
    TrainResult r;
    try {
      r = train(train_x, val_x, cfg);
    } catch (const DomainError &e) {
      throw StageError("train " + probe_name(layers) + ": " + e.what(), kExitRuntime);
    }
    const std::string rel = "models/" + probe_name(layers) + ".ckpt";
    const fs::path tmp = c.dir / (rel + ".tmp");
    write_checkpoint(r.model, CheckpointInfo{cfg.seed, cfg.epochs, cfg.batch_size, cfg.learning_rate, layers, r.best_epoch},
                     tmp);
    fs::rename(tmp, c.dir / rel);
    outputs.push_back(rel);
    Json history = Json::array();
    for (const auto &h : r.history) {
      history.push_back(Json{{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"validation_accuracy", h.validation_accuracy}});
    }
    log.push_back(Json{{"schema", kSchemaVersion},
                       {"probe", probe_name(layers)},
                       {"layers", layers},
                       {"train_examples", train_x.size()},
                       {"validation_examples", val_x.size()},
                       {"skipped_short", diag.skipped_short},
                       {"skipped_out_of_range", diag.skipped_out_of_range},
                       {"skipped_unaligned", diag.skipped_unaligned},
                       {"best_epoch", r.best_epoch},
                       {"best_validation_accuracy", r.best_validation_accuracy},
                       {"history", history}});
    summary.push_back(Json{{"probe", probe_name(layers)}, {"best_epoch", r.best_epoch},
                           {"best_validation_accuracy", r.best_validation_accuracy}});
  }
  write_jsonl(c.dir / kTraining, log);
  outputs.push_back(kTraining);
  return Json{{"probes", summary}};
}

Json stage_eval(const Context &c, std::vector<std::string> &outputs) {
  const auto split_name = get<std::string>(c.cfg.at("eval"), "split", "eval");
  const auto split = split_from_string(split_name);
  if (!split) throw StageError("config eval.split must be train, validation or test", kExitUsage);
  const ExampleSource src = load_examples_source(c);
  std::vector<Json> rows;
  for (const auto &layers : probe_sets(c.cfg)) {
    const fs::path path = c.dir / "models" / (probe_name(layers) + ".ckpt");
    if (!fs::exists(path)) throw StageError("missing input " + path.string(), kExitMissingInput);
    const ProbeModel model = read_checkpoint(path);
    BuildDiagnostics diag;
    const auto xs = examples_for(src, *split, layers, diag);
    if (xs.empty()) throw StageError("no " + split_name + " examples for " + probe_name(layers), kExitRuntime);
    Json row{{"schema", kSchemaVersion}, {"probe", probe_name(layers)}, {"layers", layers}, {"split", split_name}};
    row.update(metrics_json(evaluate(model, xs)));
    rows.push_back(std::move(row));
  }
  write_jsonl(c.dir / kMetrics, rows);
  outputs.push_back(kMetrics);
  Json summary = Json::array();
  for (const auto &r : rows) summary.push_back(Json{{"probe", r["probe"]}, {"accuracy", r["accuracy"]}});
  return Json{{"metrics", summary}};
}

Json stage_abstraction(const Context &c, std::vector<std::string> &outputs) {
  const Json &a = c.cfg.at("abstraction");
  const auto k = get<std::size_t>(a, "pairs", "abstraction");
  const auto layers = get<std::vector<int>>(a, "layers", "abstraction");
  const auto puzzles = load_puzzles(c.dir);
  const auto traces = load_traces(c.dir);
  const auto gens = load_generations(c.dir);
  const auto trace_of = index_by<ReasoningTrace>(traces, [](const ReasoningTrace &t) { return t.puzzle_id; });
  const auto keys = parallel_map<std::string>(puzzles.size(), c.jobs,
                                              [&](std::size_t i) { return canonical_key(puzzles[i]); });
  std::map<std::string, std::string> key_of;
  for (std::size_t i = 0; i < puzzles.size(); ++i) key_of[puzzles[i].id] = keys[i];

  std::vector<ProbeDocument> docs;
  std::map<std::string, ActivationTensor> tensors;
  std::size_t skipped = 0;
  for (const auto &g : gens) {
    const auto t = trace_of.find(g.puzzle_id);
    if (t == trace_of.end() || g.lines.size() < t->second->steps.size() || !key_of.count(g.puzzle_id)) {
      ++skipped;
      continue;
    }
    ProbeDocument d{g.puzzle_id, key_of[g.puzzle_id], t->second, g.lines, g.token_spans, {}};
    for (std::size_t s = 0; s < t->second->steps.size(); ++s) {
      const auto &line = g.lines[s];
      const bool same = line.step_index == static_cast<int>(s) && line.end <= g.text.size() &&
                        std::string_view(g.text).substr(line.start, line.end - line.start) == t->second->steps[s].text;
      d.pristine.push_back(same);
    }
    docs.push_back(std::move(d));
    const fs::path path = c.dir / activation_rel(g.puzzle_id);
    if (!fs::exists(path)) throw StageError("missing input " + path.string(), kExitMissingInput);
    tensors.emplace(g.puzzle_id, read_activations(path));
  }

  std::vector<LinePair> pairs;
  Json sampling = Json::object();
  for (Condition cond : {Condition::Identical, Condition::Isomorphic}) {
    SampleDiagnostics diag;
    try {
      const auto got = sample_line_pairs(docs, cond, k, derive_seed(c.seed, "abstraction:" + std::string(to_string(cond))),
                                         &diag);
      pairs.insert(pairs.end(), got.begin(), got.end());
    } catch (const DomainError &) {
    }
    sampling[std::string(to_string(cond))] = Json{{"eligible", diag.eligible},
                                                  {"returned", diag.returned},
                                                  {"shortfall", diag.returned ? diag.shortfall : k},
                                                  {"excluded_token_count", diag.excluded_token_count}};
  }
  const auto lookup = [&](const std::string &id) -> const ActivationTensor * {
    const auto it = tensors.find(id);
    return it == tensors.end() ? nullptr : &it->second;
  };
  AbstractionProfile profile;
  try {
    profile = layer_profile(pairs, lookup, layers);
  } catch (const DomainError &e) {
    throw StageError(std::string("abstraction: ") + e.what(), kExitUsage);
  }
  std::vector<Json> rows;
  for (const auto &r : profile.rows) {
    rows.push_back(Json{{"schema", kSchemaVersion}, {"layer", r.layer}, {"condition", to_string(r.condition)},
                        {"mean_correlation", r.mean}, {"pairs", r.pairs}});
  }
  write_jsonl(c.dir / kAbstraction, rows);
  outputs.push_back(kAbstraction);
  return Json{{"documents", docs.size()},
              {"skipped_documents", skipped},
              {"sampling", sampling},
              {"dropped_pairs", profile.dropped_pairs},
              {"zero_variance", profile.zero_variance}};
}

// ---------------------------------------------------------------------------

struct StageSpec {
  const char *name;
  std::vector<std::string> inputs; // files whose recorded digests must still match
  bool activation_inputs;
  bool model_inputs;
  Json (*run)(const Context &, std::vector<std::string> &);
};

const std::vector<StageSpec> &stages() {
  static const std::vector<StageSpec> table{
      {"gen", {}, false, false, stage_gen},
      {"solve", {kPuzzles}, false, false, stage_solve},
      {"synth", {kPuzzles, kTraces}, false, false, stage_synth},
      {"extract", {kPuzzles}, false, false, stage_extract},
      {"label", {kPuzzles, kGenerations}, false, false, stage_label},
      {"split", {kPuzzles}, false, false, stage_split},
      {"train", {kLabels, kSplit}, true, false, stage_train},
      {"eval", {kLabels, kSplit}, true, true, stage_eval},
      {"abstraction", {kPuzzles, kTraces, kGenerations}, true, false, stage_abstraction},
  };
  return table;
}

Json load_manifest(const fs::path &dir, const Json &cfg, std::uint64_t seed) {
  const fs::path path = dir / kManifest;
  if (fs::exists(path)) {
    try {
      Json m = Json::parse(read_file(path));
      if (m.value("schema", 0) != kSchemaVersion) throw StageError("manifest schema mismatch", kExitUsage);
      return m;
    } catch (const nlohmann::json::exception &e) {
      throw StageError(std::string("manifest.json: ") + e.what(), kExitUsage);
    }
  }
  return Json{{"schema", kSchemaVersion}, {"tool", "apz"}, {"version", kToolVersion}, {"seed", seed},
              {"config", cfg},            {"stages", Json::object()}, {"files", Json::object()}};
}

void verify_inputs(const fs::path &dir, const Json &manifest, const StageSpec &spec) {
  const Json &files = manifest.at("files");
  auto check = [&](const std::string &rel) {
    if (!files.contains(rel)) return;
    const fs::path path = dir / rel;
    if (!fs::exists(path)) throw StageError("missing input " + path.string(), kExitMissingInput);
    if (file_sha256(path) != files.at(rel).get<std::string>()) {
      throw StageError("digest mismatch for " + rel + " (changed since it was recorded)", kExitDigestMismatch);
    }
  };
  for (const auto &rel : spec.inputs) check(rel);
  for (const auto &[rel, digest] : files.items()) {
    if ((spec.activation_inputs && rel.rfind("activations/", 0) == 0) ||
        (spec.model_inputs && rel.rfind("models/", 0) == 0)) {
      check(rel);
    }
  }
}

} // namespace

Json default_config() {
  return Json{
      {"gen",
       {{"count", 100},
        {"n", {2}},
        {"max_attempts", 200},
        {"name_pool", default_name_pool()},
        {"color_pool", default_color_pool()}}},
      {"split", {{"fractions", {0.77, 0.115, 0.115}}}},
      {"synth", {{"hidden_dim", 64}, {"corruption_rate", 0.5}, {"layers", default_synth_layers()}}},
      {"extract", {{"command", Json::array()}}},
      {"train",
       {{"epochs", 50},
        {"batch_size", 64},
        {"learning_rate", 1e-3},
        {"conv_channels", 128},
        {"hidden1", 256},
        {"hidden2", 128},
        {"probes", nullptr}}},
      {"eval", {{"split", "test"}}},
      {"abstraction", {{"pairs", 1000}, {"layers", nullptr}}},
  };
}

Json effective_config(const Json &user) {
  Json cfg = default_config();
  merge_into(cfg, user, "");
  const std::size_t n_layers = cfg["synth"]["layers"].size();
  if (cfg["train"]["probes"].is_null()) {
    Json probes = Json::array();
    for (std::size_t l = 0; l < n_layers; ++l) probes.push_back(Json::array({l}));
    cfg["train"]["probes"] = probes;
  }
  if (cfg["abstraction"]["layers"].is_null()) {
    Json layers = Json::array();
    for (std::size_t l = 0; l < n_layers; ++l) layers.push_back(l);
    cfg["abstraction"]["layers"] = layers;
  }
  return cfg;
}

const std::vector<std::string> &stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto &s : stages()) out.emplace_back(s.name);
    out.emplace_back("validate");
    return out;
  }();
  return names;
}

Json run_stage(std::string_view name, const PipelineOptions &options) {
  const auto spec = std::find_if(stages().begin(), stages().end(), [&](const StageSpec &s) { return name == s.name; });
  if (spec == stages().end()) throw StageError("unknown stage '" + std::string(name) + "'", kExitUsage);
  const Json cfg = effective_config(options.config);
  const Context ctx{options.out_dir, options.seed, cfg, std::max(1, options.jobs)};
  fs::create_directories(ctx.dir);
  Json manifest = load_manifest(ctx.dir, cfg, options.seed);
  verify_inputs(ctx.dir, manifest, *spec);

  const auto started = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  Json summary;
  try {
    summary = spec->run(ctx, outputs);
  } catch (const StageError &) {
    throw;
  } catch (const SchemaError &e) {
    throw StageError(e.what(), kExitUsage);
  } catch (const FormatError &e) {
    throw StageError(e.what(), kExitValidation);
  } catch (const std::exception &e) {
    throw StageError(e.what(), kExitRuntime);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  // drop records of files this stage replaces, then record the new ones
  Json &files = manifest["files"];
  std::map<std::string, std::string> kept;
  for (const auto &[rel, digest] : files.items()) {
    const bool replaced = (name == "synth" || name == "extract") ? rel.rfind("activations/", 0) == 0
                          : name == "train"                      ? rel.rfind("models/", 0) == 0
                                                                 : false;
    if (!replaced) kept[rel] = digest.get<std::string>();
  }
  for (const auto &rel : outputs) kept[rel] = file_sha256(ctx.dir / rel);
  files = Json::object();
  for (const auto &[rel, digest] : kept) files[rel] = digest;

  const std::string section = name == "extract" ? "extract" : std::string(name);
  Json stage_cfg = cfg.contains(section) ? cfg.at(section) : Json::object();
  if (name == "eval" || name == "train") stage_cfg["probes"] = cfg["train"]["probes"];
  manifest["config"] = cfg;
  manifest["stages"][std::string(name)] = Json{{"seed", derive_seed(options.seed, name)},
                                               {"config", stage_cfg},
                                               {"config_digest", sha256_hex(stage_cfg.dump())},
                                               {"seconds", seconds},
                                               {"outputs", outputs.size()},
                                               {"summary", summary}};
  atomic_write(ctx.dir / kManifest, manifest.dump(2) + "\n");
  return summary;
}

std::vector<fs::path> primary_artifacts(const fs::path &dir) {
  std::vector<fs::path> out;
  for (const char *f : {kPuzzles, kTraces, kGenerations, kLabels, kSplit, kMetrics, kAbstraction, kTraining}) {
    if (fs::exists(dir / f)) out.emplace_back(f);
  }
  for (const char *sub : {"activations", "models"}) {
    if (!fs::exists(dir / sub)) continue;
    std::vector<fs::path> files;
    for (const auto &e : fs::directory_iterator(dir / sub)) files.push_back(fs::relative(e.path(), dir));
    std::sort(files.begin(), files.end());
    out.insert(out.end(), files.begin(), files.end());
  }
  return out;
}

} // namespace apz
