#include "apz/records.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>
#include <unistd.h>

namespace apz {

namespace {

constexpr const char *kClueKinds[] = {"at_end", "not_at_end", "right_of", "left_of"};
constexpr const char *kClaimKinds[] = {"person_at", "person_not_at", "color_at",        "color_not_at",
                                       "person_wears", "person_wears_at", "done", "final_answer"};

template <std::size_t N>
int index_in(const char *const (&names)[N], const std::string &s, const char *what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (s == names[i]) return static_cast<int>(i);
  }
  throw SchemaError(std::string("unknown ") + what + " '" + s + "'");
}

template <typename T>
T field(const Json &j, const char *name) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw SchemaError(std::string("field '") + name + "': " + e.what());
  }
}

void check_schema(const Json &j, const char *what) {
  if (!j.is_object()) throw SchemaError(std::string(what) + " record is not an object");
  if (field<int>(j, "schema") != kSchemaVersion) {
    throw SchemaError(std::string(what) + " record has unsupported schema version");
  }
}

} // namespace

std::string_view to_string(Label l) { return l == Label::Correct ? "correct" : "incorrect"; }

Json to_json(const Entity &e) {
  return Json{{e.kind == EntityKind::Person ? "person" : "wearer", e.value}};
}

Entity entity_from_json(const Json &j) {
  if (j.contains("person")) return Entity::person(field<std::string>(j, "person"));
  if (j.contains("wearer")) return Entity::wearer(field<std::string>(j, "wearer"));
  throw SchemaError("entity needs 'person' or 'wearer'");
}

Json to_json(const Clue &c) {
  Json j{{"kind", kClueKinds[static_cast<int>(c.kind)]}, {"subject", to_json(c.subject)}};
  if (c.relative()) {
    j["object"] = to_json(c.object);
  } else {
    j["end"] = c.end == End::Left ? "left" : "right";
  }
  return j;
}

Clue clue_from_json(const Json &j) {
  const auto kind = static_cast<ClueKind>(index_in(kClueKinds, field<std::string>(j, "kind"), "clue kind"));
  Entity subject = entity_from_json(field<Json>(j, "subject"));
  switch (kind) {
  case ClueKind::AtEnd:
  case ClueKind::NotAtEnd: {
    const std::string end = field<std::string>(j, "end");
    if (end != "left" && end != "right") throw SchemaError("clue end must be 'left' or 'right'");
    const End e = end == "left" ? End::Left : End::Right;
    return kind == ClueKind::AtEnd ? Clue::at_end(subject, e) : Clue::not_at_end(subject, e);
  }
  case ClueKind::SomewhereRightOf:
    return Clue::right_of(subject, entity_from_json(field<Json>(j, "object")));
  case ClueKind::SomewhereLeftOf:
    return Clue::left_of(subject, entity_from_json(field<Json>(j, "object")));
  }
  throw SchemaError("bad clue");
}

Json to_json(const Arrangement &a) { return Json{{"person_at", a.person_at}, {"color_at", a.color_at}}; }

Arrangement arrangement_from_json(const Json &j) {
  Arrangement a{field<std::vector<std::string>>(j, "person_at"), field<std::vector<std::string>>(j, "color_at")};
  if (a.person_at.size() != a.color_at.size()) throw SchemaError("arrangement sides differ in length");
  return a;
}

Json to_json(const Claim &c) {
  Json j{{"kind", kClaimKinds[static_cast<int>(c.kind)]}};
  if (!c.name.empty()) j["name"] = c.name;
  if (!c.color.empty()) j["color"] = c.color;
  if (c.position >= 0) j["position"] = c.position;
  if (c.answer) j["answer"] = to_json(*c.answer);
  return j;
}

Claim claim_from_json(const Json &j) {
  Claim c;
  c.kind = static_cast<ClaimKind>(index_in(kClaimKinds, field<std::string>(j, "kind"), "claim kind"));
  if (j.contains("name")) c.name = field<std::string>(j, "name");
  if (j.contains("color")) c.color = field<std::string>(j, "color");
  if (j.contains("position")) c.position = field<int>(j, "position");
  if (j.contains("answer")) c.answer = arrangement_from_json(j.at("answer"));
  static constexpr bool kNeeds[][4] = {// name, color, position, answer
                                       {1, 0, 1, 0}, {1, 0, 1, 0}, {0, 1, 1, 0}, {0, 1, 1, 0},
                                       {1, 1, 0, 0}, {1, 1, 1, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}};
  const bool *needs = kNeeds[static_cast<int>(c.kind)];
  if ((needs[0] && c.name.empty()) || (needs[1] && c.color.empty()) || (needs[2] && c.position < 0) ||
      (needs[3] && !c.answer)) {
    throw SchemaError("claim of kind " + field<std::string>(j, "kind") + " is missing a field");
  }
  return c;
}

Json to_json(const Puzzle &p) {
  Json clues = Json::array();
  for (const auto &c : p.clues) clues.push_back(to_json(c));
  return Json{{"schema", kSchemaVersion}, {"id", p.id},       {"n", p.n},
              {"names", p.names},         {"colors", p.colors}, {"clues", clues},
              {"solution", to_json(p.solution)}};
}

Puzzle puzzle_from_json(const Json &j) {
  check_schema(j, "puzzle");
  Puzzle p;
  p.id = field<std::string>(j, "id");
  p.n = field<int>(j, "n");
  p.names = field<std::vector<std::string>>(j, "names");
  p.colors = field<std::vector<std::string>>(j, "colors");
  for (const auto &c : field<Json>(j, "clues")) p.clues.push_back(clue_from_json(c));
  p.solution = arrangement_from_json(field<Json>(j, "solution"));
  if (static_cast<int>(p.names.size()) != p.n || static_cast<int>(p.colors.size()) != p.n) {
    throw SchemaError("puzzle " + p.id + ": vocabulary size differs from n");
  }
  return p;
}

namespace {

Json context_json(const StepContext &c) {
  Json j = Json::object();
  if (!c.clue.empty()) j["clue"] = c.clue;
  if (c.other) j["other"] = to_json(*c.other);
  if (!c.other_positions.empty()) j["other_positions"] = c.other_positions;
  if (c.from_position >= 0) j["from_position"] = c.from_position;
  if (!c.options.empty()) j["options"] = c.options;
  return j;
}

StepContext context_from_json(const Json &j, TemplateId id, int n) {
  StepContext c;
  c.id = id;
  c.n = n;
  if (j.contains("clue")) c.clue = field<std::string>(j, "clue");
  if (j.contains("other")) c.other = entity_from_json(j.at("other"));
  if (j.contains("other_positions")) c.other_positions = field<std::vector<int>>(j, "other_positions");
  if (j.contains("from_position")) c.from_position = field<int>(j, "from_position");
  if (j.contains("options")) c.options = field<std::vector<std::string>>(j, "options");
  return c;
}

} // namespace

Json to_json(const ReasoningTrace &t) {
  Json steps = Json::array();
  for (const auto &s : t.steps) {
    steps.push_back(Json{{"index", s.index},
                         {"kind", to_string(s.kind)},
                         {"template", template_info(s.template_id).key},
                         {"text", s.text},
                         {"claim", s.claim ? to_json(*s.claim) : Json(nullptr)},
                         {"context", context_json(s.context)},
                         {"live_cells", s.live_cells}});
  }
  return Json{{"schema", kSchemaVersion}, {"puzzle_id", t.puzzle_id}, {"n", t.n},
              {"names", t.names},         {"colors", t.colors},       {"steps", steps},
              {"final", to_json(t.final)}};
}

ReasoningTrace trace_from_json(const Json &j) {
  check_schema(j, "trace");
  ReasoningTrace t;
  t.puzzle_id = field<std::string>(j, "puzzle_id");
  t.n = field<int>(j, "n");
  t.names = field<std::vector<std::string>>(j, "names");
  t.colors = field<std::vector<std::string>>(j, "colors");
  for (const auto &s : field<Json>(j, "steps")) {
    ReasoningStep step;
    step.index = field<int>(s, "index");
    const auto kind = step_kind_from_string(field<std::string>(s, "kind"));
    const auto tid = template_from_key(field<std::string>(s, "template"));
    if (!kind || !tid) throw SchemaError("trace " + t.puzzle_id + ": unknown step kind or template");
    step.kind = *kind;
    step.template_id = *tid;
    step.text = field<std::string>(s, "text");
    if (!s.at("claim").is_null()) step.claim = claim_from_json(s.at("claim"));
    step.context = context_from_json(field<Json>(s, "context"), step.template_id, t.n);
    step.live_cells = field<std::array<int, 3>>(s, "live_cells");
    t.steps.push_back(std::move(step));
  }
  t.final = arrangement_from_json(field<Json>(j, "final"));
  return t;
}

Json to_json(const GenerationRecord &g) {
  Json spans = Json::array();
  for (auto [b, e] : g.token_spans) spans.push_back(Json::array({b, e}));
  Json lines = Json::array();
  for (const auto &l : g.lines) {
    lines.push_back(Json{{"start", l.start},
                         {"end", l.end},
                         {"step", l.step_index},
                         {"template", template_info(l.template_id).key}});
  }
  return Json{{"schema", kSchemaVersion}, {"puzzle_id", g.puzzle_id}, {"source", g.source},
              {"text", g.text},           {"token_spans", spans},     {"lines", lines},
              {"capture", g.capture}};
}

GenerationRecord generation_from_json(const Json &j) {
  check_schema(j, "generation");
  GenerationRecord g;
  g.puzzle_id = field<std::string>(j, "puzzle_id");
  g.source = field<std::string>(j, "source");
  g.text = field<std::string>(j, "text");
  for (const auto &s : field<Json>(j, "token_spans")) {
    if (!s.is_array() || s.size() != 2) throw SchemaError("token span must be [start, end]");
    g.token_spans.emplace_back(s[0].get<std::size_t>(), s[1].get<std::size_t>());
  }
  if (j.contains("lines")) {
    for (const auto &l : j.at("lines")) {
      const auto tid = template_from_key(field<std::string>(l, "template"));
      if (!tid) throw SchemaError("generation " + g.puzzle_id + ": unknown template");
      g.lines.push_back({field<std::size_t>(l, "start"), field<std::size_t>(l, "end"), field<int>(l, "step"), *tid});
    }
  }
  if (j.contains("capture")) g.capture = j.at("capture");
  return g;
}

Json to_json(const LabelRecord &r) {
  Json st = Json::array();
  for (const auto &s : r.statements) {
    Json one{{"start", s.span.start},
             {"end", s.span.end},
             {"template", template_info(s.span.template_id).key},
             {"claim", to_json(s.span.claim)},
             {"label", to_string(s.label)}};
    one["token_range"] = s.token_range ? Json::array({s.token_range->first, s.token_range->second}) : Json(nullptr);
    st.push_back(std::move(one));
  }
  const auto &d = r.diagnostics;
  return Json{{"schema", kSchemaVersion},
              {"puzzle_id", r.puzzle_id},
              {"statements", st},
              {"diagnostics",
               {{"sentences", d.sentences},
                {"claims", d.claims},
                {"recognized_without_claim", d.recognized_without_claim},
                {"unmatched", d.unmatched},
                {"out_of_universe", d.out_of_universe}}}};
}

LabelRecord label_record_from_json(const Json &j) {
  check_schema(j, "label");
  LabelRecord r;
  r.puzzle_id = field<std::string>(j, "puzzle_id");
  for (const auto &s : field<Json>(j, "statements")) {
    LabeledStatement ls;
    ls.span.start = field<std::size_t>(s, "start");
    ls.span.end = field<std::size_t>(s, "end");
    const auto tid = template_from_key(field<std::string>(s, "template"));
    if (!tid) throw SchemaError("label " + r.puzzle_id + ": unknown template");
    ls.span.template_id = *tid;
    ls.span.claim = claim_from_json(field<Json>(s, "claim"));
    const std::string label = field<std::string>(s, "label");
    if (label != "correct" && label != "incorrect") throw SchemaError("label must be 'correct' or 'incorrect'");
    ls.label = label == "correct" ? Label::Correct : Label::Incorrect;
    if (!s.at("token_range").is_null()) {
      const auto tr = field<std::vector<int>>(s, "token_range");
      if (tr.size() != 2) throw SchemaError("token_range must be [first, last]");
      ls.token_range = TokenRange{tr[0], tr[1]};
    }
    r.statements.push_back(std::move(ls));
  }
  const Json &d = field<Json>(j, "diagnostics");
  r.diagnostics.sentences = field<int>(d, "sentences");
  r.diagnostics.claims = field<int>(d, "claims");
  r.diagnostics.recognized_without_claim = field<int>(d, "recognized_without_claim");
  r.diagnostics.unmatched = field<int>(d, "unmatched");
  r.diagnostics.out_of_universe = field<int>(d, "out_of_universe");
  return r;
}

std::vector<Json> read_jsonl(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception &e) {
      throw SchemaError(path.filename().string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::string jsonl_text(const std::vector<Json> &records) {
  std::string out;
  for (const auto &r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void atomic_write(const std::filesystem::path &path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string file_sha256(const std::filesystem::path &path) { return sha256_hex(read_file(path)); }

} // namespace apz
