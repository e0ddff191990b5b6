#pragma once

// Line-delimited JSON records for every pipeline artifact, plus file helpers
// (atomic writes, SHA-256 digests).

#include "apz/abstraction.hpp"
#include "apz/activation.hpp"
#include "apz/core.hpp"
#include "apz/parser.hpp"
#include "apz/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace apz {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// A record that does not match its schema.
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Json to_json(const Entity &e);
Entity entity_from_json(const Json &j);
Json to_json(const Clue &c);
Clue clue_from_json(const Json &j);
Json to_json(const Arrangement &a);
Arrangement arrangement_from_json(const Json &j);
Json to_json(const Claim &c);
Claim claim_from_json(const Json &j);

Json to_json(const Puzzle &p);
Puzzle puzzle_from_json(const Json &j);

Json to_json(const ReasoningTrace &t);
ReasoningTrace trace_from_json(const Json &j);

/// Generated (or synthesized) text for one puzzle with its tokenization.
struct GenerationRecord {
  std::string puzzle_id;
  std::string source; // "synthetic" or the adapter's name
  std::string text;
  std::vector<CharSpan> token_spans;
  std::vector<DocumentLine> lines; // empty when the text is free generation
  Json capture = Json::object();   // capture metadata, opaque to the primary side
};

Json to_json(const GenerationRecord &g);
GenerationRecord generation_from_json(const Json &j);

struct LabelRecord {
  std::string puzzle_id;
  std::vector<LabeledStatement> statements;
  ParseDiagnostics diagnostics;
};

Json to_json(const LabelRecord &r);
LabelRecord label_record_from_json(const Json &j);

std::string_view to_string(Label l);

/// Reads one JSON document per non-empty line. Parse failures become
/// SchemaError naming the file and line.
std::vector<Json> read_jsonl(const std::filesystem::path &path);
std::string jsonl_text(const std::vector<Json> &records);

/// Writes to a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path &path, std::string_view bytes);
std::string read_file(const std::filesystem::path &path);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path &path);

} // namespace apz
