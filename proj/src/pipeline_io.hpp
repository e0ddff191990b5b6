#pragma once

// File layout and record loading shared by the stages and the validator.

#include "apz/isomorphism.hpp"
#include "apz/pipeline.hpp"

#include <functional>
#include <map>
#include <thread>

namespace apz::io {

inline constexpr const char *kPuzzles = "puzzles.jsonl";
inline constexpr const char *kTraces = "traces.jsonl";
inline constexpr const char *kGenerations = "generations.jsonl";
inline constexpr const char *kLabels = "labels.jsonl";
inline constexpr const char *kSplit = "split.jsonl";
inline constexpr const char *kMetrics = "metrics.jsonl";
inline constexpr const char *kAbstraction = "abstraction.jsonl";
inline constexpr const char *kTraining = "models/training.jsonl";
inline constexpr const char *kManifest = "manifest.json";

inline std::string activation_rel(const std::string &id) { return "activations/" + id + ".apzact"; }

struct SplitRecord {
  std::string id;
  std::string key;
  std::string key_digest;
  Split split = Split::Train;
};

inline Json to_json(const SplitRecord &r) {
  return Json{{"schema", kSchemaVersion}, {"id", r.id}, {"key", r.key}, {"key_digest", r.key_digest},
              {"split", to_string(r.split)}};
}

inline SplitRecord split_record_from_json(const Json &j) {
  try {
    if (j.at("schema").get<int>() != kSchemaVersion) throw SchemaError("split record has unsupported schema");
    SplitRecord r{j.at("id").get<std::string>(), j.at("key").get<std::string>(),
                  j.at("key_digest").get<std::string>(), Split::Train};
    const auto s = split_from_string(j.at("split").get<std::string>());
    if (!s) throw SchemaError("split record " + r.id + ": unknown split");
    r.split = *s;
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw SchemaError(std::string("split record: ") + e.what());
  }
}

template <typename T, typename F>
std::vector<T> load(const std::filesystem::path &dir, const char *name, F from_json) {
  const auto path = dir / name;
  if (!std::filesystem::exists(path)) throw StageError("missing input " + path.string(), kExitMissingInput);
  std::vector<T> out;
  for (const auto &j : read_jsonl(path)) out.push_back(from_json(j));
  return out;
}

template <typename T>
std::map<std::string, const T *> index_by(const std::vector<T> &items, std::function<std::string(const T &)> id) {
  std::map<std::string, const T *> out;
  for (const auto &x : items) {
    if (!out.emplace(id(x), &x).second) throw SchemaError("duplicate record for puzzle " + id(x));
  }
  return out;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results keep index
/// order; the exception of the lowest failing index is rethrown.
template <typename R>
std::vector<R> parallel_map(std::size_t count, int jobs, const std::function<R(std::size_t)> &fn) {
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += workers) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto &t : threads) t.join();
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

} // namespace apz::io

namespace apz::io {

// Checks shared by validate_corpus and the extract stage.
void check_generations(const std::vector<GenerationRecord> &gens, CheckResult &out);
void check_activations(const std::filesystem::path &dir, const std::vector<GenerationRecord> &gens,
                       CheckResult &out);

} // namespace apz::io
