#include "apz/pipeline.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>

using namespace apz;
namespace fs = std::filesystem;

namespace {

Json tiny_config() {
  return Json{{"gen", {{"count", 40}, {"n", {2, 3}}}},
              {"train", {{"epochs", 3}, {"conv_channels", 8}, {"hidden1", 16}, {"hidden2", 8}}},
              {"abstraction", {{"pairs", 200}}}};
}

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("apz_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

PipelineOptions options(const fs::path &dir, std::uint64_t seed, int jobs = 1) {
  PipelineOptions o;
  o.out_dir = dir;
  o.seed = seed;
  o.config = tiny_config();
  o.jobs = jobs;
  return o;
}

void run_all(const PipelineOptions &o) {
  for (const char *s : {"gen", "solve", "synth", "label", "split", "train", "eval", "abstraction"}) run_stage(s, o);
}

int stage_code(std::string_view stage, const PipelineOptions &o) {
  try {
    run_stage(stage, o);
  } catch (const StageError &e) {
    return e.code();
  }
  return 0;
}

std::vector<Json> read_lines(const fs::path &p) {
  std::vector<Json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(Json::parse(line));
  }
  return out;
}

void write_lines(const fs::path &p, const std::vector<Json> &rows) {
  std::ofstream out(p, std::ios::trunc);
  for (const auto &r : rows) out << r.dump() << "\n";
}

bool mentions(const CheckResult *c, const std::string &needle) {
  if (!c) return false;
  for (const auto &f : c->failures) {
    if (f.find(needle) != std::string::npos) return true;
  }
  return false;
}

// One complete reference run shared by the tests below.
const fs::path &reference_run() {
  static const fs::path dir = [] {
    const fs::path d = scratch("reference");
    run_all(options(d, 5));
    return d;
  }();
  return dir;
}

fs::path copy_of_reference(const std::string &name) {
  const fs::path dir = scratch(name);
  fs::copy(reference_run(), dir, fs::copy_options::recursive);
  return dir;
}

} // namespace

TEST(Config, DefaultsAndDerivedLists) {
  const Json cfg = effective_config(Json::object());
  EXPECT_EQ(cfg["synth"]["layers"].size(), 8u);
  EXPECT_EQ(cfg["train"]["probes"].size(), 8u);
  EXPECT_EQ(cfg["train"]["probes"][3], Json::array({3}));
  EXPECT_EQ(cfg["abstraction"]["layers"].size(), 8u);
  EXPECT_EQ(cfg["gen"]["count"], 100);
  const Json two = effective_config(Json{{"synth", {{"layers", Json::array({default_config()["synth"]["layers"][0],
                                                                             default_config()["synth"]["layers"][1]})}}}});
  EXPECT_EQ(two["train"]["probes"].size(), 2u);
  EXPECT_EQ(effective_config(Json{{"train", {{"probes", {{4, 5}}}}}})["train"]["probes"], Json::array({{4, 5}}));
}

TEST(Config, UnknownKeysAndWrongTypesAreUsageErrors) {
  for (const Json &bad : {Json{{"gen", {{"cuont", 3}}}}, Json{{"nope", 1}}, Json{{"gen", {{"count", "many"}}}},
                          Json{{"gen", 5}}, Json{{"train", {{"probes", 3}}}}}) {
    try {
      effective_config(bad);
      ADD_FAILURE() << bad.dump();
    } catch (const StageError &e) {
      EXPECT_EQ(e.code(), kExitUsage) << bad.dump();
    }
  }
}

TEST(Pipeline, StageNames) {
  EXPECT_EQ(stage_names(), (std::vector<std::string>{"gen", "solve", "synth", "extract", "label", "split", "train",
                                                     "eval", "abstraction", "validate"}));
  EXPECT_EQ(stage_code("bogus", options(scratch("bogus"), 1)), kExitUsage);
}

TEST(Pipeline, RerunIsByteIdenticalAndThreadCountDoesNotMatter) {
  const fs::path a = reference_run();
  const fs::path b = scratch("rerun");
  run_all(options(b, 5, 3));
  const auto files = primary_artifacts(a);
  ASSERT_EQ(files, primary_artifacts(b));
  EXPECT_GT(files.size(), 40u);
  for (const auto &rel : files) EXPECT_EQ(read_file(a / rel), read_file(b / rel)) << rel;
}

TEST(Pipeline, DifferentSeedChangesTheCorpus) {
  const fs::path c = scratch("seed6");
  run_stage("gen", options(c, 6));
  EXPECT_NE(read_file(c / "puzzles.jsonl"), read_file(reference_run() / "puzzles.jsonl"));
}

TEST(Pipeline, ManifestRecordsStagesAndDigests) {
  const Json m = Json::parse(read_file(reference_run() / "manifest.json"));
  EXPECT_EQ(m["seed"], 5);
  for (const char *s : {"gen", "solve", "synth", "label", "split", "train", "eval", "abstraction"}) {
    ASSERT_TRUE(m["stages"].contains(s)) << s;
    EXPECT_TRUE(m["stages"][s].contains("seed"));
    EXPECT_TRUE(m["stages"][s].contains("config_digest"));
  }
  EXPECT_EQ(m["files"]["puzzles.jsonl"], file_sha256(reference_run() / "puzzles.jsonl"));
  EXPECT_EQ(m["config"]["gen"]["count"], 40);
}

TEST(Pipeline, ValidateAcceptsACleanRun) {
  const ValidationReport r = validate_corpus(reference_run());
  EXPECT_TRUE(r.passed()) << r.to_json().dump(2);
  for (const char *c : {"manifest", "puzzles", "traces", "split", "generations", "activations", "labels"}) {
    ASSERT_NE(r.find(c), nullptr) << c;
    EXPECT_EQ(r.find(c)->status, CheckStatus::Passed) << c;
  }
}

TEST(Pipeline, OutputsHaveTheExpectedShape) {
  const auto metrics = read_lines(reference_run() / "metrics.jsonl");
  EXPECT_EQ(metrics.size(), 8u);
  const auto rows = read_lines(reference_run() / "abstraction.jsonl");
  EXPECT_EQ(rows.size(), 16u);
  const auto split = read_lines(reference_run() / "split.jsonl");
  EXPECT_EQ(split.size(), 40u);
}

TEST(Pipeline, MissingInputExitCode) {
  const fs::path d = scratch("empty");
  EXPECT_EQ(stage_code("solve", options(d, 1)), kExitMissingInput);
  EXPECT_THROW(validate_corpus(d), StageError);
}

TEST(Faults, EditedInputIsADigestMismatch) {
  const fs::path d = copy_of_reference("edited");
  auto rows = read_lines(d / "puzzles.jsonl");
  rows[0]["id"] = "tampered";
  write_lines(d / "puzzles.jsonl", rows);
  EXPECT_EQ(stage_code("solve", options(d, 5)), kExitDigestMismatch);
  const ValidationReport r = validate_corpus(d);
  EXPECT_FALSE(r.passed());
  EXPECT_TRUE(mentions(r.find("manifest"), "puzzles.jsonl"));
}

TEST(Faults, SplitLeakNamesThePuzzle) {
  const fs::path d = copy_of_reference("leak");
  auto rows = read_lines(d / "split.jsonl");
  std::map<std::string, int> class_size;
  for (const auto &r : rows) ++class_size[r["key"].get<std::string>()];
  auto it = std::find_if(rows.begin(), rows.end(), [&](const Json &r) { return class_size[r["key"]] >= 3; });
  ASSERT_NE(it, rows.end());
  const std::string id = (*it)["id"];
  (*it)["split"] = (*it)["split"] == "test" ? "train" : "test";
  write_lines(d / "split.jsonl", rows);
  const ValidationReport r = validate_corpus(d);
  EXPECT_FALSE(r.passed());
  ASSERT_EQ(r.find("split")->status, CheckStatus::Failed);
  EXPECT_TRUE(mentions(r.find("split"), "puzzle " + id + " is in")) << r.to_json().dump(2);
}

TEST(Faults, FlippedLabelIsCaught) {
  const fs::path d = copy_of_reference("flip");
  auto rows = read_lines(d / "labels.jsonl");
  auto &st = rows[3]["statements"][0];
  const bool was_correct = st["label"] == "correct";
  st["label"] = was_correct ? "incorrect" : "correct";
  write_lines(d / "labels.jsonl", rows);
  const ValidationReport r = validate_corpus(d);
  ASSERT_EQ(r.find("labels")->status, CheckStatus::Failed);
  EXPECT_TRUE(mentions(r.find("labels"), rows[3]["puzzle_id"].get<std::string>() + " statement 0: recorded " +
                                             (was_correct ? "incorrect" : "correct")));
}

TEST(Faults, TruncatedActivationIsCaught) {
  const fs::path d = copy_of_reference("truncated");
  const fs::path f = d / "activations" / "p000007.apzact";
  const std::string bytes = read_file(f);
  {
    std::ofstream out(f, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  const ValidationReport r = validate_corpus(d);
  ASSERT_EQ(r.find("activations")->status, CheckStatus::Failed);
  EXPECT_TRUE(mentions(r.find("activations"), "p000007.apzact"));
  EXPECT_EQ(stage_code("train", options(d, 5)), kExitDigestMismatch);
}

TEST(Extract, AcceptsWellFormedAdapterOutput) {
  const fs::path d = scratch("extract_ok");
  PipelineOptions o = options(d, 5);
  run_stage("gen", o);
  const std::string src = reference_run().string();
  o.config["extract"] = {{"command", {"sh", "-c", "cp \"" + src + "/generations.jsonl\" \"$4\"/ && cp -r \"" + src +
                                                        "/activations\" \"$4\"/", "adapter"}}};
  const Json summary = run_stage("extract", o);
  EXPECT_EQ(summary["documents"], 40);
  run_stage("label", o);
  EXPECT_EQ(read_file(d / "labels.jsonl"), read_file(reference_run() / "labels.jsonl"));
}

TEST(Extract, RejectsBrokenAdapterOutput) {
  const fs::path d = scratch("extract_bad");
  PipelineOptions o = options(d, 5);
  run_stage("gen", o);
  const std::string src = reference_run().string();
  o.config["extract"] = {{"command", {"sh", "-c", "cp \"" + src + "/generations.jsonl\" \"$4\"/ && cp -r \"" + src +
                                                        "/activations\" \"$4\"/ && truncate -s 30 \"$4\"/activations/p000003.apzact",
                                      "adapter"}}};
  EXPECT_EQ(stage_code("extract", o), kExitValidation);
}

TEST(Extract, AdapterFailureAndMissingCommand) {
  const fs::path d = scratch("extract_fail");
  PipelineOptions o = options(d, 5);
  run_stage("gen", o);
  EXPECT_EQ(stage_code("extract", o), kExitUsage);
  o.config["extract"] = {{"command", {"sh", "-c", "exit 7"}}};
  EXPECT_EQ(stage_code("extract", o), kExitRuntime);
}
