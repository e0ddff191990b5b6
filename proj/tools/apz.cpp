// apz: command line driver for the puzzle / probe pipeline.

#include "apz/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

apz::Json load_config(const std::string &path) {
  if (path.empty()) return apz::Json::object();
  try {
    return apz::Json::parse(apz::read_file(path));
  } catch (const nlohmann::json::exception &e) {
    throw apz::StageError("config " + path + ": " + e.what(), apz::kExitUsage);
  } catch (const std::exception &e) {
    throw apz::StageError("config " + path + ": " + e.what(), apz::kExitMissingInput);
  }
}

int run(const std::string &stage, const apz::PipelineOptions &opts, int oracle_sample) {
  if (stage == "validate") {
    const auto report = apz::validate_corpus(opts.out_dir, oracle_sample);
    std::cout << report.to_json().dump(2) << "\n";
    return report.passed() ? apz::kExitOk : apz::kExitValidation;
  }
  const apz::Json summary = apz::run_stage(stage, opts);
  std::cout << apz::Json{{"stage", stage}, {"summary", summary}}.dump() << "\n";
  return apz::kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Seating-puzzle corpus, activation probes and abstraction profiles"};
  app.require_subcommand(1);
  apz::PipelineOptions opts;
  std::string out_dir = "run", config_path;
  int oracle_sample = 50;
  bool print_config = false;
  app.add_option("--seed", opts.seed, "Master seed")->capture_default_str();
  app.add_option("--config", config_path, "JSON file of overrides");
  app.add_option("--out-dir", out_dir, "Run directory")->capture_default_str();
  app.add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
  app.add_flag("--print-config", print_config, "Print the effective config and exit");

  const std::map<std::string, std::string> help{
      {"gen", "Generate unique, minimal puzzles"},
      {"solve", "Write the deterministic reasoning trace of every puzzle"},
      {"synth", "Write synthetic documents and activations with a planted signal"},
      {"extract", "Run the model adapter and validate what it wrote"},
      {"label", "Parse generations and label statements"},
      {"split", "Assign isomorphism classes to train / validation / test"},
      {"train", "Train one probe per configured layer set"},
      {"eval", "Score trained probes on the evaluation split"},
      {"abstraction", "Correlate activations of identical and isomorphic lines"},
      {"validate", "Re-check the invariants of an existing run"},
  };
  for (const auto &name : apz::stage_names()) {
    auto *sub = app.add_subcommand(name, help.at(name));
    if (name == "validate") {
      sub->add_option("--oracle-sample", oracle_sample, "Puzzles re-verified by brute force")->capture_default_str();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : apz::kExitUsage;
  }

  try {
    opts.out_dir = out_dir;
    opts.config = load_config(config_path);
    if (print_config) {
      std::cout << apz::effective_config(opts.config).dump(2) << "\n";
      return apz::kExitOk;
    }
    return run(app.get_subcommands().front()->get_name(), opts, oracle_sample);
  } catch (const apz::StageError &e) {
    std::cerr << "apz: " << e.what() << "\n";
    return e.code();
  } catch (const apz::SchemaError &e) {
    std::cerr << "apz: " << e.what() << "\n";
    return apz::kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "apz: " << e.what() << "\n";
    return apz::kExitRuntime;
  }
}
