#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "prism/app.hpp"
#include "prism/datasets.hpp"
#include "prism/error.hpp"
#include "prism/serialize.hpp"

namespace {

using namespace prism;

struct RunFlags {
  std::string dataset;
  std::optional<std::size_t> sample_n;
  std::uint64_t seed = 0;
  std::string backend = "oracle";
  std::string model = "gpt-4o";
  int max_iters = 3;
  bool no_analyzer = false;
  bool no_loop = false;
  bool no_early_stop = false;
  std::string pool = "record-context";
  std::string corpus;
  int parallelism = 1;
  std::string out = "prism-out";
  std::string answer_mode = "facts-only";
  std::string method = "prism";
  std::size_t oner_k = 5;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::map<std::string, std::string> templates;
  bool skip_invalid = false;
};

DatasetSpec parse_dataset(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("--dataset expects NAME:PATH, got '" + text + "'");
  }
  DatasetSpec spec;
  spec.name = dataset_from_string(text.substr(0, colon));
  spec.path = text.substr(colon + 1);
  return spec;
}

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--dataset", f.dataset, "NAME:PATH (hotpotqa, 2wiki, musique, multihoprag, internal)")
      ->required();
  cmd.add_option("--sample-n", f.sample_n, "Sample this many records");
  cmd.add_option("--seed", f.seed, "Sampling seed");
  cmd.add_option("--backend", f.backend, "live | oracle | mock:<script>");
  cmd.add_option("--model", f.model, "Model name sent to the live backend");
  cmd.add_option("--max-iters", f.max_iters, "Adder/Selector rounds")->check(CLI::NonNegativeNumber);
  cmd.add_flag("--no-analyzer", f.no_analyzer, "Skip question decomposition");
  cmd.add_flag("--no-loop", f.no_loop, "Single Selector pass only");
  cmd.add_flag("--no-early-stop", f.no_early_stop, "Always run every round");
  cmd.add_option("--pool", f.pool, "record-context | bm25-topk:<k>");
  cmd.add_option("--corpus", f.corpus, "JSONL corpus for bm25-topk");
  cmd.add_option("--parallelism", f.parallelism, "Records in flight")->check(CLI::PositiveNumber);
  cmd.add_option("--out", f.out, "Output directory");
  cmd.add_option("--answer-mode", f.answer_mode, "none | facts-only | passages | full-context");
  cmd.add_option("--method", f.method, "prism | oner");
  cmd.add_option("--oner-k", f.oner_k, "Passages kept by the oner baseline");
  cmd.add_option("--temperature", f.temperature, "Sampling temperature");
  cmd.add_option("--max-tokens", f.max_tokens, "Completion token cap");
  for (const char* role : {"analyzer", "selector", "adder", "answer"}) {
    cmd.add_option_function<std::string>(
        std::string("--template-") + role,
        [&f, role](const std::string& p) { f.templates[role] = p; },
        std::string("Override the ") + role + " prompt template");
  }
  cmd.add_flag("--skip-invalid", f.skip_invalid, "Drop malformed records instead of failing");
}

app::RunConfig to_config(const RunFlags& f) {
  app::RunConfig cfg;
  cfg.dataset = parse_dataset(f.dataset);
  cfg.dataset.skip_invalid = f.skip_invalid;
  if (f.sample_n) cfg.dataset.sample = SampleSpec{*f.sample_n, f.seed};
  cfg.seed = f.seed;
  cfg.backend = app::BackendChoice::parse(f.backend);
  cfg.model = f.model;
  cfg.pipeline.max_iterations = f.max_iters;
  cfg.pipeline.use_analyzer = !f.no_analyzer;
  cfg.pipeline.use_loop = !f.no_loop;
  cfg.pipeline.early_stop = !f.no_early_stop;
  cfg.pipeline.answer_mode = f.answer_mode == "none"
                                 ? std::nullopt
                                 : std::optional(answer_mode_from_string(f.answer_mode));
  cfg.pool = app::PoolPolicy::parse(f.pool, f.corpus);
  cfg.parallelism = f.parallelism;
  cfg.out_dir = f.out;
  cfg.method = f.method;
  cfg.oner_k = f.oner_k;
  cfg.temperature = f.temperature;
  cfg.max_tokens = f.max_tokens;
  cfg.template_paths = f.templates;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"prism: iterative evidence selection for multi-hop question answering"};
  cli.require_subcommand(1);
  cli.set_config("--config", "", "INI/TOML file with option defaults");

  RunFlags run_flags;
  auto* run_cmd = cli.add_subcommand("run", "Run the pipeline over a dataset");
  add_run_flags(*run_cmd, run_flags);

  RunFlags ablate_flags;
  auto* ablate_cmd = cli.add_subcommand("ablate", "Run full, no-analyzer and no-loop variants");
  add_run_flags(*ablate_cmd, ablate_flags);

  app::EvalOptions eval_opts;
  std::string eval_dataset, eval_backend;
  std::vector<std::string> conditions;
  auto* eval_cmd = cli.add_subcommand("eval", "Score a results file");
  eval_cmd->add_option("results", eval_opts.results_path, "results.jsonl")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "NAME:PATH (defaults to the run manifest)");
  eval_cmd->add_option("--conditions", conditions, "retrieved, passages, full-context, gold")
      ->delimiter(',');
  eval_cmd->add_option("--backend", eval_backend, "Backend for conditions without stored answers");
  eval_cmd->add_option("--model", eval_opts.model, "Model for re-answering");
  eval_cmd->add_option("--out", eval_opts.out_dir, "Output directory");

  std::string replay_path;
  auto* replay_cmd = cli.add_subcommand("replay", "Re-run stored responses and check for divergence");
  replay_cmd->add_option("results", replay_path, "results.jsonl")->required();

  std::size_t fixture_n = 25;
  std::uint64_t fixture_seed = 1;
  std::string fixture_out;
  auto* fixtures_cmd = cli.add_subcommand("fixtures", "Write a synthetic multi-hop fixture suite");
  fixtures_cmd->add_option("--n", fixture_n, "Number of records");
  fixtures_cmd->add_option("--seed", fixture_seed, "Generator seed");
  fixtures_cmd->add_option("--out", fixture_out, "Output JSONL path")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kExitError;
  }

  try {
    if (*run_cmd) return app::cmd_run(to_config(run_flags), std::cout, std::cerr);
    if (*ablate_cmd) return app::cmd_ablate(to_config(ablate_flags), std::cout, std::cerr);
    if (*eval_cmd) {
      if (!eval_dataset.empty()) eval_opts.dataset = parse_dataset(eval_dataset);
      if (!eval_backend.empty()) eval_opts.backend = app::BackendChoice::parse(eval_backend);
      if (!conditions.empty()) eval_opts.conditions = conditions;
      return app::cmd_eval(eval_opts, std::cout, std::cerr);
    }
    if (*replay_cmd) return app::cmd_replay(replay_path, std::cout, std::cerr);
    if (*fixtures_cmd) {
      save_records(fixture_out, make_fixture_suite(fixture_n, fixture_seed));
      std::cout << fixture_n << " records -> " << fixture_out << "\n";
      return app::kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return app::kExitError;
  }
  return app::kExitError;
}
