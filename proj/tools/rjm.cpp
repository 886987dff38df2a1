// rjm: staged resume-to-position matching pipeline.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>

#include "rjm/artifact.hpp"
#include "rjm/error.hpp"
#include "rjm/pipeline.hpp"
#include "rjm/synth.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kLeakage = 3, kStale = 4 };

struct GlobalOptions {
  std::string config;
  std::string workdir;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string log_level = "info";
};

rjm::RunConfig resolve(const GlobalOptions& g) {
  rjm::RunConfig c = g.config.empty() ? rjm::RunConfig{} : rjm::load_run_config(g.config);
  if (!g.workdir.empty()) c.workdir = g.workdir;
  if (!g.input.empty()) c.input = g.input;
  if (g.seed) c.seed = *g.seed;
  if (g.threads) {
    if (*g.threads == 0) throw rjm::ConfigError("--threads must be >= 1");
    c.threads = *g.threads;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("rjm"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Resume-to-position matching: staged training and evaluation pipeline.\n"
               "Logs go to stderr; reports and recommendations go to files and stdout."};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("-c,--config", g.config, "JSON run configuration; flags below override it")->check(CLI::ExistingFile);
  app.add_option("-w,--workdir", g.workdir, "Artifact directory (default: run)");
  app.add_option("-i,--input", g.input, "Newline-delimited resume records for ingest");
  app.add_option("--seed", g.seed, "Master seed; every stage seed derives from it (default: 1)");
  app.add_option("-j,--threads", g.threads,
                 "Worker threads for featurization and tree training (default: 1). Results do not depend on it; "
                 "embedding and neural training always run on one thread");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* synth = app.add_subcommand("synth", "Write a planted-signal synthetic corpus");
  rjm::SynthOptions synth_options;
  std::string synth_out;
  synth->add_option("-n,--n", synth_options.count, "Number of resumes (default: 2000)");
  synth->add_option("--synth-seed", synth_options.seed, "Generator seed (default: --seed, else 1)");
  synth->add_option("--signal", synth_options.signal, "Probability of following the career ladder (default: 0.8)")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--tech-weight", synth_options.tech_weight,
                    "Sampling weight of the software track relative to others (default: 2)")
      ->check(CLI::PositiveNumber);
  synth->add_option("-o,--out", synth_out, "Output file (default: stdout)");

  app.add_subcommand("ingest", "Parse records, keep the top-k positions, split train/test");
  app.add_subcommand("embed", "Train skip-gram phrase embeddings on the training split");
  app.add_subcommand("cluster", "Fit two k-means token clusterings and two LDA topic models");
  app.add_subcommand("featurize", "Build the 547-column train/test feature matrices");
  app.add_subcommand("train", "Train GBT/RF/CNN/recurrent models for every task");
  auto* evaluate = app.add_subcommand("evaluate", "Score all methods on the test split; exits 3 on leakage");
  bool tsv = false;
  evaluate->add_flag("--tsv", tsv, "Print the tab-separated report instead of the text tables");
  auto* recommend = app.add_subcommand("recommend", "Top-N positions for one resume record read from stdin");
  std::size_t top = 3;
  recommend->add_option("-n,--n", top, "Number of positions (default: 3)")->check(CLI::PositiveNumber);
  app.add_subcommand("run", "Run ingest through evaluate in one go");
  auto* show = app.add_subcommand("config", "Print the effective configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;  // --help still exits 0
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "synth") {
      if (synth->count("--synth-seed") == 0 && g.seed) synth_options.seed = *g.seed;
      const auto text = rjm::synthesize_records(synth_options);
      if (synth_out.empty()) {
        std::cout << text;
      } else {
        rjm::artifact::write_text(synth_out, text);
      }
      return kOk;
    }
    const auto config = resolve(g);
    if (cmd == show) {
      std::cout << config.to_json().dump(2) << '\n';
    } else if (name == "ingest") {
      rjm::stage_ingest(config);
    } else if (name == "embed") {
      rjm::stage_embed(config);
    } else if (name == "cluster") {
      rjm::stage_cluster(config);
    } else if (name == "featurize") {
      rjm::stage_featurize(config);
    } else if (name == "train") {
      rjm::stage_train(config);
    } else if (name == "evaluate" || name == "run") {
      const auto report = name == "run" ? rjm::run_pipeline(config) : rjm::stage_evaluate(config);
      std::cout << (tsv ? report.to_tsv() : report.to_text());
    } else if (cmd == recommend) {
      const std::string record{std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
      for (const auto& position : rjm::recommend(config, record, top)) std::cout << position << '\n';
    }
    return kOk;
  } catch (const rjm::LeakageError& e) {
    spdlog::error("leakage: {}", e.what());
    return kLeakage;
  } catch (const rjm::StaleArtifactError& e) {
    spdlog::error("{}", e.what());
    return kStale;
  } catch (const rjm::ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}
