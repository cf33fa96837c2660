// Command-line front end. Parses arguments, fills an evn_config and calls
// the C API; all pipeline work happens inside the shared library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "evn.h"

namespace {

struct ConfigDeleter {
  void operator()(evn_config* cfg) const { evn_config_free(cfg); }
};
using ConfigPtr = std::unique_ptr<evn_config, ConfigDeleter>;

struct CommonFlags {
  std::string config_file;
  std::string seed;
  std::string workers;
  std::string mode;
  std::string models;
  std::string out;
  std::string corpus;
  std::string gold;
  std::string sys;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "run configuration file (key = value lines)");
  cmd->add_option("--seed", flags.seed, "base seed for every randomized step");
  cmd->add_option("--workers", flags.workers, "parallel worker count (default: available cores)");
  cmd->add_option("--mode", flags.mode, "joint | separate_span_realis | single_member");
  cmd->add_option("--models", flags.models, "model directory");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--corpus", flags.corpus, "parsed document file");
  cmd->add_option("--gold", flags.gold, "gold annotation file");
  cmd->add_option("--sys", flags.sys, "system annotation file");
}

int apply_flags(evn_config* cfg, const CommonFlags& flags) {
  if (!flags.config_file.empty()) {
    evn_status st = evn_config_load_file(cfg, flags.config_file.c_str());
    if (st != EVN_OK) return st;
  }
  // Command-line values win over the file.
  const std::pair<const char*, const std::string*> overrides[] = {
      {"base_seed", &flags.seed}, {"workers", &flags.workers}, {"mode", &flags.mode},
      {"model_dir", &flags.models}, {"out_dir", &flags.out},   {"corpus", &flags.corpus},
      {"gold", &flags.gold},      {"sys", &flags.sys}};
  for (const auto& [key, value] : overrides) {
    if (value->empty()) continue;
    evn_status st = evn_config_set(cfg, key, value->c_str());
    if (st != EVN_OK) return st;
  }
  return EVN_OK;
}

int fail(int status) {
  std::fprintf(stderr, "error: %s\n", evn_last_error());
  return status;
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evn - event nugget detection, coreference resolution and scoring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(evn_version()));

  CommonFlags flags;
  CLI::App* train = app.add_subcommand("train", "train the classifier ensembles and coreference net");
  CLI::App* predict = app.add_subcommand("predict", "detect nuggets and resolve coreference");
  CLI::App* score = app.add_subcommand("score", "score a system annotation file against gold");
  CLI::App* analyze = app.add_subcommand("analyze", "emit the corpus distribution tables");
  for (CLI::App* cmd : {train, predict, score, analyze}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return EVN_ERR_USAGE;
  }

  ConfigPtr cfg(evn_config_new());
  if (!cfg) {
    std::fprintf(stderr, "error: out of memory\n");
    return EVN_ERR_INTERNAL;
  }
  if (int st = apply_flags(cfg.get(), flags); st != EVN_OK) return fail(st);

  evn_status st = EVN_OK;
  if (train->parsed()) {
    st = evn_run_train(cfg.get());
  } else if (predict->parsed()) {
    st = evn_run_predict(cfg.get());
  } else if (score->parsed()) {
    st = evn_run_score(cfg.get());
    if (st == EVN_OK) {
      const char* out_dir = evn_config_get(cfg.get(), "out_dir");
      if (out_dir) print_file(std::string(out_dir) + "/report.tsv");
    }
  } else if (analyze->parsed()) {
    st = evn_run_analyze(cfg.get());
  }
  if (st != EVN_OK) return fail(st);
  return EVN_OK;
}
