#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evn/coref.hpp"
#include "evn/corpus.hpp"
#include "evn/features.hpp"
#include "evn/nugget.hpp"
#include "evn/scorer.hpp"

namespace evn {

enum class RunMode { joint, separate_span_realis, single_member };

RunMode parse_run_mode(const std::string& s);
std::string to_string(RunMode m);

// Flat key=value run configuration; the command line overrides the file.
class RunConfig {
 public:
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);  // throws UsageError on unknown keys
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback = "") const;
  std::string require_path(const std::string& key) const;  // must exist on disk
  std::string require_str(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_seed() const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  int workers() const;
  RunMode mode() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

ResourceBundle load_bundle(const RunConfig& cfg);

// Trained model directory content. In separate mode the span+realis
// ensemble is replaced by a 2-class span ensemble plus a 3-class realis
// ensemble derived from the S member recipes.
struct ModelSet {
  RunMode mode = RunMode::joint;
  Ensemble span_realis;   // joint mode
  Ensemble span_binary;   // separate mode
  Ensemble realis_only;   // separate mode
  Ensemble type;
  CorefNet coref;
};

void cmd_train(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
ScoreReport cmd_score(const RunConfig& cfg);
void cmd_analyze(const RunConfig& cfg);

// Model directory helpers, exposed for tests.
void save_models(const std::string& dir, const ModelSet& models, const RunConfig& cfg);
ModelSet load_models(const std::string& dir);

std::vector<EventNugget> predict_document(const Document& doc, const ModelSet& models,
                                          const ResourceBundle& bundle, const RunConfig& cfg);

}  // namespace evn
