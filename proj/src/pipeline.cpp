#include "evn/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "evn/analysis.hpp"
#include "evn/error.hpp"
#include "evn/nn.hpp"
#include "evn/util.hpp"

namespace evn {

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "affix_list",     "base_seed",       "batch_size",       "coref_batch_size",
      "coref_epochs",   "coref_learning_rate", "coref_negative_ratio", "coref_threshold",
      "corpus",         "deprel_vocab",    "embeddings",       "emit_margin",
      "ensemble_spec",  "gold",            "keep_other_subtype", "learning_rate",
      "model_dir",      "mode",            "ner_vocab",        "out_dir",
      "pos_vocab",      "same_type_filter", "strongest_span",  "strongest_type",
      "subtype_vocab",  "sys",             "system_id",        "workers"};
  return keys;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunMode parse_run_mode(const std::string& s) {
  if (s == "joint") return RunMode::joint;
  if (s == "separate_span_realis") return RunMode::separate_span_realis;
  if (s == "single_member") return RunMode::single_member;
  throw UsageError("unknown mode '" + s + "' (expected joint, separate_span_realis or single_member)");
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::joint: return "joint";
    case RunMode::separate_span_realis: return "separate_span_realis";
    case RunMode::single_member: return "single_member";
  }
  return "?";
}

void RunConfig::load_file(const std::string& path) {
  std::string text = read_file(path);
  auto lines = split(text, '\n');
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = trim(lines[li]);
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError(path + " line " + std::to_string(li + 1) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    set(key, value);
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw UsageError("unknown config key '" + key + "'");
  kv_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string RunConfig::require_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end() || it->second.empty())
    throw UsageError("missing required config key '" + key + "'");
  return it->second;
}

std::string RunConfig::require_path(const std::string& key) const {
  std::string path = require_str(key);
  if (!file_exists(path)) throw UsageError("config key '" + key + "': no such file '" + path + "'");
  return path;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::int64_t v;
  if (!parse_i64(it->second, v)) throw UsageError("config key '" + key + "' must be an integer");
  return v;
}

std::uint64_t RunConfig::get_seed() const {
  auto it = kv_.find("base_seed");
  if (it == kv_.end()) return 1;
  std::uint64_t v;
  if (!parse_u64(it->second, v)) throw UsageError("config key 'base_seed' must be a non-negative integer");
  return v;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  double v;
  if (!parse_f64(it->second, v)) throw UsageError("config key '" + key + "' must be a number");
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw UsageError("config key '" + key + "' must be true or false");
}

int RunConfig::workers() const {
  std::int64_t w = get_int("workers", 0);
  if (w > 0) return static_cast<int>(w);
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

RunMode RunConfig::mode() const { return parse_run_mode(get_str("mode", "joint")); }

ResourceBundle load_bundle(const RunConfig& cfg) {
  ResourcePaths paths;
  paths.embeddings = cfg.require_path("embeddings");
  paths.pos_vocab = cfg.require_path("pos_vocab");
  paths.deprel_vocab = cfg.require_path("deprel_vocab");
  paths.affix_list = cfg.require_path("affix_list");
  paths.ner_vocab = cfg.require_path("ner_vocab");
  paths.subtype_vocab = cfg.require_path("subtype_vocab");
  return load_resources(paths);
}

namespace {

CorefConfig coref_config_from(const RunConfig& cfg, std::uint64_t seed) {
  CorefConfig c;
  c.epochs = static_cast<int>(cfg.get_int("coref_epochs", 10));
  c.learning_rate = cfg.get_double("coref_learning_rate", 0.01);
  c.batch_size = static_cast<int>(cfg.get_int("coref_batch_size", 32));
  c.negative_ratio = cfg.get_double("coref_negative_ratio", 3.0);
  c.seed = seed;
  if (c.epochs <= 0 || c.learning_rate <= 0.0 || c.batch_size <= 0 || c.negative_ratio < 0.0)
    throw UsageError("invalid coreference training configuration");
  return c;
}

// Thread-safe per-member loss collector; rows come out sorted.
class TrainLog {
 public:
  void add(const std::string& member, int epoch, double loss) {
    std::lock_guard<std::mutex> lock(mu_);
    rows_.emplace_back(member, epoch, loss);
  }
  std::string to_tsv() {
    std::sort(rows_.begin(), rows_.end());
    std::string out = "member\tepoch\tloss\n";
    for (const auto& [member, epoch, loss] : rows_)
      out += member + "\t" + std::to_string(epoch) + "\t" + format_f64(loss) + "\n";
    return out;
  }

 private:
  std::mutex mu_;
  std::vector<std::tuple<std::string, int, double>> rows_;
};

NetConfig with_output_width(NetConfig c, int width, const std::string& suffix) {
  c.layer_sizes.back() = width;
  c.name += suffix;
  c.activations = default_activations(c.layer_sizes.size(), width);
  return c;
}

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw UsageError("cannot create directory '" + dir + "': " + ec.message());
  return p;
}

struct ManifestEntry {
  std::string name;
  std::string kind;
  std::string file;
  std::string digest;
};

Task task_of_kind(const std::string& kind) {
  return kind == "type" ? Task::type : Task::span_realis;
}

}  // namespace

void save_models(const std::string& dir, const ModelSet& models, const RunConfig& cfg) {
  auto base = ensure_dir(dir);
  std::vector<ManifestEntry> entries;
  auto dump = [&](const Ensemble& ensemble, const std::string& kind) {
    for (const DenseNet& net : ensemble.members) {
      ManifestEntry e;
      e.name = net.config.name;
      e.kind = kind;
      e.file = net.config.name + ".evnm";
      std::string bytes = serialize(net);
      e.digest = hex64(fnv1a64(bytes));
      write_file((base / e.file).string(), bytes);
      entries.push_back(std::move(e));
    }
  };
  if (models.mode == RunMode::separate_span_realis) {
    dump(models.span_binary, "span_binary");
    dump(models.realis_only, "realis_only");
  } else {
    dump(models.span_realis, "span_realis");
  }
  dump(models.type, "type");

  std::string coref_bytes = serialize(models.coref);
  write_file((base / "coref.evnm").string(), coref_bytes);

  std::string manifest = "# evn model manifest\n";
  manifest += "mode=" + to_string(models.mode) + "\n";
  manifest += "seed=" + std::to_string(cfg.get_seed()) + "\n";
  for (const auto& e : entries)
    manifest += "member " + e.name + " " + e.kind + " " + e.file + " " + e.digest + "\n";
  manifest += "coref coref.evnm " + hex64(fnv1a64(coref_bytes)) + "\n";
  manifest += "config:\n";
  for (const auto& [key, value] : cfg.entries()) manifest += key + "=" + value + "\n";
  write_file((base / "manifest.txt").string(), manifest);
}

ModelSet load_models(const std::string& dir) {
  std::filesystem::path base(dir);
  std::string manifest_path = (base / "manifest.txt").string();
  if (!file_exists(manifest_path)) throw UsageError("no manifest.txt in model directory '" + dir + "'");
  std::string manifest = read_file(manifest_path);

  ModelSet models;
  bool have_coref = false;
  bool in_config = false;
  for (std::string_view raw : split(manifest, '\n')) {
    std::string_view line = trim(raw);
    if (in_config || line.empty() || line.front() == '#') continue;
    if (line == "config:") {
      in_config = true;
      continue;
    }
    if (line.rfind("mode=", 0) == 0) {
      models.mode = parse_run_mode(std::string(line.substr(5)));
      continue;
    }
    if (line.rfind("seed=", 0) == 0) continue;
    auto fields = split_ws(line);
    if (fields[0] == "member") {
      if (fields.size() != 5) throw DataError("manifest: malformed member line");
      std::string file = (base / std::string(fields[3])).string();
      if (!file_exists(file)) throw DataError("manifest names missing model file '" + file + "'");
      std::string bytes = read_file(file);
      if (hex64(fnv1a64(bytes)) != fields[4])
        throw DataError("model/manifest mismatch: digest of '" + std::string(fields[3]) +
                        "' does not match the manifest");
      DenseNet net = deserialize(bytes);
      std::string kind(fields[2]);
      if (kind == "span_realis") {
        models.span_realis.members.push_back(std::move(net));
      } else if (kind == "span_binary") {
        models.span_binary.members.push_back(std::move(net));
      } else if (kind == "realis_only") {
        models.realis_only.members.push_back(std::move(net));
      } else if (kind == "type") {
        models.type.task = task_of_kind(kind);
        models.type.members.push_back(std::move(net));
      } else {
        throw DataError("manifest: unknown member kind '" + kind + "'");
      }
      continue;
    }
    if (fields[0] == "coref") {
      if (fields.size() != 3) throw DataError("manifest: malformed coref line");
      std::string file = (base / std::string(fields[1])).string();
      if (!file_exists(file)) throw DataError("manifest names missing model file '" + file + "'");
      std::string bytes = read_file(file);
      if (hex64(fnv1a64(bytes)) != fields[2])
        throw DataError("model/manifest mismatch: digest of '" + std::string(fields[1]) +
                        "' does not match the manifest");
      models.coref = deserialize_coref(bytes);
      have_coref = true;
      continue;
    }
    throw DataError("manifest: unrecognized line '" + std::string(line) + "'");
  }
  if (!have_coref) throw DataError("manifest lists no coreference model");
  return models;
}

void cmd_train(const RunConfig& cfg) {
  // Fail fast on every referenced input before any training starts.
  std::string corpus_path = cfg.require_path("corpus");
  std::string gold_path = cfg.require_path("gold");
  std::string spec_path = cfg.require_path("ensemble_spec");
  std::string model_dir = cfg.require_str("model_dir");
  ResourceBundle bundle = load_bundle(cfg);

  std::vector<Document> docs = parse_document_file(read_file(corpus_path));
  AnnotationSet gold = parse_annotation_file(read_file(gold_path));
  validate_against(gold, docs);

  double lr = cfg.get_double("learning_rate", 0.01);
  int batch = static_cast<int>(cfg.get_int("batch_size", 32));
  auto [span_spec, type_spec] = parse_ensemble_spec(read_file(spec_path), lr, batch);
  if (span_spec.members.empty()) throw UsageError("ensemble spec declares no span+realis members");
  if (type_spec.members.empty()) throw UsageError("ensemble spec declares no type members");
  {
    std::set<std::string> names;
    for (const auto& c : span_spec.members)
      if (!names.insert(c.name).second) throw DataError("duplicate ensemble member name " + c.name);
    for (const auto& c : type_spec.members)
      if (!names.insert(c.name).second) throw DataError("duplicate ensemble member name " + c.name);
  }

  RunMode mode = cfg.mode();
  std::uint64_t seed = cfg.get_seed();
  int workers = cfg.workers();
  TrainLog log;
  auto log_fn = [&log](const std::string& member, int epoch, double loss) {
    log.add(member, epoch, loss);
  };

  ModelSet models;
  models.mode = mode == RunMode::separate_span_realis ? RunMode::separate_span_realis : RunMode::joint;

  if (models.mode == RunMode::joint) {
    Ensembles trained = train_ensembles(docs, gold, span_spec, type_spec, bundle, seed, workers, log_fn);
    models.span_realis = std::move(trained.span_realis);
    models.type = std::move(trained.type);
  } else {
    // Same member recipes with 2-class span and 3-class realis heads. The
    // realis classifiers train on gold trigger tokens only.
    TokenDataset data = build_token_dataset(docs, gold, bundle);
    if (data.span_realis.empty()) throw UsageError("training corpus contains no tokens");
    if (data.type.empty())
      throw UsageError("no event tokens in the corpus: the type ensemble has no training data");
    std::vector<Sample> span2 = data.span_realis;
    for (std::size_t i = 0; i < span2.size(); ++i) span2[i].label = data.span_binary[i];
    // Realis nets read the span+realis features of gold trigger tokens.
    std::vector<Sample> realis3;
    for (std::size_t i = 0; i < data.span_realis.size(); ++i)
      if (data.span_binary[i] == 1) {
        Sample s;
        s.x = data.span_realis[i].x;
        s.label = data.span_realis[i].label - 1;
        realis3.push_back(std::move(s));
      }

    struct Job {
      NetConfig config;
      const std::vector<Sample>* dataset;
      int n_classes;
      int target;  // 0 span_binary, 1 realis_only, 2 type
    };
    std::vector<Job> jobs;
    std::uint64_t member_index = 0;
    for (const NetConfig& c : span_spec.members)
      jobs.push_back({with_output_width(c, 2, "_span"), &span2, 2, 0});
    for (const NetConfig& c : span_spec.members)
      jobs.push_back({with_output_width(c, 3, "_realis"), &realis3, 3, 1});
    for (const NetConfig& c : type_spec.members)
      jobs.push_back({c, &data.type, ResourceBundle::kSubtypes + 1, 2});
    for (auto& j : jobs) j.config.seed = seed + member_index++;

    std::vector<DenseNet> trained(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
      const Job& j = jobs[i];
      EpochLogger member_log = [&log_fn, name = j.config.name](int epoch, double loss) {
        log_fn(name, epoch, loss);
      };
      trained[i] = train(j.config, *j.dataset, j.n_classes, member_log);
    });
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      Ensemble* dst = jobs[i].target == 0   ? &models.span_binary
                      : jobs[i].target == 1 ? &models.realis_only
                                            : &models.type;
      dst->members.push_back(std::move(trained[i]));
    }
    models.type.task = Task::type;
  }

  std::uint64_t coref_seed = cfg.get_seed() + 1000000;
  CorefConfig coref_cfg = coref_config_from(cfg, coref_seed);
  models.coref = train_coref(docs, gold, coref_cfg, bundle,
                             [&log](int epoch, double loss) { log.add("coref", epoch, loss); });

  save_models(model_dir, models, cfg);
  write_file((std::filesystem::path(model_dir) / "training_log.tsv").string(), log.to_tsv());
}

namespace {

Ensemble select_member(const Ensemble& ensemble, const std::string& name, const char* which) {
  for (const DenseNet& net : ensemble.members)
    if (net.config.name == name) {
      Ensemble out;
      out.task = ensemble.task;
      out.members.push_back(net);
      return out;
    }
  throw UsageError(std::string("config key '") + which + "' names unknown member '" + name + "'");
}

}  // namespace

std::vector<EventNugget> predict_document(const Document& doc, const ModelSet& models,
                                          const ResourceBundle& bundle, const RunConfig& cfg) {
  DetectOptions opts;
  opts.keep_other_subtype = cfg.get_bool("keep_other_subtype", false);
  opts.emit_margin = cfg.get_double("emit_margin", 0.0);

  RunMode mode = cfg.mode();
  std::vector<EventNugget> nuggets;
  if (mode == RunMode::separate_span_realis) {
    if (models.mode != RunMode::separate_span_realis)
      throw DataError("model/manifest mismatch: models were not trained in separate_span_realis mode");
    static const std::vector<std::string> span_classes = {"NonEvent", "Event"};
    static const std::vector<std::string> realis_classes = {"Actual", "Generic", "Other"};
    int next_id = 1;
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const Sentence& sent = doc.sentences[si];
      for (const Token& t : sent.tokens) {
        Eigen::VectorXd x = span_realis_features(t, sent, bundle);
        ClassProbabilities span_probs = ensemble_scores(models.span_binary, x, span_classes);
        if (span_probs.argmax() != 1) continue;
        if (opts.emit_margin > 0.0 && span_probs.scores[1] - span_probs.scores[0] < opts.emit_margin)
          continue;
        ClassProbabilities realis_probs = ensemble_scores(models.realis_only, x, realis_classes);
        int type_cls = classify_type(t, sent, models.type, bundle);
        if (type_cls == kOtherTypeClass && !opts.keep_other_subtype) continue;
        EventNugget n;
        n.mention_id = "E" + std::to_string(next_id++);
        n.doc_id = doc.doc_id;
        n.span = {{static_cast<int>(si) + 1, t.index}};
        n.text = t.text;
        n.subtype = type_cls == kOtherTypeClass ? kOtherTypeLabel : bundle.subtype_vocab[type_cls];
        n.realis = realis_classes[realis_probs.argmax()];
        nuggets.push_back(std::move(n));
      }
    }
  } else if (mode == RunMode::single_member) {
    if (models.mode != RunMode::joint)
      throw DataError("model/manifest mismatch: single_member prediction needs jointly trained models");
    Ensemble span_one = select_member(
        models.span_realis, cfg.get_str("strongest_span", models.span_realis.members.front().config.name),
        "strongest_span");
    Ensemble type_one = select_member(
        models.type, cfg.get_str("strongest_type", models.type.members.front().config.name),
        "strongest_type");
    nuggets = detect_document(doc, span_one, type_one, bundle, opts);
  } else {
    if (models.mode != RunMode::joint)
      throw DataError("model/manifest mismatch: joint prediction needs jointly trained models");
    nuggets = detect_document(doc, models.span_realis, models.type, bundle, opts);
  }
  return nuggets;
}

void cmd_predict(const RunConfig& cfg) {
  std::string corpus_path = cfg.require_path("corpus");
  std::string model_dir = cfg.require_str("model_dir");
  std::string out_dir = cfg.require_str("out_dir");
  ResourceBundle bundle = load_bundle(cfg);
  ModelSet models = load_models(model_dir);
  std::vector<Document> docs = parse_document_file(read_file(corpus_path));

  double threshold = cfg.get_double("coref_threshold", 0.5);
  bool same_type = cfg.get_bool("same_type_filter", true);

  std::vector<std::vector<EventNugget>> per_doc(docs.size());
  std::vector<Clustering> per_doc_clusters(docs.size());
  parallel_for(docs.size(), cfg.workers(), [&](std::size_t i) {
    per_doc[i] = predict_document(docs[i], models, bundle, cfg);
    ScoreFn score = [&](const EventNugget& a, const EventNugget& b) {
      return coref_score(a, b, docs[i], bundle, models.coref);
    };
    per_doc_clusters[i] = greedy_resolve(per_doc[i], score, threshold, same_type);
  });

  AnnotationSet out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.doc_order.push_back(docs[i].doc_id);
    out.clusterings[docs[i].doc_id] = std::move(per_doc_clusters[i]);
    for (auto& n : per_doc[i]) out.nuggets.push_back(std::move(n));
  }
  ensure_dir(out_dir);
  std::string system_id = cfg.get_str("system_id", "evn");
  write_file((std::filesystem::path(out_dir) / "predicted.ann").string(),
             write_annotation_file(out, system_id));
}

ScoreReport cmd_score(const RunConfig& cfg) {
  std::string corpus_path = cfg.require_path("corpus");
  std::string gold_path = cfg.require_path("gold");
  std::string sys_path = cfg.require_path("sys");
  std::string out_dir = cfg.require_str("out_dir");

  std::vector<Document> docs = parse_document_file(read_file(corpus_path));
  AnnotationSet gold = parse_annotation_file(read_file(gold_path));
  AnnotationSet sys = parse_annotation_file(read_file(sys_path));

  ScoreReport report = score_corpus(docs, gold, sys);
  ensure_dir(out_dir);
  std::filesystem::path base(out_dir);
  write_file((base / "report.tsv").string(), report_to_tsv(report, cfg.get_str("system_id", "evn")));
  write_file((base / "per_document.tsv").string(), per_document_to_tsv(report.per_document));
  write_file((base / "histogram.tsv").string(), histogram_to_tsv(report.histogram));
  return report;
}

void cmd_analyze(const RunConfig& cfg) {
  std::string corpus_path = cfg.require_path("corpus");
  std::string gold_path = cfg.require_path("gold");
  std::string out_dir = cfg.require_str("out_dir");

  std::vector<Document> docs = parse_document_file(read_file(corpus_path));
  AnnotationSet gold = parse_annotation_file(read_file(gold_path));
  validate_against(gold, docs);

  ensure_dir(out_dir);
  std::filesystem::path base(out_dir);
  write_file((base / "modifier_deprel.tsv").string(),
             table_to_tsv(modifier_deprel_table(docs, gold), "Dep. Rel."));
  write_file((base / "modifier_pos.tsv").string(),
             table_to_tsv(modifier_pos_table(docs, gold), "POS"));
  write_file((base / "context_pos.tsv").string(),
             table_to_tsv(context_pos_table(docs, gold), "POS"));
  write_file((base / "ner_by_subtype.tsv").string(),
             table_to_tsv(ner_by_subtype_table(docs, gold), "Event Type"));
}

}  // namespace evn
