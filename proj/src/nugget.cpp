#include "evn/nugget.hpp"

#include <map>

#include "evn/error.hpp"
#include "evn/util.hpp"

namespace evn {

const std::vector<std::string>& span_realis_class_names() {
  static const std::vector<std::string> names = {"NonEvent", "Actual", "Generic", "Other"};
  return names;
}

namespace {

int realis_class(const std::string& realis) {
  if (realis == "Actual") return static_cast<int>(SpanRealisClass::actual);
  if (realis == "Generic") return static_cast<int>(SpanRealisClass::generic);
  if (realis == "Other") return static_cast<int>(SpanRealisClass::other);
  throw DataError("unknown realis label '" + realis + "'");
}

}  // namespace

std::pair<EnsembleSpec, EnsembleSpec> parse_ensemble_spec(const std::string& text,
                                                          double learning_rate, int batch_size) {
  EnsembleSpec span_spec;
  span_spec.task = Task::span_realis;
  EnsembleSpec type_spec;
  type_spec.task = Task::type;

  auto lines = split(text, '\n');
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = trim(lines[li]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_ws(line);
    if (fields.size() != 4)
      throw DataError("ensemble spec line " + std::to_string(li + 1) +
                      ": expected 'NAME LAYERS DROPOUTS EPOCHS'");
    NetConfig c;
    c.name = std::string(fields[0]);
    for (auto part : split(fields[1], '-')) {
      std::int64_t v;
      if (!parse_i64(part, v) || v <= 0)
        throw DataError("ensemble spec line " + std::to_string(li + 1) + ": bad layer size");
      c.layer_sizes.push_back(static_cast<int>(v));
    }
    for (auto part : split(fields[2], '-')) {
      double v;
      if (!parse_f64(part, v))
        throw DataError("ensemble spec line " + std::to_string(li + 1) + ": bad dropout rate");
      c.dropout_rates.push_back(v);
    }
    // Table-style dropout strings sometimes omit the output entry.
    if (c.dropout_rates.size() + 1 == c.layer_sizes.size()) c.dropout_rates.push_back(0.0);
    std::int64_t epochs;
    if (!parse_i64(fields[3], epochs) || epochs <= 0)
      throw DataError("ensemble spec line " + std::to_string(li + 1) + ": bad epoch count");
    c.epochs = static_cast<int>(epochs);
    c.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.activations = default_activations(c.layer_sizes.size(), c.layer_sizes.back());

    char head = c.name.empty() ? '?' : c.name[0];
    if (head == 'S' || head == 's') {
      span_spec.members.push_back(std::move(c));
    } else if (head == 'T' || head == 't') {
      type_spec.members.push_back(std::move(c));
    } else {
      throw DataError("ensemble spec line " + std::to_string(li + 1) +
                      ": member name must start with S or T");
    }
  }
  for (const NetConfig& c : span_spec.members) {
    validate_config(c);
    if (c.layer_sizes.back() != 4)
      throw DataError("span+realis member " + c.name + " must end in 4 outputs");
  }
  for (const NetConfig& c : type_spec.members) {
    validate_config(c);
    if (c.layer_sizes.back() != ResourceBundle::kSubtypes + 1)
      throw DataError("type member " + c.name + " must end in 19 outputs");
  }
  return {std::move(span_spec), std::move(type_spec)};
}

int ClassProbabilities::argmax() const {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

ClassProbabilities aggregate(const std::vector<Eigen::VectorXd>& member_outputs,
                             const std::vector<std::string>& classes) {
  if (member_outputs.empty()) throw UsageError("aggregate of an empty member list");
  ClassProbabilities out;
  out.classes = classes;
  out.scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes.size()));
  for (const auto& scores : member_outputs) {
    if (scores.size() != out.scores.size())
      throw UsageError("member output length mismatch");
    out.scores += scores;
  }
  return out;
}

ClassProbabilities ensemble_scores(const Ensemble& ensemble, const Eigen::VectorXd& features,
                                   const std::vector<std::string>& classes) {
  if (ensemble.members.empty()) throw UsageError("ensemble has no trained members");
  std::vector<Eigen::VectorXd> outputs;
  outputs.reserve(ensemble.members.size());
  for (const DenseNet& net : ensemble.members) outputs.push_back(forward(net, features, Mode::infer));
  return aggregate(outputs, classes);
}

SpanRealisClass classify_token(const Token& t, const Sentence& s, const Ensemble& span_realis_ensemble,
                               const ResourceBundle& bundle) {
  Eigen::VectorXd x = span_realis_features(t, s, bundle);
  ClassProbabilities probs = ensemble_scores(span_realis_ensemble, x, span_realis_class_names());
  return static_cast<SpanRealisClass>(probs.argmax());
}

int classify_type(const Token& t, const Sentence& s, const Ensemble& type_ensemble,
                  const ResourceBundle& bundle) {
  std::vector<std::string> classes = bundle.subtype_vocab;
  classes.push_back(kOtherTypeLabel);
  Eigen::VectorXd x = type_features(t, s, bundle);
  ClassProbabilities probs = ensemble_scores(type_ensemble, x, classes);
  return probs.argmax();
}

std::vector<EventNugget> detect_document(const Document& doc, const Ensemble& span_realis_ensemble,
                                         const Ensemble& type_ensemble, const ResourceBundle& bundle,
                                         const DetectOptions& opts) {
  std::vector<EventNugget> out;
  int next_id = 1;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const Sentence& sent = doc.sentences[si];
    for (const Token& t : sent.tokens) {
      Eigen::VectorXd x = span_realis_features(t, sent, bundle);
      ClassProbabilities probs = ensemble_scores(span_realis_ensemble, x, span_realis_class_names());
      int cls = probs.argmax();
      if (cls == static_cast<int>(SpanRealisClass::non_event)) continue;
      if (opts.emit_margin > 0.0 &&
          probs.scores[cls] - probs.scores[static_cast<int>(SpanRealisClass::non_event)] < opts.emit_margin)
        continue;
      int type_cls = classify_type(t, sent, type_ensemble, bundle);
      if (type_cls == kOtherTypeClass && !opts.keep_other_subtype) continue;

      EventNugget n;
      n.mention_id = "E" + std::to_string(next_id++);
      n.doc_id = doc.doc_id;
      n.span = {{static_cast<int>(si) + 1, t.index}};
      n.text = t.text;
      n.subtype = type_cls == kOtherTypeClass ? kOtherTypeLabel : bundle.subtype_vocab[type_cls];
      n.realis = span_realis_class_names()[cls];
      out.push_back(std::move(n));
    }
  }
  return out;
}

TokenDataset build_token_dataset(const std::vector<Document>& docs, const AnnotationSet& gold,
                                 const ResourceBundle& bundle) {
  TokenDataset data;
  for (const Document& doc : docs) {
    // First covering nugget per token, in annotation order.
    std::map<SpanTok, const EventNugget*> covering;
    for (const auto& n : gold.nuggets) {
      if (n.doc_id != doc.doc_id) continue;
      for (const SpanTok& st : n.span) covering.emplace(st, &n);
    }
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const Sentence& sent = doc.sentences[si];
      for (const Token& t : sent.tokens) {
        auto it = covering.find(SpanTok{static_cast<int>(si) + 1, t.index});
        const EventNugget* nugget = it == covering.end() ? nullptr : it->second;

        Sample span_sample;
        span_sample.x = span_realis_features(t, sent, bundle);
        span_sample.label = nugget ? realis_class(nugget->realis)
                                   : static_cast<int>(SpanRealisClass::non_event);
        data.span_realis.push_back(std::move(span_sample));
        data.span_binary.push_back(nugget ? 1 : 0);

        if (nugget) {
          Sample type_sample;
          type_sample.x = type_features(t, sent, bundle);
          auto sub = bundle.subtype_index.find(nugget->subtype);
          type_sample.label = sub == bundle.subtype_index.end() ? kOtherTypeClass : sub->second;
          data.type.push_back(std::move(type_sample));
          data.realis_only.push_back(realis_class(nugget->realis) - 1);
        }
      }
    }
  }
  return data;
}

Ensembles train_ensembles(const std::vector<Document>& docs, const AnnotationSet& gold,
                          const EnsembleSpec& span_spec, const EnsembleSpec& type_spec,
                          const ResourceBundle& bundle, std::uint64_t base_seed, int workers,
                          const std::function<void(const std::string&, int, double)>& log) {
  if (docs.empty()) throw UsageError("training corpus is empty");
  TokenDataset data = build_token_dataset(docs, gold, bundle);
  if (data.span_realis.empty()) throw UsageError("training corpus contains no tokens");
  if (!type_spec.members.empty() && data.type.empty())
    throw UsageError("no event tokens in the corpus: the type ensemble has no training data");

  struct Job {
    NetConfig config;
    const std::vector<Sample>* dataset;
    int n_classes;
    Task task;
  };
  std::vector<Job> jobs;
  std::uint64_t member_index = 0;
  for (const NetConfig& c : span_spec.members) {
    Job j{c, &data.span_realis, 4, Task::span_realis};
    j.config.seed = base_seed + member_index++;
    jobs.push_back(std::move(j));
  }
  for (const NetConfig& c : type_spec.members) {
    Job j{c, &data.type, ResourceBundle::kSubtypes + 1, Task::type};
    j.config.seed = base_seed + member_index++;
    jobs.push_back(std::move(j));
  }

  std::vector<DenseNet> trained(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    EpochLogger member_log;
    if (log) {
      std::string name = j.config.name;
      member_log = [log, name](int epoch, double loss) { log(name, epoch, loss); };
    }
    trained[i] = train(j.config, *j.dataset, j.n_classes, member_log);
  });

  Ensembles out;
  out.span_realis.task = Task::span_realis;
  out.type.task = Task::type;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].task == Task::span_realis)
      out.span_realis.members.push_back(std::move(trained[i]));
    else
      out.type.members.push_back(std::move(trained[i]));
  }
  return out;
}

}  // namespace evn
