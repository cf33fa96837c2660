#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "evn/corpus.hpp"
#include "evn/features.hpp"
#include "evn/nn.hpp"

namespace evn {

enum class Task { span_realis, type };

// Joint span+realis classes; index 0 must stay NonEvent so that the
// lowest-index tie rule is conservative.
enum class SpanRealisClass { non_event = 0, actual = 1, generic = 2, other = 3 };

const std::vector<std::string>& span_realis_class_names();

// The 19th type class collects subtypes outside the configured inventory.
inline constexpr int kOtherTypeClass = 18;
inline const char* kOtherTypeLabel = "OTHER";

struct EnsembleSpec {
  std::vector<NetConfig> members;
  Task task = Task::span_realis;
};

struct Ensemble {
  std::vector<DenseNet> members;
  Task task = Task::span_realis;
};

// One member per line: NAME LAYERS DROPOUTS EPOCHS with dash-separated
// layer/dropout syntax. Names starting with S feed the span+realis
// ensemble, names starting with T the type ensemble. A dropout list one
// entry short of the layer list gets a trailing 0 for the output layer.
std::pair<EnsembleSpec, EnsembleSpec> parse_ensemble_spec(const std::string& text,
                                                          double learning_rate, int batch_size);

struct ClassProbabilities {
  Eigen::VectorXd scores;  // aggregated, unnormalized
  std::vector<std::string> classes;

  // Ties break toward the lowest class index.
  int argmax() const;
};

ClassProbabilities aggregate(const std::vector<Eigen::VectorXd>& member_outputs,
                             const std::vector<std::string>& classes);

ClassProbabilities ensemble_scores(const Ensemble& ensemble, const Eigen::VectorXd& features,
                                   const std::vector<std::string>& classes);

SpanRealisClass classify_token(const Token& t, const Sentence& s, const Ensemble& span_realis_ensemble,
                               const ResourceBundle& bundle);

// Returns the 19-class index; callers drop kOtherTypeClass predictions
// unless configured to keep them.
int classify_type(const Token& t, const Sentence& s, const Ensemble& type_ensemble,
                  const ResourceBundle& bundle);

struct DetectOptions {
  bool keep_other_subtype = false;
  double emit_margin = 0.0;  // required lead of the best event class over NonEvent
};

std::vector<EventNugget> detect_document(const Document& doc, const Ensemble& span_realis_ensemble,
                                         const Ensemble& type_ensemble, const ResourceBundle& bundle,
                                         const DetectOptions& opts = {});

// Word-level training instances. Tokens covered by a gold nugget carry the
// nugget's realis (span task) and its subtype class (type task); all other
// tokens are NonEvent for the span task and absent from the type task.
struct TokenDataset {
  std::vector<Sample> span_realis;  // labels: SpanRealisClass
  std::vector<Sample> type;         // labels: 0..18
  std::vector<int> span_binary;     // parallel to span_realis: 1 iff event token
  std::vector<int> realis_only;     // parallel to type: 0 Actual, 1 Generic, 2 Other
};

TokenDataset build_token_dataset(const std::vector<Document>& docs, const AnnotationSet& gold,
                                 const ResourceBundle& bundle);

struct Ensembles {
  Ensemble span_realis;
  Ensemble type;
};

Ensembles train_ensembles(const std::vector<Document>& docs, const AnnotationSet& gold,
                          const EnsembleSpec& span_spec, const EnsembleSpec& type_spec,
                          const ResourceBundle& bundle, std::uint64_t base_seed, int workers,
                          const std::function<void(const std::string&, int, double)>& log = nullptr);

}  // namespace evn
