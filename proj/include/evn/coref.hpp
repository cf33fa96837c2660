#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "evn/corpus.hpp"
#include "evn/features.hpp"
#include "evn/nn.hpp"

namespace evn {

// Pairwise mention scorer: a shared 347-unit sigmoid layer embeds each
// mention (lemma embedding + POS one-hot), a 380-unit sigmoid layer embeds
// the pair's side features, and cosine/L1/L2 similarities between the two
// shared embeddings join the side embedding in a 10-unit layer feeding a
// single sigmoid output.
inline constexpr int kMentionDim = 347;   // 300 lemma + 47 POS
inline constexpr int kSideDim = 380;      // 300 |token diff| + 36 + 36 affix + 8 overlap
inline constexpr int kMergeInDim = 383;   // 3 similarities + side embedding
inline constexpr int kMergeDim = 10;

struct CorefLayer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct CorefConfig {
  int epochs = 10;
  double learning_rate = 0.01;
  int batch_size = 32;
  double negative_ratio = 3.0;  // sampled negatives per positive pair
  std::uint64_t seed = 0;
};

struct CorefNet {
  CorefLayer shared;  // 347 -> 347
  CorefLayer side;    // 380 -> 380
  CorefLayer merge;   // 383 -> 10
  CorefLayer out;     // 10 -> 1
  CorefConfig config;
};

CorefNet init_coref_net(const CorefConfig& config, Rng& rng);
void validate_net(const CorefNet& net);  // throws DataError on bad shapes

// 347-d encoding of the mention's (first) trigger token.
Eigen::VectorXd encode_mention(const EventNugget& n, const Document& doc, const ResourceBundle& bundle);

struct PairFeatures {
  double cosine = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  Eigen::VectorXd side_input;  // 380-d, symmetric in the two mentions
};

PairFeatures pair_features(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                           const ResourceBundle& bundle, const CorefNet& net);

double coref_score(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                   const ResourceBundle& bundle, const CorefNet& net);

using ScoreFn = std::function<double(const EventNugget&, const EventNugget&)>;

// Left-to-right greedy merging. Mention j joins the cluster of its best
// scoring antecedent when that score exceeds the threshold; antecedent
// ties break toward the nearest mention. With same_type_filter on, only
// same-subtype antecedents are considered.
Clustering greedy_resolve(const std::vector<EventNugget>& mentions, const ScoreFn& score,
                          double threshold = 0.5, bool same_type_filter = true);

// Binary cross-entropy over within-document mention pairs: positives are
// same-cluster pairs, negatives sampled at config.negative_ratio.
CorefNet train_coref(const std::vector<Document>& docs, const AnnotationSet& gold,
                     const CorefConfig& config, const ResourceBundle& bundle,
                     const EpochLogger& log = nullptr);

// Per-pair binary cross-entropy and its analytic parameter gradient
// (gradients reuse the layer layout of the net).
struct CorefGradients {
  CorefLayer shared, side, merge, out;
};
double coref_pair_loss(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                       const ResourceBundle& bundle, const CorefNet& net, double target);
CorefGradients coref_pair_gradient(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                                   const ResourceBundle& bundle, const CorefNet& net, double target);

std::string serialize(const CorefNet& net);
CorefNet deserialize_coref(const std::string& bytes);

}  // namespace evn
