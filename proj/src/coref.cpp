#include "evn/coref.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "evn/error.hpp"
#include "evn/util.hpp"

namespace evn {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return 1.0 / (1.0 + (-z.array()).exp());
}

CorefLayer init_layer(int out_dim, int in_dim, Rng& rng) {
  double limit = std::sqrt(6.0 / (in_dim + out_dim));
  CorefLayer layer;
  layer.w.resize(out_dim, in_dim);
  for (int r = 0; r < out_dim; ++r)
    for (int c = 0; c < in_dim; ++c) layer.w(r, c) = uniform(rng, -limit, limit);
  layer.b = Eigen::VectorXd::Zero(out_dim);
  return layer;
}

void check_layer(const CorefLayer& layer, int out_dim, int in_dim, const char* name) {
  if (layer.w.rows() != out_dim || layer.w.cols() != in_dim || layer.b.size() != out_dim)
    throw DataError(std::string("coreference net: bad shape for ") + name + " layer");
}

// Entity types present among the NER-typed modifiers of the trigger token.
std::unordered_set<int> modifier_entity_types(const EventNugget& n, const Document& doc,
                                              const ResourceBundle& bundle) {
  const Sentence& sent = nugget_sentence(n, doc);
  const Token& trigger = nugget_trigger_token(n, doc);
  std::unordered_set<int> out;
  for (const auto& [mod, rel] : modifiers(trigger, sent)) {
    if (mod->ner == "O") continue;
    auto it = bundle.ner_index.find(mod->ner);
    if (it != bundle.ner_index.end()) out.insert(it->second);
  }
  return out;
}

}  // namespace

CorefNet init_coref_net(const CorefConfig& config, Rng& rng) {
  CorefNet net;
  net.config = config;
  net.shared = init_layer(kMentionDim, kMentionDim, rng);
  net.side = init_layer(kSideDim, kSideDim, rng);
  net.merge = init_layer(kMergeDim, kMergeInDim, rng);
  net.out = init_layer(1, kMergeDim, rng);
  return net;
}

void validate_net(const CorefNet& net) {
  check_layer(net.shared, kMentionDim, kMentionDim, "shared");
  check_layer(net.side, kSideDim, kSideDim, "side");
  check_layer(net.merge, kMergeDim, kMergeInDim, "merge");
  check_layer(net.out, 1, kMergeDim, "output");
}

Eigen::VectorXd encode_mention(const EventNugget& n, const Document& doc, const ResourceBundle& bundle) {
  const Token& trigger = nugget_trigger_token(n, doc);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kMentionDim);
  v.head(ResourceBundle::kEmbeddingDim) = lookup_embedding(trigger.lemma, bundle);
  auto it = bundle.pos_index.find(trigger.pos);
  if (it != bundle.pos_index.end()) v[ResourceBundle::kEmbeddingDim + it->second] = 1.0;
  return v;
}

namespace {

struct PairState {
  Eigen::VectorXd base1, base2;      // mention encodings
  Eigen::VectorXd h1, h2;            // shared-layer outputs
  PairFeatures feats;
  Eigen::VectorXd side_out;          // side-layer output
  Eigen::VectorXd merge_in;          // [cos, l1, l2, side_out]
  Eigen::VectorXd merge_out;
  double score = 0.0;
};

Eigen::VectorXd build_side_input(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                                 const ResourceBundle& bundle) {
  const Token& t1 = nugget_trigger_token(m1, doc);
  const Token& t2 = nugget_trigger_token(m2, doc);
  Eigen::VectorXd side = Eigen::VectorXd::Zero(kSideDim);
  int off = 0;
  side.segment(off, 300) =
      (lookup_embedding(t1.text, bundle) - lookup_embedding(t2.text, bundle)).cwiseAbs();
  off += 300;
  // The two affix blocks are combined as (max, min) so that the pair
  // representation does not depend on mention order.
  Eigen::VectorXd a1 = affix_features(t1.lemma, bundle);
  Eigen::VectorXd a2 = affix_features(t2.lemma, bundle);
  side.segment(off, 36) = a1.cwiseMax(a2);
  off += 36;
  side.segment(off, 36) = a1.cwiseMin(a2);
  off += 36;
  auto types1 = modifier_entity_types(m1, doc, bundle);
  auto types2 = modifier_entity_types(m2, doc, bundle);
  for (int type : types1)
    if (types2.count(type)) side[off + type] = 1.0;
  return side;
}

void run_pair(const EventNugget& m1, const EventNugget& m2, const Document& doc,
              const ResourceBundle& bundle, const CorefNet& net, PairState& st) {
  st.base1 = encode_mention(m1, doc, bundle);
  st.base2 = encode_mention(m2, doc, bundle);
  st.h1 = sigmoid(net.shared.w * st.base1 + net.shared.b);
  st.h2 = sigmoid(net.shared.w * st.base2 + net.shared.b);

  double n1 = st.h1.norm();
  double n2 = st.h2.norm();
  st.feats.cosine = (n1 > 0.0 && n2 > 0.0) ? st.h1.dot(st.h2) / (n1 * n2) : 0.0;
  st.feats.l1 = (st.h1 - st.h2).lpNorm<1>();
  st.feats.l2 = (st.h1 - st.h2).norm();
  st.feats.side_input = build_side_input(m1, m2, doc, bundle);

  st.side_out = sigmoid(net.side.w * st.feats.side_input + net.side.b);
  st.merge_in.resize(kMergeInDim);
  st.merge_in[0] = st.feats.cosine;
  st.merge_in[1] = st.feats.l1;
  st.merge_in[2] = st.feats.l2;
  st.merge_in.tail(kSideDim) = st.side_out;
  st.merge_out = sigmoid(net.merge.w * st.merge_in + net.merge.b);
  Eigen::VectorXd z = net.out.w * st.merge_out + net.out.b;
  st.score = 1.0 / (1.0 + std::exp(-z[0]));
}

CorefGradients zero_gradients(const CorefNet& net) {
  CorefGradients g;
  g.shared.w = Eigen::MatrixXd::Zero(net.shared.w.rows(), net.shared.w.cols());
  g.shared.b = Eigen::VectorXd::Zero(net.shared.b.size());
  g.side.w = Eigen::MatrixXd::Zero(net.side.w.rows(), net.side.w.cols());
  g.side.b = Eigen::VectorXd::Zero(net.side.b.size());
  g.merge.w = Eigen::MatrixXd::Zero(net.merge.w.rows(), net.merge.w.cols());
  g.merge.b = Eigen::VectorXd::Zero(net.merge.b.size());
  g.out.w = Eigen::MatrixXd::Zero(net.out.w.rows(), net.out.w.cols());
  g.out.b = Eigen::VectorXd::Zero(net.out.b.size());
  return g;
}

// Accumulates d(BCE(score, target))/d(params) for one pair.
void accumulate_pair_gradient(const CorefNet& net, const PairState& st, double target,
                              CorefGradients& g) {
  double dz_out = st.score - target;  // sigmoid + BCE
  g.out.w += dz_out * st.merge_out.transpose();
  g.out.b[0] += dz_out;

  Eigen::VectorXd d_merge_out = net.out.w.transpose() * dz_out;
  Eigen::VectorXd dz_merge =
      d_merge_out.array() * st.merge_out.array() * (1.0 - st.merge_out.array());
  g.merge.w += dz_merge * st.merge_in.transpose();
  g.merge.b += dz_merge;

  Eigen::VectorXd d_merge_in = net.merge.w.transpose() * dz_merge;
  double d_cos = d_merge_in[0];
  double d_l1 = d_merge_in[1];
  double d_l2 = d_merge_in[2];
  Eigen::VectorXd d_side_out = d_merge_in.tail(kSideDim);

  Eigen::VectorXd dz_side = d_side_out.array() * st.side_out.array() * (1.0 - st.side_out.array());
  g.side.w += dz_side * st.feats.side_input.transpose();
  g.side.b += dz_side;

  // Similarities back to the two shared embeddings.
  Eigen::VectorXd diff = st.h1 - st.h2;
  double n1 = st.h1.norm();
  double n2 = st.h2.norm();
  Eigen::VectorXd dh1 = Eigen::VectorXd::Zero(st.h1.size());
  Eigen::VectorXd dh2 = Eigen::VectorXd::Zero(st.h2.size());
  if (n1 > 0.0 && n2 > 0.0) {
    double inv = 1.0 / (n1 * n2);
    dh1 += d_cos * (st.h2 * inv - st.feats.cosine * st.h1 / (n1 * n1));
    dh2 += d_cos * (st.h1 * inv - st.feats.cosine * st.h2 / (n2 * n2));
  }
  Eigen::VectorXd sign = diff.array().sign();
  dh1 += d_l1 * sign;
  dh2 -= d_l1 * sign;
  if (st.feats.l2 > 0.0) {
    dh1 += d_l2 * diff / st.feats.l2;
    dh2 -= d_l2 * diff / st.feats.l2;
  }

  Eigen::VectorXd dz1 = dh1.array() * st.h1.array() * (1.0 - st.h1.array());
  Eigen::VectorXd dz2 = dh2.array() * st.h2.array() * (1.0 - st.h2.array());
  g.shared.w += dz1 * st.base1.transpose() + dz2 * st.base2.transpose();
  g.shared.b += dz1 + dz2;
}

double bce(double score, double target) {
  const double eps = 1e-12;
  double p = std::min(std::max(score, eps), 1.0 - eps);
  return target > 0.5 ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace

double coref_pair_loss(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                       const ResourceBundle& bundle, const CorefNet& net, double target) {
  PairState st;
  run_pair(m1, m2, doc, bundle, net, st);
  return bce(st.score, target);
}

CorefGradients coref_pair_gradient(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                                   const ResourceBundle& bundle, const CorefNet& net, double target) {
  PairState st;
  run_pair(m1, m2, doc, bundle, net, st);
  CorefGradients g = zero_gradients(net);
  accumulate_pair_gradient(net, st, target, g);
  return g;
}

PairFeatures pair_features(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                           const ResourceBundle& bundle, const CorefNet& net) {
  PairState st;
  run_pair(m1, m2, doc, bundle, net, st);
  return st.feats;
}

double coref_score(const EventNugget& m1, const EventNugget& m2, const Document& doc,
                   const ResourceBundle& bundle, const CorefNet& net) {
  PairState st;
  run_pair(m1, m2, doc, bundle, net, st);
  return st.score;
}

Clustering greedy_resolve(const std::vector<EventNugget>& mentions, const ScoreFn& score,
                          double threshold, bool same_type_filter) {
  const std::size_t n = mentions.size();
  std::vector<int> cluster_of(n);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t j = 0; j < n; ++j) {
    int best = -1;
    double best_score = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      if (same_type_filter && mentions[i].subtype != mentions[j].subtype) continue;
      double s = score(mentions[i], mentions[j]);
      // >= keeps the nearest antecedent on ties.
      if (best < 0 || s >= best_score) {
        best = static_cast<int>(i);
        best_score = s;
      }
    }
    if (best >= 0 && best_score > threshold) {
      cluster_of[j] = cluster_of[best];
      members[cluster_of[j]].push_back(j);
    } else {
      cluster_of[j] = static_cast<int>(members.size());
      members.push_back({j});
    }
  }
  Clustering out;
  for (const auto& cluster : members) {
    std::set<std::string> ids;
    for (std::size_t idx : cluster) ids.insert(mentions[idx].mention_id);
    out.clusters.push_back(std::move(ids));
  }
  return out;
}

CorefNet train_coref(const std::vector<Document>& docs, const AnnotationSet& gold,
                     const CorefConfig& config, const ResourceBundle& bundle,
                     const EpochLogger& log) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;

  struct Pair {
    const EventNugget* a;
    const EventNugget* b;
    const Document* doc;
    double target;
  };
  std::vector<Pair> positives, negatives;
  for (const std::string& doc_id : gold.doc_order) {
    auto doc_it = by_id.find(doc_id);
    if (doc_it == by_id.end()) throw DataError("annotation references unknown document '" + doc_id + "'");
    auto mentions = gold.nuggets_of(doc_id);
    const Clustering& clustering = gold.clusterings.at(doc_id);
    std::unordered_map<std::string, int> cluster_of;
    for (std::size_t c = 0; c < clustering.clusters.size(); ++c)
      for (const std::string& id : clustering.clusters[c]) cluster_of[id] = static_cast<int>(c);
    for (std::size_t i = 0; i < mentions.size(); ++i)
      for (std::size_t j = i + 1; j < mentions.size(); ++j) {
        bool same = cluster_of.at(mentions[i]->mention_id) == cluster_of.at(mentions[j]->mention_id);
        Pair p{mentions[i], mentions[j], doc_it->second, same ? 1.0 : 0.0};
        (same ? positives : negatives).push_back(p);
      }
  }
  if (positives.empty()) throw DataError("no coreferent mention pairs in the training corpus");

  Rng rng(config.seed);
  shuffle(negatives, rng);
  std::size_t keep = static_cast<std::size_t>(config.negative_ratio * static_cast<double>(positives.size()));
  if (keep < negatives.size()) negatives.resize(keep);

  std::vector<Pair> examples = positives;
  examples.insert(examples.end(), negatives.begin(), negatives.end());

  CorefNet net = init_coref_net(config, rng);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(examples, rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < examples.size(); start += config.batch_size) {
      std::size_t bsz = std::min<std::size_t>(config.batch_size, examples.size() - start);
      CorefGradients grads = zero_gradients(net);
      double loss = 0.0;
      for (std::size_t i = 0; i < bsz; ++i) {
        const Pair& p = examples[start + i];
        PairState st;
        run_pair(*p.a, *p.b, *p.doc, bundle, net, st);
        accumulate_pair_gradient(net, st, p.target, grads);
        loss += bce(st.score, p.target);
      }
      double scale = config.learning_rate / static_cast<double>(bsz);
      net.shared.w -= scale * grads.shared.w;
      net.shared.b -= scale * grads.shared.b;
      net.side.w -= scale * grads.side.w;
      net.side.b -= scale * grads.side.b;
      net.merge.w -= scale * grads.merge.w;
      net.merge.b -= scale * grads.merge.b;
      net.out.w -= scale * grads.out.w;
      net.out.b -= scale * grads.out.b;
      epoch_loss += loss / static_cast<double>(bsz);
      ++batches;
    }
    if (log) log(epoch, epoch_loss / static_cast<double>(batches));
  }
  return net;
}

std::string serialize(const CorefNet& net) {
  std::string config_text;
  config_text += "kind=coref\n";
  config_text += "epochs=" + std::to_string(net.config.epochs) + "\n";
  config_text += "seed=" + std::to_string(net.config.seed) + "\n";
  config_text += "learning_rate=" + format_f64(net.config.learning_rate) + "\n";
  config_text += "batch_size=" + std::to_string(net.config.batch_size) + "\n";
  config_text += "negative_ratio=" + format_f64(net.config.negative_ratio) + "\n";
  std::vector<std::pair<const Eigen::MatrixXd*, const Eigen::VectorXd*>> layers = {
      {&net.shared.w, &net.shared.b},
      {&net.side.w, &net.side.b},
      {&net.merge.w, &net.merge.b},
      {&net.out.w, &net.out.b}};
  return pack_model(layers, config_text);
}

CorefNet deserialize_coref(const std::string& bytes) {
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> layers;
  std::string config_text;
  unpack_model(bytes, layers, config_text);
  if (layers.size() != 4) throw DataError("coreference model: expected 4 subnets");

  CorefNet net;
  for (std::string_view line : split(config_text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("coreference model: bad config line");
    std::string key(line.substr(0, eq));
    std::string value(line.substr(eq + 1));
    if (key == "kind") {
      if (value != "coref") throw DataError("model file: expected a coreference net, got kind '" + value + "'");
    } else if (key == "epochs") {
      std::int64_t v;
      if (!parse_i64(value, v)) throw DataError("coreference model: bad epochs");
      net.config.epochs = static_cast<int>(v);
    } else if (key == "seed") {
      std::uint64_t v;
      if (!parse_u64(value, v)) throw DataError("coreference model: bad seed");
      net.config.seed = v;
    } else if (key == "learning_rate") {
      if (!parse_f64(value, net.config.learning_rate)) throw DataError("coreference model: bad learning rate");
    } else if (key == "batch_size") {
      std::int64_t v;
      if (!parse_i64(value, v)) throw DataError("coreference model: bad batch size");
      net.config.batch_size = static_cast<int>(v);
    } else if (key == "negative_ratio") {
      if (!parse_f64(value, net.config.negative_ratio)) throw DataError("coreference model: bad negative ratio");
    } else {
      throw DataError("coreference model: unknown config key '" + key + "'");
    }
  }
  net.shared = {std::move(layers[0].first), std::move(layers[0].second)};
  net.side = {std::move(layers[1].first), std::move(layers[1].second)};
  net.merge = {std::move(layers[2].first), std::move(layers[2].second)};
  net.out = {std::move(layers[3].first), std::move(layers[3].second)};
  validate_net(net);
  return net;
}

}  // namespace evn
