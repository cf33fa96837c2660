#include <cmath>
#include <set>

#include "doctest.h"
#include "evn/error.hpp"
#include "evn/nugget.hpp"
#include "evn/util.hpp"
#include "fixtures.hpp"

using namespace evn;

namespace {

// Constant-output net: zero weights, bias = logits.
DenseNet stub_net(int input_dim, const Eigen::VectorXd& logits, const std::string& name = "stub") {
  NetConfig c;
  c.name = name;
  c.layer_sizes = {input_dim, static_cast<int>(logits.size())};
  c.dropout_rates = {0.0, 0.0};
  c.activations = {Activation::identity, Activation::softmax};
  Rng rng(0);
  DenseNet net = init_net(c, rng);
  net.weights[0].setZero();
  net.biases[0] = logits;
  return net;
}

Eigen::VectorXd log_probs(std::initializer_list<double> probs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(probs.size()));
  int i = 0;
  for (double p : probs) v[i++] = std::log(p);
  return v;
}

Ensemble stub_ensemble(Task task, int input_dim, const std::vector<Eigen::VectorXd>& member_logits) {
  Ensemble e;
  e.task = task;
  for (std::size_t i = 0; i < member_logits.size(); ++i)
    e.members.push_back(stub_net(input_dim, member_logits[i], "stub" + std::to_string(i)));
  return e;
}

Sentence tiny_sentence(int n) {
  Sentence s;
  for (int i = 1; i <= n; ++i) {
    Token t;
    t.index = i;
    t.text = "w" + std::to_string(i);
    t.lemma = t.text;
    t.pos = "NN";
    t.ner = "O";
    t.head = i == 1 ? 0 : 1;
    t.deprel = i == 1 ? "root" : "dep";
    t.char_begin = i * 10;
    t.char_end = i * 10 + 2;
    s.tokens.push_back(t);
  }
  return s;
}

std::string fixture_embeddings_stub() {
  // Only needs to satisfy the loader; most tests use the richer fixture.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(300);
  std::string line = "w1";
  for (int i = 0; i < 300; ++i) line += " 0";
  return line + "\n";
}

}  // namespace

TEST_CASE("the default ensemble spec file parses to the 13 documented members") {
  const std::string spec_text = read_file(evntest::config_path("ensemble_default.spec"));
  auto [span_spec, type_spec] = parse_ensemble_spec(spec_text, 0.01, 32);

  REQUIRE(span_spec.members.size() == 10);
  REQUIRE(type_spec.members.size() == 3);

  const NetConfig& s1 = span_spec.members[0];
  CHECK(s1.name == "S1");
  CHECK(s1.layer_sizes == std::vector<int>{2468, 600, 600, 50, 4});
  CHECK(s1.dropout_rates == std::vector<double>{0.0, 0.5, 0.0, 0.0, 0.0});
  CHECK(s1.epochs == 10);
  CHECK(s1.activations.front() == Activation::relu);
  CHECK(s1.activations.back() == Activation::softmax);

  // Dropout strings one entry short are padded with 0 for the output layer.
  const NetConfig& s2 = span_spec.members[1];
  CHECK(s2.dropout_rates == std::vector<double>{0.0, 0.2, 0.0, 0.0, 0.0});
  CHECK(s2.epochs == 15);

  const NetConfig& s3 = span_spec.members[2];
  CHECK(s3.layer_sizes == std::vector<int>{2468, 2468, 1234, 600, 200, 4});
  CHECK(s3.dropout_rates == std::vector<double>{0.0, 0.2, 0.5, 0.2, 0.0, 0.0});

  const NetConfig& s9 = span_spec.members[8];
  CHECK(s9.layer_sizes == std::vector<int>{2468, 1000, 600, 200, 4});
  CHECK(s9.epochs == 10);

  const NetConfig& t1 = type_spec.members[0];
  CHECK(t1.layer_sizes == std::vector<int>{852, 852, 852, 200, 19});
  CHECK(t1.dropout_rates == std::vector<double>{0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(t1.epochs == 10);
  const NetConfig& t3 = type_spec.members[2];
  CHECK(t3.layer_sizes == std::vector<int>{852, 852, 400, 200, 19});
  CHECK(t3.epochs == 15);

  for (const NetConfig& c : span_spec.members) CHECK(c.layer_sizes.front() == 2468);
  for (const NetConfig& c : type_spec.members) CHECK(c.layer_sizes.front() == 852);
}

TEST_CASE("ensemble spec errors") {
  CHECK_THROWS_AS(parse_ensemble_spec("S1 2468-4\n", 0.01, 32), DataError);
  CHECK_THROWS_AS(parse_ensemble_spec("X1 2468-4 0-0 5\n", 0.01, 32), DataError);
  CHECK_THROWS_AS(parse_ensemble_spec("S1 2468-5 0-0 5\n", 0.01, 32), DataError);   // 4 outputs required
  CHECK_THROWS_AS(parse_ensemble_spec("T1 852-18 0-0 5\n", 0.01, 32), DataError);   // 19 outputs required
  CHECK_THROWS_AS(parse_ensemble_spec("S1 2468-4 0-0-0-0 5\n", 0.01, 32), UsageError);
}

TEST_CASE("aggregate sums member scores without renormalizing") {
  SUBCASE("ten uniform members tie and the tie breaks to class 0") {
    std::vector<Eigen::VectorXd> members(10, Eigen::VectorXd::Constant(4, 0.25));
    ClassProbabilities probs = aggregate(members, span_realis_class_names());
    for (int i = 0; i < 4; ++i) CHECK(probs.scores[i] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(probs.argmax() == 0);
  }
  SUBCASE("component sums from the worked three-member example") {
    Eigen::VectorXd a(4), b(4), c(4);
    a << 0.7, 0.1, 0.1, 0.1;
    b << 0.1, 0.7, 0.1, 0.1;
    c << 0.6, 0.2, 0.1, 0.1;
    ClassProbabilities probs = aggregate({a, b, c}, span_realis_class_names());
    CHECK(probs.scores[0] == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(probs.scores[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.scores[2] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(probs.scores[3] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(probs.argmax() == 0);
  }
  SUBCASE("a single member's argmax carries through") {
    Eigen::VectorXd a(4);
    a << 0.1, 0.2, 0.6, 0.1;
    CHECK(aggregate({a}, span_realis_class_names()).argmax() == 2);
  }
  SUBCASE("length mismatch is rejected") {
    CHECK_THROWS_AS(aggregate({Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(3)},
                              span_realis_class_names()),
                    UsageError);
  }
}

TEST_CASE("aggregated totals equal the member count and argmax survives rescaling") {
  Rng rng(13);
  for (int iter = 0; iter < 100; ++iter) {
    int members = 1 + static_cast<int>(uniform_index(rng, 12));
    std::vector<Eigen::VectorXd> outputs;
    for (int m = 0; m < members; ++m) {
      Eigen::VectorXd raw(4);
      for (int i = 0; i < 4; ++i) raw[i] = uniform(rng, 0.01, 1.0);
      outputs.push_back(raw / raw.sum());
    }
    ClassProbabilities probs = aggregate(outputs, span_realis_class_names());
    CHECK(std::abs(probs.scores.sum() - static_cast<double>(members)) <= 1e-9);

    double scale = uniform(rng, 0.1, 10.0);
    std::vector<Eigen::VectorXd> scaled = outputs;
    for (auto& v : scaled) v *= scale;
    CHECK(aggregate(scaled, span_realis_class_names()).argmax() == probs.argmax());
  }
}

TEST_CASE("classify_token follows the stub ensemble") {
  ResourceBundle bundle = evntest::test_bundle(fixture_embeddings_stub());
  Sentence s = tiny_sentence(3);

  SUBCASE("a stub that always favors Actual yields Actual") {
    Eigen::VectorXd logits(4);
    logits << 0.0, 50.0, 0.0, 0.0;
    Ensemble e = stub_ensemble(Task::span_realis, kSpanRealisDim, {logits});
    CHECK(classify_token(s.tokens[0], s, e, bundle) == SpanRealisClass::actual);
  }
  SUBCASE("5 NonEvent-leaning and 5 Actual-leaning members tie to NonEvent") {
    std::vector<Eigen::VectorXd> logits;
    for (int i = 0; i < 5; ++i) logits.push_back(log_probs({0.4, 0.3, 0.2, 0.1}));
    for (int i = 0; i < 5; ++i) logits.push_back(log_probs({0.3, 0.4, 0.2, 0.1}));
    Ensemble e = stub_ensemble(Task::span_realis, kSpanRealisDim, logits);
    Eigen::VectorXd x = span_realis_features(s.tokens[1], s, bundle);
    ClassProbabilities probs = ensemble_scores(e, x, span_realis_class_names());
    CHECK(probs.scores[0] == doctest::Approx(3.5).epsilon(1e-9));
    CHECK(probs.scores[1] == doctest::Approx(3.5).epsilon(1e-9));
    CHECK(probs.scores[2] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(probs.scores[3] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(classify_token(s.tokens[1], s, e, bundle) == SpanRealisClass::non_event);
  }
  SUBCASE("an empty ensemble is rejected") {
    Ensemble e;
    CHECK_THROWS_AS(classify_token(s.tokens[0], s, e, bundle), UsageError);
  }
}

TEST_CASE("classify_type maps the argmax to the subtype inventory") {
  ResourceBundle bundle = evntest::test_bundle(fixture_embeddings_stub());
  Sentence s = tiny_sentence(2);
  for (int k : {0, 5, 18}) {
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(19);
    logits[k] = 40.0;
    Ensemble e = stub_ensemble(Task::type, kTypeDim, {logits});
    CHECK(classify_type(s.tokens[0], s, e, bundle) == k);
  }
}

TEST_CASE("detect_document emits single-token nuggets in order") {
  ResourceBundle bundle = evntest::test_bundle(fixture_embeddings_stub());
  Document doc;
  doc.doc_id = "d1";
  doc.sentences = {tiny_sentence(4)};
  doc.text_length = 100;

  SUBCASE("all-NonEvent stub detects nothing") {
    Eigen::VectorXd logits(4);
    logits << 50.0, 0.0, 0.0, 0.0;
    Ensemble span = stub_ensemble(Task::span_realis, kSpanRealisDim, {logits});
    Eigen::VectorXd tl = Eigen::VectorXd::Zero(19);
    Ensemble type = stub_ensemble(Task::type, kTypeDim, {tl});
    CHECK(detect_document(doc, span, type, bundle).empty());
  }
  SUBCASE("a token forced Actual with a typed subtype becomes one nugget") {
    // Third token looks Actual; everything hinges on its POS-free stub.
    Eigen::VectorXd contact = Eigen::VectorXd::Zero(19);
    int contact_idx = 0;
    for (int i = 0; i < 18; ++i)
      if (bundle.subtype_vocab[i] == "Contact.Meet") contact_idx = i;
    contact[contact_idx] = 40.0;
    Ensemble type = stub_ensemble(Task::type, kTypeDim, {contact});

    // Span stub keyed on the token position: weights read the context POS
    // center block is the same for all tokens here, so instead build a
    // per-token decision from the feature that distinguishes token 3: its
    // affix block is identical too, so simply run a one-token document.
    Document one;
    one.doc_id = "d1";
    one.sentences = {tiny_sentence(3)};
    Eigen::VectorXd logits(4);
    logits << 0.0, 30.0, 0.0, 0.0;
    Ensemble span = stub_ensemble(Task::span_realis, kSpanRealisDim, {logits});
    auto nuggets = detect_document(one, span, type, bundle);
    REQUIRE(nuggets.size() == 3);  // stub marks every token
    CHECK(nuggets[2].span == std::vector<SpanTok>{{1, 3}});
    CHECK(nuggets[2].realis == "Actual");
    CHECK(nuggets[2].subtype == "Contact.Meet");
    CHECK(nuggets[2].mention_id == "E3");
    CHECK(nuggets[2].text == "w3");
  }
  SUBCASE("OTHER-subtype predictions are suppressed unless kept by flag") {
    Eigen::VectorXd logits(4);
    logits << 0.0, 30.0, 0.0, 0.0;
    Ensemble span = stub_ensemble(Task::span_realis, kSpanRealisDim, {logits});
    Eigen::VectorXd other = Eigen::VectorXd::Zero(19);
    other[kOtherTypeClass] = 40.0;
    Ensemble type = stub_ensemble(Task::type, kTypeDim, {other});
    CHECK(detect_document(doc, span, type, bundle).empty());
    DetectOptions keep;
    keep.keep_other_subtype = true;
    auto kept = detect_document(doc, span, type, bundle, keep);
    REQUIRE(kept.size() == 4);
    CHECK(kept[0].subtype == kOtherTypeLabel);
  }
  SUBCASE("the emission margin suppresses narrow wins") {
    Eigen::VectorXd narrow = log_probs({0.45, 0.55, 1e-9, 1e-9});
    Ensemble span = stub_ensemble(Task::span_realis, kSpanRealisDim, {narrow});
    Eigen::VectorXd tl = Eigen::VectorXd::Zero(19);
    tl[0] = 40.0;
    Ensemble type = stub_ensemble(Task::type, kTypeDim, {tl});
    CHECK(!detect_document(doc, span, type, bundle).empty());
    DetectOptions strict;
    strict.emit_margin = 0.2;
    CHECK(detect_document(doc, span, type, bundle, strict).empty());
  }
}

TEST_CASE("detected nuggets are ordered, unique, and never NonEvent or OTHER") {
  ResourceBundle bundle = evntest::test_bundle(fixture_embeddings_stub());
  Rng rng(71);
  for (int iter = 0; iter < 5; ++iter) {
    Document doc = evntest::random_document(rng, "d");
    Eigen::VectorXd logits(4);
    logits << uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1);
    Ensemble span = stub_ensemble(Task::span_realis, kSpanRealisDim, {logits});
    Eigen::VectorXd tl = Eigen::VectorXd::Zero(19);
    tl[static_cast<int>(uniform_index(rng, 19))] = 20.0;
    Ensemble type = stub_ensemble(Task::type, kTypeDim, {tl});
    auto nuggets = detect_document(doc, span, type, bundle);

    std::set<std::string> ids;
    SpanTok prev{0, 0};
    for (const auto& n : nuggets) {
      CHECK(ids.insert(n.mention_id).second);
      CHECK(n.realis != "NonEvent");
      CHECK(n.subtype != kOtherTypeLabel);
      REQUIRE(n.span.size() == 1);
      CHECK(prev < n.span.front());
      prev = n.span.front();
    }
  }
}

TEST_CASE("train_ensembles overfits the planted fixture corpus") {
  evntest::FixtureCorpus fc = evntest::make_fixture_corpus(6, 2024);
  ResourceBundle bundle = evntest::test_bundle(fc.embeddings_text);

  auto [span_spec, type_spec] =
      parse_ensemble_spec("S1 2468-24-4 0-.2-0 20\nS2 2468-24-4 0-0-0 15\nT1 852-24-19 0-0-0 20\n",
                          0.1, 32);
  Ensembles trained = train_ensembles(fc.docs, fc.gold, span_spec, type_spec, bundle, 7, 2);
  REQUIRE(trained.span_realis.members.size() == 2);
  REQUIRE(trained.type.members.size() == 1);

  // Word-level training accuracy on the span+realis task.
  TokenDataset data = build_token_dataset(fc.docs, fc.gold, bundle);
  int hits = 0;
  for (const Sample& s : data.span_realis) {
    ClassProbabilities probs = ensemble_scores(trained.span_realis, s.x, span_realis_class_names());
    hits += probs.argmax() == s.label;
  }
  double acc = static_cast<double>(hits) / static_cast<double>(data.span_realis.size());
  CHECK(acc >= 0.95);

  // Planted nuggets come back exactly (ids aside) through detection.
  for (const Document& doc : fc.docs) {
    auto detected = detect_document(doc, trained.span_realis, trained.type, bundle);
    auto expected = fc.gold.nuggets_of(doc.doc_id);
    REQUIRE(detected.size() == expected.size());
    for (std::size_t i = 0; i < detected.size(); ++i) {
      CHECK(detected[i].span == expected[i]->span);
      CHECK(detected[i].realis == expected[i]->realis);
      CHECK(detected[i].subtype == expected[i]->subtype);
    }
  }
}

TEST_CASE("train_ensembles trains distinct members from member-distinct seeds") {
  evntest::FixtureCorpus fc = evntest::make_fixture_corpus(2, 5);
  ResourceBundle bundle = evntest::test_bundle(fc.embeddings_text);
  std::string spec_text;
  for (int i = 1; i <= 10; ++i) spec_text += "S" + std::to_string(i) + " 2468-8-4 0-0-0 1\n";
  spec_text += "T1 852-8-19 0-0-0 1\n";
  auto [span_spec, type_spec] = parse_ensemble_spec(spec_text, 0.01, 32);
  Ensembles trained = train_ensembles(fc.docs, fc.gold, span_spec, type_spec, bundle, 1, 4);
  REQUIRE(trained.span_realis.members.size() == 10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j)
      CHECK(trained.span_realis.members[i].weights[0] != trained.span_realis.members[j].weights[0]);
}

TEST_CASE("a corpus without nuggets cannot train the type ensemble") {
  evntest::FixtureCorpus fc = evntest::make_fixture_corpus(2, 6);
  ResourceBundle bundle = evntest::test_bundle(fc.embeddings_text);
  AnnotationSet empty_gold;
  for (const auto& doc : fc.docs) {
    empty_gold.doc_order.push_back(doc.doc_id);
    empty_gold.clusterings[doc.doc_id] = Clustering{};
  }
  auto [span_spec, type_spec] =
      parse_ensemble_spec("S1 2468-8-4 0-0-0 1\nT1 852-8-19 0-0-0 1\n", 0.01, 32);
  CHECK_THROWS_AS(train_ensembles(fc.docs, empty_gold, span_spec, type_spec, bundle, 1, 1),
                  UsageError);

  // The span+realis data degenerates to all-NonEvent labels.
  TokenDataset data = build_token_dataset(fc.docs, empty_gold, bundle);
  for (const Sample& s : data.span_realis) CHECK(s.label == 0);
  CHECK(data.type.empty());
}

TEST_CASE("multi-token gold nuggets label every covered token") {
  evntest::FixtureCorpus fc = evntest::make_fixture_corpus(1, 8);
  ResourceBundle bundle = evntest::test_bundle(fc.embeddings_text);
  AnnotationSet gold;
  gold.doc_order = {fc.docs[0].doc_id};
  EventNugget n;
  n.mention_id = "m1";
  n.doc_id = fc.docs[0].doc_id;
  n.span = {{1, 1}, {1, 2}};
  n.text = "two tokens";
  n.subtype = "Conflict.Attack";
  n.realis = "Generic";
  gold.nuggets = {n};
  Clustering clustering;
  clustering.clusters = {{"m1"}};
  gold.clusterings[fc.docs[0].doc_id] = clustering;

  TokenDataset data = build_token_dataset(fc.docs, gold, bundle);
  CHECK(data.span_realis[0].label == static_cast<int>(SpanRealisClass::generic));
  CHECK(data.span_realis[1].label == static_cast<int>(SpanRealisClass::generic));
  CHECK(data.type.size() == 2);
}
