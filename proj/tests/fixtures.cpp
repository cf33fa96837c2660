#include "fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include "evn/util.hpp"

namespace evntest {

using namespace evn;

std::string source_dir() { return EVN_SOURCE_DIR; }

std::string config_path(const std::string& name) {
  return source_dir() + "/configs/" + name;
}

ResourceBundle test_bundle(const std::string& embeddings_text) {
  ResourceBundle b;
  b.embeddings = parse_embeddings_text(embeddings_text);
  b.pos_vocab = parse_vocab_text(read_file(config_path("pos_vocab.txt")));
  b.deprel_vocab = parse_vocab_text(read_file(config_path("deprel_vocab.txt")));
  b.affix_list = parse_vocab_text(read_file(config_path("affixes.txt")));
  b.ner_vocab = parse_vocab_text(read_file(config_path("ner_vocab.txt")));
  b.subtype_vocab = parse_vocab_text(read_file(config_path("subtypes.txt")));
  b.validate();
  b.build_indexes();
  return b;
}

namespace {

const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "the",  "a",     "man",   "dog",  "house", "city",  "tree",  "blue", "old",
      "quick", "paper", "river", "stone", "bird", "road",  "wind",  "light", "green",
      "small", "walk",  "talk",  "idea", "water", "cloud", "glass", "floor"};
  return pool;
}

const std::vector<std::string>& pos_pool() {
  static const std::vector<std::string> pool = {"NN", "NNS", "VB", "VBD", "JJ", "DT", "IN", "RB"};
  return pool;
}

const std::vector<std::string>& deprel_pool() {
  static const std::vector<std::string> pool = {"nsubj", "dobj",  "det",  "amod", "advmod",
                                                "nmod:in", "mark", "case", "compound"};
  return pool;
}

const std::vector<std::string>& ner_pool() {
  static const std::vector<std::string> pool = {"O", "O", "O", "Person", "Location", "Organization"};
  return pool;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  return pool[uniform_index(rng, pool.size())];
}

// Random dependency tree over n tokens: a root plus random attachments.
std::vector<int> random_heads(Rng& rng, int n) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  evn::shuffle(order, rng);
  std::vector<int> heads(n, 0);
  std::vector<int> attached = {order[0]};
  for (int k = 1; k < n; ++k) {
    int node = order[k];
    int parent = attached[uniform_index(rng, attached.size())];
    heads[node] = parent + 1;
    attached.push_back(node);
  }
  return heads;
}

Sentence make_sentence(Rng& rng, int n, std::int64_t& offset) {
  Sentence sent;
  std::vector<int> heads = random_heads(rng, n);
  for (int i = 0; i < n; ++i) {
    Token t;
    t.index = i + 1;
    t.text = pick(rng, word_pool());
    if (uniform01(rng) < 0.2) t.text[0] = static_cast<char>(t.text[0] - 'a' + 'A');
    t.lemma = lower_ascii(t.text);
    t.pos = pick(rng, pos_pool());
    t.ner = pick(rng, ner_pool());
    t.head = heads[i];
    t.deprel = heads[i] == 0 ? "root" : pick(rng, deprel_pool());
    t.char_begin = offset;
    t.char_end = offset + static_cast<std::int64_t>(t.text.size());
    offset = t.char_end + 1 + static_cast<std::int64_t>(uniform_index(rng, 3));
    sent.tokens.push_back(std::move(t));
  }
  return sent;
}

}  // namespace

Document random_document(Rng& rng, const std::string& doc_id) {
  Document doc;
  doc.doc_id = doc_id;
  doc.genre = uniform01(rng) < 0.5 ? Genre::newswire : Genre::discussion_forum;
  int n_sentences = static_cast<int>(uniform_index(rng, 4));  // zero-sentence docs allowed
  std::int64_t offset = 0;
  for (int s = 0; s < n_sentences; ++s) {
    int n = 1 + static_cast<int>(uniform_index(rng, 8));
    doc.sentences.push_back(make_sentence(rng, n, offset));
  }
  doc.text_length = offset == 0 ? 0 : doc.sentences.back().tokens.back().char_end;
  return doc;
}

AnnotationSet random_annotations(Rng& rng, const std::vector<Document>& docs) {
  static const std::vector<std::string> subtype_pool = {
      "Conflict.Attack", "Contact.Meet", "Life.Die", "Justice.Pardon", "Personnel.Elect"};
  static const std::vector<std::string> realis_pool = {"Actual", "Generic", "Other"};
  AnnotationSet ann;
  for (const Document& doc : docs) {
    ann.doc_order.push_back(doc.doc_id);
    std::vector<EventNugget> nuggets;
    int next = 1;
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const Sentence& sent = doc.sentences[si];
      for (const Token& t : sent.tokens) {
        if (uniform01(rng) > 0.25) continue;
        EventNugget n;
        n.mention_id = "m" + std::to_string(next++);
        n.doc_id = doc.doc_id;
        n.span = {{static_cast<int>(si) + 1, t.index}};
        // Occasionally a two-token span; the format allows them.
        if (t.index < static_cast<int>(sent.tokens.size()) && uniform01(rng) < 0.15)
          n.span.push_back({static_cast<int>(si) + 1, t.index + 1});
        n.text = t.text;
        n.subtype = pick(rng, subtype_pool);
        n.realis = pick(rng, realis_pool);
        nuggets.push_back(std::move(n));
      }
    }
    Clustering clustering;
    if (!nuggets.empty()) {
      int n_groups = 1 + static_cast<int>(uniform_index(rng, nuggets.size()));
      std::map<int, std::set<std::string>> groups;
      for (const auto& n : nuggets) groups[static_cast<int>(uniform_index(rng, n_groups))].insert(n.mention_id);
      for (auto& [g, ids] : groups) clustering.clusters.push_back(std::move(ids));
    }
    ann.clusterings[doc.doc_id] = std::move(clustering);
    for (auto& n : nuggets) ann.nuggets.push_back(std::move(n));
  }
  return ann;
}

namespace {

struct TriggerSpec {
  const char* lemma;
  const char* subtype;
  const char* realis;
  const char* pos;
};

const std::vector<TriggerSpec>& trigger_specs() {
  static const std::vector<TriggerSpec> specs = {
      {"attack", "Conflict.Attack", "Actual", "VBD"},
      {"meet", "Contact.Meet", "Generic", "VBD"},
      {"elect", "Personnel.Elect", "Other", "VBD"},
      {"die", "Life.Die", "Actual", "VB"},
      {"broadcast", "Contact.Broadcast", "Generic", "NN"},
      {"protest", "Conflict.Demonstrate", "Other", "NN"}};
  return specs;
}

std::string format_embedding(const std::string& word, const Eigen::VectorXd& v) {
  std::string line = word;
  for (int i = 0; i < v.size(); ++i) line += " " + evn::format_f64(v[i]);
  return line + "\n";
}

}  // namespace

FixtureCorpus make_fixture_corpus(int n_docs, std::uint64_t seed) {
  Rng rng(seed);
  FixtureCorpus fc;

  // Distinctive non-negative embeddings for triggers, faint noise for
  // filler words (the input layer is relu, so positive components carry).
  std::map<std::string, Eigen::VectorXd> vectors;
  const auto& specs = trigger_specs();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(300);
    for (int j = 0; j < 10; ++j) v[static_cast<int>(k) * 12 + j] = 2.0;
    vectors[specs[k].lemma] = v;
  }
  for (const std::string& w : word_pool()) {
    Eigen::VectorXd v(300);
    for (int i = 0; i < 300; ++i) v[i] = uniform(rng, 0.0, 0.05);
    vectors[w] = v;
  }
  for (const auto& [word, v] : vectors) fc.embeddings_text += format_embedding(word, v);

  int mention_counter = 0;
  for (int d = 0; d < n_docs; ++d) {
    Document doc;
    doc.doc_id = "doc" + std::to_string(d + 1);
    doc.genre = d % 2 == 0 ? Genre::newswire : Genre::discussion_forum;
    std::int64_t offset = 0;
    int next_mention = 1;
    std::vector<EventNugget> nuggets;
    std::map<std::string, std::set<std::string>> chains;  // lemma -> mention ids

    int n_sentences = 3 + static_cast<int>(uniform_index(rng, 3));
    for (int s = 0; s < n_sentences; ++s) {
      int n = 5 + static_cast<int>(uniform_index(rng, 4));
      Sentence sent;
      std::vector<int> heads = random_heads(rng, n);
      int trigger_pos = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - 1)));
      const TriggerSpec& spec = specs[uniform_index(rng, specs.size())];
      for (int i = 0; i < n; ++i) {
        Token t;
        t.index = i + 1;
        if (i == trigger_pos) {
          t.text = spec.lemma;
          t.lemma = spec.lemma;
          t.pos = spec.pos;
          t.ner = "O";
        } else {
          t.text = pick(rng, word_pool());
          t.lemma = t.text;
          t.pos = pick(rng, pos_pool());
          t.ner = pick(rng, ner_pool());
        }
        t.head = heads[i];
        t.deprel = heads[i] == 0 ? "root" : pick(rng, deprel_pool());
        t.char_begin = offset;
        t.char_end = offset + static_cast<std::int64_t>(t.text.size());
        offset = t.char_end + 1;
        sent.tokens.push_back(std::move(t));
      }
      doc.sentences.push_back(std::move(sent));

      EventNugget nug;
      nug.mention_id = "m" + std::to_string(next_mention++);
      nug.doc_id = doc.doc_id;
      nug.span = {{s + 1, trigger_pos + 1}};
      nug.text = spec.lemma;
      nug.subtype = spec.subtype;
      nug.realis = spec.realis;
      chains[spec.lemma].insert(nug.mention_id);
      nuggets.push_back(std::move(nug));
      ++mention_counter;
    }
    doc.text_length = offset == 0 ? 0 : offset - 1;

    Clustering clustering;
    for (auto& [lemma, ids] : chains) clustering.clusters.push_back(ids);
    fc.gold.clusterings[doc.doc_id] = std::move(clustering);
    fc.gold.doc_order.push_back(doc.doc_id);
    for (auto& n : nuggets) fc.gold.nuggets.push_back(std::move(n));
    fc.docs.push_back(std::move(doc));
  }
  (void)mention_counter;
  return fc;
}

FixtureFiles write_fixture(const FixtureCorpus& fc, const std::string& dir) {
  std::filesystem::create_directories(dir);
  FixtureFiles files;
  files.corpus = dir + "/corpus.txt";
  files.gold = dir + "/gold.ann";
  files.embeddings = dir + "/embeddings.txt";
  files.ensemble_spec = dir + "/ensemble.spec";
  write_file(files.corpus, write_document_file(fc.docs));
  write_file(files.gold, write_annotation_file(fc.gold, "gold"));
  write_file(files.embeddings, fc.embeddings_text);
  std::string spec;
  for (int i = 1; i <= 10; ++i)
    spec += "S" + std::to_string(i) + " 2468-24-4 0-" + (i % 2 ? ".2" : "0") + "-0 " +
            std::to_string(12 + i % 3) + "\n";
  for (int i = 1; i <= 3; ++i)
    spec += "T" + std::to_string(i) + " 852-24-19 0-0-0 " + std::to_string(14 + i) + "\n";
  write_file(files.ensemble_spec, spec);
  return files;
}

std::string fresh_dir(const std::string& name) {
  std::filesystem::path dir = std::filesystem::current_path() / "evn_test_tmp" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace evntest
