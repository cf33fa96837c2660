#include "evn/features.hpp"

#include <unordered_set>

#include "evn/error.hpp"
#include "evn/util.hpp"

namespace evn {

namespace {

void index_vocab(const std::vector<std::string>& vocab, std::unordered_map<std::string, int>& out) {
  out.clear();
  for (std::size_t i = 0; i < vocab.size(); ++i) out.emplace(vocab[i], static_cast<int>(i));
}

void check_vocab(const std::vector<std::string>& vocab, int expected, const char* name) {
  if (static_cast<int>(vocab.size()) != expected)
    throw DataError(std::string(name) + " must have exactly " + std::to_string(expected) +
                    " entries, got " + std::to_string(vocab.size()));
  std::unordered_set<std::string> seen(vocab.begin(), vocab.end());
  if (seen.size() != vocab.size()) throw DataError(std::string(name) + " entries are not unique");
}

int lookup(const std::unordered_map<std::string, int>& index, const std::string& key) {
  auto it = index.find(key);
  return it == index.end() ? -1 : it->second;
}

void set_bit(Eigen::VectorXd& v, int offset, int idx) {
  if (idx >= 0) v[offset + idx] = 1.0;
}

}  // namespace

void ResourceBundle::build_indexes() {
  index_vocab(pos_vocab, pos_index);
  index_vocab(deprel_vocab, deprel_index);
  index_vocab(ner_vocab, ner_index);
  index_vocab(subtype_vocab, subtype_index);
}

void ResourceBundle::validate() const {
  check_vocab(pos_vocab, kPosDim, "POS vocabulary");
  check_vocab(deprel_vocab, kDeprelDim, "dependency relation vocabulary");
  check_vocab(affix_list, kAffixDim, "affix list");
  check_vocab(ner_vocab, kNerDim, "entity type vocabulary");
  check_vocab(subtype_vocab, kSubtypes, "subtype vocabulary");
  for (const auto& [word, vec] : embeddings)
    if (vec.size() != kEmbeddingDim)
      throw DataError("embedding for '" + word + "' has length " + std::to_string(vec.size()) +
                      ", expected " + std::to_string(kEmbeddingDim));
}

std::vector<std::string> parse_vocab_text(const std::string& text) {
  std::vector<std::string> out;
  for (std::string_view line : split(text, '\n')) {
    auto entry = trim(line);
    if (entry.empty()) continue;
    out.emplace_back(entry);
  }
  return out;
}

std::unordered_map<std::string, Eigen::VectorXd> parse_embeddings_text(const std::string& text) {
  std::unordered_map<std::string, Eigen::VectorXd> out;
  auto lines = split(text, '\n');
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split(line, ' ');
    if (static_cast<int>(fields.size()) != ResourceBundle::kEmbeddingDim + 1)
      throw DataError("embeddings line " + std::to_string(li + 1) + ": expected token plus " +
                      std::to_string(ResourceBundle::kEmbeddingDim) + " values");
    Eigen::VectorXd vec(ResourceBundle::kEmbeddingDim);
    for (int i = 0; i < ResourceBundle::kEmbeddingDim; ++i) {
      double v;
      if (!parse_f64(fields[i + 1], v))
        throw DataError("embeddings line " + std::to_string(li + 1) + ": bad number '" +
                        std::string(fields[i + 1]) + "'");
      vec[i] = v;
    }
    std::string word(fields[0]);
    if (!out.emplace(std::move(word), std::move(vec)).second)
      throw DataError("embeddings line " + std::to_string(li + 1) + ": duplicate token");
  }
  return out;
}

ResourceBundle load_resources(const ResourcePaths& paths) {
  ResourceBundle b;
  b.embeddings = parse_embeddings_text(read_file(paths.embeddings));
  b.pos_vocab = parse_vocab_text(read_file(paths.pos_vocab));
  b.deprel_vocab = parse_vocab_text(read_file(paths.deprel_vocab));
  b.affix_list = parse_vocab_text(read_file(paths.affix_list));
  b.ner_vocab = parse_vocab_text(read_file(paths.ner_vocab));
  b.subtype_vocab = parse_vocab_text(read_file(paths.subtype_vocab));
  b.validate();
  b.build_indexes();
  return b;
}

const std::vector<std::pair<std::string, int>>& span_realis_blocks() {
  static const std::vector<std::pair<std::string, int>> blocks = {
      {"lemma_embedding", 300}, {"pos", 47},           {"context_pos", 235},
      {"context_deprel", 1040}, {"token_minus_lemma", 300}, {"modifier_deprel", 208},
      {"modifier_pos", 47},     {"governor_deprel", 208},   {"governor_pos", 47},
      {"affix", 36}};
  return blocks;
}

const std::vector<std::pair<std::string, int>>& type_blocks() {
  static const std::vector<std::pair<std::string, int>> blocks = {
      {"lemma_embedding", 300}, {"token_embedding", 300}, {"modifier_deprel", 208},
      {"affix", 36},            {"modifier_ner", 8}};
  return blocks;
}

Eigen::VectorXd one_hot(const std::string& label, const std::vector<std::string>& vocab) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == label) {
      v[static_cast<Eigen::Index>(i)] = 1.0;
      break;
    }
  }
  return v;
}

Eigen::VectorXd lookup_embedding(const std::string& word, const ResourceBundle& bundle) {
  auto it = bundle.embeddings.find(word);
  if (it == bundle.embeddings.end()) it = bundle.embeddings.find(lower_ascii(word));
  if (it == bundle.embeddings.end()) return Eigen::VectorXd::Zero(ResourceBundle::kEmbeddingDim);
  return it->second;
}

std::vector<std::pair<const Token*, std::string>> modifiers(const Token& t, const Sentence& s) {
  std::vector<std::pair<const Token*, std::string>> out;
  for (const Token& u : s.tokens)
    if (u.head == t.index) out.emplace_back(&u, u.deprel);
  return out;
}

std::optional<std::pair<const Token*, std::string>> governor(const Token& t, const Sentence& s) {
  if (t.head == 0) return std::nullopt;
  return std::make_pair(&s.tokens[t.head - 1], t.deprel);
}

Eigen::VectorXd affix_features(const std::string& word, const ResourceBundle& bundle) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ResourceBundle::kAffixDim);
  const std::string w = lower_ascii(word);
  const int half = ResourceBundle::kAffixDim / 2;
  for (int i = 0; i < ResourceBundle::kAffixDim; ++i) {
    const std::string a = lower_ascii(bundle.affix_list[i]);
    if (a.empty() || a.size() > w.size()) continue;
    bool hit = i < half ? w.compare(0, a.size(), a) == 0
                        : w.compare(w.size() - a.size(), a.size(), a) == 0;
    if (hit) v[i] = 1.0;
  }
  return v;
}

Eigen::VectorXd span_realis_features(const Token& t, const Sentence& s, const ResourceBundle& b) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kSpanRealisDim);
  const int n = static_cast<int>(s.tokens.size());
  int off = 0;

  v.segment(off, 300) = lookup_embedding(t.lemma, b);
  off += 300;

  set_bit(v, off, lookup(b.pos_index, t.pos));
  off += 47;

  // Surface context covers the five positions t-2..t+2 including the
  // center; positions outside the sentence stay zero.
  for (int d = -2; d <= 2; ++d) {
    int j = (t.index - 1) + d;
    if (j >= 0 && j < n) set_bit(v, off, lookup(b.pos_index, s.tokens[j].pos));
    off += 47;
  }
  // Per position, the directed relation of that token to its own head.
  for (int d = -2; d <= 2; ++d) {
    int j = (t.index - 1) + d;
    if (j >= 0 && j < n && s.tokens[j].head != 0)
      set_bit(v, off, lookup(b.deprel_index, "in:" + s.tokens[j].deprel));
    off += 208;
  }

  v.segment(off, 300) = lookup_embedding(t.text, b) - lookup_embedding(t.lemma, b);
  off += 300;

  auto mods = modifiers(t, s);
  for (const auto& [mod, rel] : mods) set_bit(v, off, lookup(b.deprel_index, "out:" + rel));
  off += 208;
  for (const auto& [mod, rel] : mods) set_bit(v, off, lookup(b.pos_index, mod->pos));
  off += 47;

  if (auto gov = governor(t, s)) {
    set_bit(v, off, lookup(b.deprel_index, "in:" + gov->second));
    set_bit(v, off + 208, lookup(b.pos_index, gov->first->pos));
  }
  off += 208 + 47;

  v.segment(off, 36) = affix_features(t.text, b);
  off += 36;
  return v;
}

Eigen::VectorXd type_features(const Token& t, const Sentence& s, const ResourceBundle& b) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kTypeDim);
  int off = 0;

  v.segment(off, 300) = lookup_embedding(t.lemma, b);
  off += 300;
  v.segment(off, 300) = lookup_embedding(t.text, b);
  off += 300;

  auto mods = modifiers(t, s);
  for (const auto& [mod, rel] : mods) set_bit(v, off, lookup(b.deprel_index, "out:" + rel));
  off += 208;

  v.segment(off, 36) = affix_features(t.text, b);
  off += 36;

  for (const auto& [mod, rel] : mods)
    if (mod->ner != "O") set_bit(v, off, lookup(b.ner_index, mod->ner));
  off += 8;
  return v;
}

}  // namespace evn
