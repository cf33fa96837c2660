#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evn/corpus.hpp"

namespace evn {

// Vocabulary and embedding resources behind all feature extraction.
// The vocabulary cardinalities are fixed; contents ship as editable
// config files. Directed dependency labels use an "in:"/"out:" prefix;
// the first half of affix_list holds prefixes, the second half suffixes.
struct ResourceBundle {
  static constexpr int kEmbeddingDim = 300;
  static constexpr int kPosDim = 47;
  static constexpr int kDeprelDim = 208;
  static constexpr int kAffixDim = 36;
  static constexpr int kNerDim = 8;
  static constexpr int kSubtypes = 18;

  std::unordered_map<std::string, Eigen::VectorXd> embeddings;
  std::vector<std::string> pos_vocab;
  std::vector<std::string> deprel_vocab;
  std::vector<std::string> affix_list;
  std::vector<std::string> ner_vocab;
  std::vector<std::string> subtype_vocab;

  std::unordered_map<std::string, int> pos_index;
  std::unordered_map<std::string, int> deprel_index;
  std::unordered_map<std::string, int> ner_index;
  std::unordered_map<std::string, int> subtype_index;

  void build_indexes();
  void validate() const;  // throws DataError on size/uniqueness violations
};

struct ResourcePaths {
  std::string embeddings;
  std::string pos_vocab;
  std::string deprel_vocab;
  std::string affix_list;
  std::string ner_vocab;
  std::string subtype_vocab;
};

std::vector<std::string> parse_vocab_text(const std::string& text);
std::unordered_map<std::string, Eigen::VectorXd> parse_embeddings_text(const std::string& text);
ResourceBundle load_resources(const ResourcePaths& paths);

// Fixed-length feature vector widths.
constexpr int kSpanRealisDim = 2468;
constexpr int kTypeDim = 852;

// Ordered (block name, width) layout of each feature kind.
const std::vector<std::pair<std::string, int>>& span_realis_blocks();
const std::vector<std::pair<std::string, int>>& type_blocks();

// 1.0 at the label's index when present, all zeros otherwise.
Eigen::VectorXd one_hot(const std::string& label, const std::vector<std::string>& vocab);

// Stored vector for the word (exact match first, then ASCII-lowercased),
// zero vector when out of vocabulary.
Eigen::VectorXd lookup_embedding(const std::string& word, const ResourceBundle& bundle);

// Tokens whose head is `t`, with their relation labels, in token order.
std::vector<std::pair<const Token*, std::string>> modifiers(const Token& t, const Sentence& s);
std::optional<std::pair<const Token*, std::string>> governor(const Token& t, const Sentence& s);

// Component i is 1.0 iff the word starts with (prefix half) or ends with
// (suffix half) affix_list[i], matched case-insensitively.
Eigen::VectorXd affix_features(const std::string& word, const ResourceBundle& bundle);

Eigen::VectorXd span_realis_features(const Token& t, const Sentence& s, const ResourceBundle& bundle);
Eigen::VectorXd type_features(const Token& t, const Sentence& s, const ResourceBundle& bundle);

}  // namespace evn
