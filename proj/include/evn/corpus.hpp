#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace evn {

// One pre-parsed token. Character offsets are 0-based and end-exclusive,
// counted in Unicode scalar values of the source document.
struct Token {
  int index = 0;  // 1-based position in its sentence
  std::string text;
  std::string lemma;
  std::string pos;
  std::string ner;  // "O" when untyped
  std::int64_t char_begin = 0;
  std::int64_t char_end = 0;
  int head = 0;  // 1-based governor index, 0 for the sentence root
  std::string deprel;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  bool operator==(const Sentence&) const = default;
};

enum class Genre { newswire, discussion_forum };

std::string to_string(Genre g);
Genre parse_genre(std::string_view s);  // throws DataError on unknown labels

struct Document {
  std::string doc_id;
  Genre genre = Genre::newswire;
  std::vector<Sentence> sentences;
  std::int64_t text_length = 0;  // largest char_end seen in the document

  bool operator==(const Document&) const = default;
};

// (sentence, token) address of one nugget token, both 1-based.
struct SpanTok {
  int sentence = 0;
  int token = 0;
  auto operator<=>(const SpanTok&) const = default;
};

struct EventNugget {
  std::string mention_id;
  std::string doc_id;
  std::vector<SpanTok> span;  // non-empty, document order
  std::string text;
  std::string subtype;
  std::string realis;  // Actual | Generic | Other

  bool operator==(const EventNugget&) const = default;
};

inline const char* kRealisLabels[3] = {"Actual", "Generic", "Other"};
bool valid_realis(std::string_view s);

// A partition of the mention ids it was declared over, singletons included.
struct Clustering {
  std::vector<std::set<std::string>> clusters;

  std::set<std::string> universe() const;
  // Throws DataError if clusters are empty, overlap, or miss part of `ids`.
  void validate(const std::set<std::string>& ids) const;
};

bool same_partition(const Clustering& a, const Clustering& b);

// Content of one annotation file: nuggets in file order plus the
// per-document clustering (implicit singletons made explicit).
struct AnnotationSet {
  std::vector<EventNugget> nuggets;
  std::map<std::string, Clustering> clusterings;
  std::vector<std::string> doc_order;

  std::vector<const EventNugget*> nuggets_of(const std::string& doc_id) const;
};

std::vector<Document> parse_document_file(const std::string& text);
std::string write_document_file(const std::vector<Document>& docs);

AnnotationSet parse_annotation_file(const std::string& text);
std::string write_annotation_file(const AnnotationSet& ann, const std::string& system_id);

// Cross-checks spans and doc ids against a parsed corpus.
void validate_against(const AnnotationSet& ann, const std::vector<Document>& corpus);

const Token& nugget_trigger_token(const EventNugget& n, const Document& doc);
const Sentence& nugget_sentence(const EventNugget& n, const Document& doc);

std::string span_to_string(const std::vector<SpanTok>& span);

}  // namespace evn
