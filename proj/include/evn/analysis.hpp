#pragma once

#include <string>
#include <vector>

#include "evn/corpus.hpp"

namespace evn {

struct FrequencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<std::vector<long long>> counts;  // rows x columns

  long long total() const;
};

// Class columns follow the gold realis of the covering nugget, with
// Non-Event for uncovered tokens. Rows are sorted by descending count mass
// in the three event columns, ties alphabetically.
FrequencyTable modifier_deprel_table(const std::vector<Document>& docs, const AnnotationSet& gold);
FrequencyTable modifier_pos_table(const std::vector<Document>& docs, const AnnotationSet& gold);

// POS of surface neighbors at offsets -2,-1,+1,+2 (center excluded).
FrequencyTable context_pos_table(const std::vector<Document>& docs, const AnnotationSet& gold);

// Entity types of NER-labeled modifiers of each gold nugget's trigger
// token, by subtype; columns fixed to the five reported entity classes.
FrequencyTable ner_by_subtype_table(const std::vector<Document>& docs, const AnnotationSet& gold);

std::string table_to_tsv(const FrequencyTable& table, const std::string& corner_label);

}  // namespace evn
