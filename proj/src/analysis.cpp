#include "evn/analysis.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>

#include "evn/features.hpp"
#include "evn/util.hpp"

namespace evn {

long long FrequencyTable::total() const {
  long long t = 0;
  for (const auto& row : counts)
    for (long long c : row) t += c;
  return t;
}

namespace {

const std::vector<std::string>& class_columns() {
  static const std::vector<std::string> cols = {"Actual", "Generic", "Other", "Non-Event"};
  return cols;
}

int class_of(const std::string& realis) {
  for (int i = 0; i < 3; ++i)
    if (realis == class_columns()[i]) return i;
  return 3;
}

// First covering nugget per (sentence, token), in annotation order.
std::map<SpanTok, const EventNugget*> covering_map(const Document& doc, const AnnotationSet& gold) {
  std::map<SpanTok, const EventNugget*> out;
  for (const auto& n : gold.nuggets) {
    if (n.doc_id != doc.doc_id) continue;
    for (const SpanTok& st : n.span) out.emplace(st, &n);
  }
  return out;
}

// Event-mass-descending row order shared by the class tables.
FrequencyTable finish_class_table(std::map<std::string, std::array<long long, 4>>& cells) {
  FrequencyTable table;
  table.column_labels = class_columns();
  std::vector<std::pair<std::string, std::array<long long, 4>>> rows(cells.begin(), cells.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    long long ma = a.second[0] + a.second[1] + a.second[2];
    long long mb = b.second[0] + b.second[1] + b.second[2];
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  for (auto& [label, row] : rows) {
    table.row_labels.push_back(label);
    table.counts.push_back({row[0], row[1], row[2], row[3]});
  }
  return table;
}

using CellFn = std::function<void(const Token&, const Sentence&, int cls,
                                  std::map<std::string, std::array<long long, 4>>&)>;

FrequencyTable class_table(const std::vector<Document>& docs, const AnnotationSet& gold,
                           const CellFn& count) {
  std::map<std::string, std::array<long long, 4>> cells;
  for (const Document& doc : docs) {
    auto covering = covering_map(doc, gold);
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const Sentence& sent = doc.sentences[si];
      for (const Token& t : sent.tokens) {
        auto it = covering.find(SpanTok{static_cast<int>(si) + 1, t.index});
        int cls = it == covering.end() ? 3 : class_of(it->second->realis);
        count(t, sent, cls, cells);
      }
    }
  }
  return finish_class_table(cells);
}

}  // namespace

FrequencyTable modifier_deprel_table(const std::vector<Document>& docs, const AnnotationSet& gold) {
  return class_table(docs, gold, [](const Token& t, const Sentence& sent, int cls, auto& cells) {
    for (const auto& [mod, rel] : modifiers(t, sent)) {
      (void)mod;
      auto& row = cells.try_emplace(rel, std::array<long long, 4>{}).first->second;
      ++row[cls];
    }
  });
}

FrequencyTable modifier_pos_table(const std::vector<Document>& docs, const AnnotationSet& gold) {
  return class_table(docs, gold, [](const Token& t, const Sentence& sent, int cls, auto& cells) {
    for (const auto& [mod, rel] : modifiers(t, sent)) {
      (void)rel;
      auto& row = cells.try_emplace(mod->pos, std::array<long long, 4>{}).first->second;
      ++row[cls];
    }
  });
}

FrequencyTable context_pos_table(const std::vector<Document>& docs, const AnnotationSet& gold) {
  return class_table(docs, gold, [](const Token& t, const Sentence& sent, int cls, auto& cells) {
    int n = static_cast<int>(sent.tokens.size());
    for (int d : {-2, -1, 1, 2}) {
      int j = (t.index - 1) + d;
      if (j < 0 || j >= n) continue;
      auto& row = cells.try_emplace(sent.tokens[j].pos, std::array<long long, 4>{}).first->second;
      ++row[cls];
    }
  });
}

FrequencyTable ner_by_subtype_table(const std::vector<Document>& docs, const AnnotationSet& gold) {
  static const std::vector<std::string> columns = {"Person", "Location", "Organization", "Number",
                                                   "Misc"};
  std::map<std::string, std::array<long long, 5>> cells;
  std::map<std::string, const Document*> by_id;
  for (const Document& d : docs) by_id[d.doc_id] = &d;
  for (const auto& n : gold.nuggets) {
    auto doc_it = by_id.find(n.doc_id);
    if (doc_it == by_id.end()) continue;
    const Document& doc = *doc_it->second;
    const Sentence& sent = nugget_sentence(n, doc);
    const Token& trigger = nugget_trigger_token(n, doc);
    for (const auto& [mod, rel] : modifiers(trigger, sent)) {
      (void)rel;
      if (mod->ner == "O") continue;
      std::string ner = lower_ascii(mod->ner);
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (ner == lower_ascii(columns[c])) {
          auto& row = cells.try_emplace(n.subtype, std::array<long long, 5>{}).first->second;
          ++row[c];
          break;
        }
      }
    }
  }
  FrequencyTable table;
  table.column_labels = columns;
  std::vector<std::pair<std::string, std::array<long long, 5>>> rows(cells.begin(), cells.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    long long ma = 0, mb = 0;
    for (long long v : a.second) ma += v;
    for (long long v : b.second) mb += v;
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  for (auto& [label, row] : rows) {
    table.row_labels.push_back(label);
    table.counts.push_back(std::vector<long long>(row.begin(), row.end()));
  }
  return table;
}

std::string table_to_tsv(const FrequencyTable& table, const std::string& corner_label) {
  std::string out = corner_label;
  for (const std::string& col : table.column_labels) out += "\t" + col;
  out += "\n";
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    out += table.row_labels[r];
    for (long long c : table.counts[r]) out += "\t" + std::to_string(c);
    out += "\n";
  }
  return out;
}

}  // namespace evn
