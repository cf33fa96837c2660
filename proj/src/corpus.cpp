#include "evn/corpus.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "evn/error.hpp"
#include "evn/util.hpp"

namespace evn {

namespace {

[[noreturn]] void fail_line(int lineno, const std::string& msg) {
  throw DataError("line " + std::to_string(lineno) + ": " + msg);
}

std::int64_t need_i64(std::string_view field, int lineno, const char* what) {
  std::int64_t v;
  if (!parse_i64(field, v)) fail_line(lineno, std::string("cannot parse ") + what + " '" + std::string(field) + "'");
  return v;
}

// Head links of an accepted sentence must form a tree: exactly one root,
// no self loops, no cycles.
void check_sentence(const Sentence& sent, const std::vector<int>& lines) {
  int n = static_cast<int>(sent.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = sent.tokens[i];
    if (t.head < 0 || t.head > n) fail_line(lines[i], "head index out of range");
    if (t.head == t.index) fail_line(lines[i], "token is its own head");
    if (t.head == 0) ++roots;
  }
  if (roots != 1)
    fail_line(lines[n - 1], "sentence has " + std::to_string(roots) + " root tokens, expected exactly 1");
  // Walk up from every token; more than n steps means a cycle.
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    int steps = 0;
    while (cur != 0) {
      cur = sent.tokens[cur - 1].head;
      if (++steps > n) fail_line(lines[i], "dependency head links form a cycle");
    }
  }
}

}  // namespace

std::string to_string(Genre g) {
  return g == Genre::newswire ? "newswire" : "discussion_forum";
}

Genre parse_genre(std::string_view s) {
  if (s == "newswire") return Genre::newswire;
  if (s == "discussion_forum") return Genre::discussion_forum;
  throw DataError("unknown genre '" + std::string(s) + "'");
}

bool valid_realis(std::string_view s) {
  return s == "Actual" || s == "Generic" || s == "Other";
}

std::set<std::string> Clustering::universe() const {
  std::set<std::string> out;
  for (const auto& c : clusters) out.insert(c.begin(), c.end());
  return out;
}

void Clustering::validate(const std::set<std::string>& ids) const {
  std::size_t total = 0;
  std::set<std::string> seen;
  for (const auto& c : clusters) {
    if (c.empty()) throw DataError("clustering contains an empty cluster");
    total += c.size();
    seen.insert(c.begin(), c.end());
  }
  if (total != seen.size()) throw DataError("clustering clusters are not disjoint");
  if (seen != ids) throw DataError("clustering does not cover the declared mention set");
}

bool same_partition(const Clustering& a, const Clustering& b) {
  auto norm = [](const Clustering& c) {
    std::set<std::set<std::string>> s(c.clusters.begin(), c.clusters.end());
    return s;
  };
  return norm(a) == norm(b);
}

std::vector<const EventNugget*> AnnotationSet::nuggets_of(const std::string& doc_id) const {
  std::vector<const EventNugget*> out;
  for (const auto& n : nuggets)
    if (n.doc_id == doc_id) out.push_back(&n);
  return out;
}

std::vector<Document> parse_document_file(const std::string& text) {
  std::vector<Document> docs;
  std::unordered_set<std::string> doc_ids;

  Document cur;
  Sentence sent;
  std::vector<int> sent_lines;
  bool in_doc = false;
  std::int64_t prev_end = 0;  // last char_end seen in the current document

  auto flush_sentence = [&]() {
    if (sent.tokens.empty()) return;
    check_sentence(sent, sent_lines);
    cur.sentences.push_back(std::move(sent));
    sent = Sentence{};
    sent_lines.clear();
  };

  auto lines = split(text, '\n');
  for (std::size_t li = 0; li < lines.size(); ++li) {
    int lineno = static_cast<int>(li) + 1;
    std::string_view line = lines[li];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line == "#enddoc") {
      if (!in_doc) fail_line(lineno, "#enddoc outside a document");
      flush_sentence();
      cur.text_length = prev_end;
      docs.push_back(std::move(cur));
      cur = Document{};
      in_doc = false;
      continue;
    }
    if (line.rfind("#doc", 0) == 0 && (line.size() == 4 || line[4] == ' ' || line[4] == '\t')) {
      if (in_doc) fail_line(lineno, "nested #doc header");
      auto fields = split_ws(line);
      if (fields.size() != 3) fail_line(lineno, "document header needs '#doc <doc_id> <genre>'");
      cur.doc_id = std::string(fields[1]);
      try {
        cur.genre = parse_genre(fields[2]);
      } catch (const DataError& e) {
        fail_line(lineno, e.what());
      }
      if (!doc_ids.insert(cur.doc_id).second) fail_line(lineno, "duplicate doc_id '" + cur.doc_id + "'");
      in_doc = true;
      prev_end = 0;
      continue;
    }
    if (trim(line).empty()) {
      if (in_doc) flush_sentence();
      continue;
    }
    if (!in_doc) fail_line(lineno, "content outside a #doc block");

    auto cols = split(line, '\t');
    if (cols.size() != 9)
      fail_line(lineno, "expected 9 tab-separated columns, got " + std::to_string(cols.size()));

    Token t;
    t.index = static_cast<int>(need_i64(cols[0], lineno, "token index"));
    t.text = std::string(cols[1]);
    t.lemma = std::string(cols[2]);
    t.pos = std::string(cols[3]);
    t.ner = std::string(cols[4]);
    t.head = static_cast<int>(need_i64(cols[5], lineno, "head index"));
    t.deprel = std::string(cols[6]);
    t.char_begin = need_i64(cols[7], lineno, "char_begin");
    t.char_end = need_i64(cols[8], lineno, "char_end");

    int expected = static_cast<int>(sent.tokens.size()) + 1;
    if (t.index != expected)
      fail_line(lineno, "token index " + std::to_string(t.index) + ", expected " + std::to_string(expected));
    if (t.char_begin < 0 || t.char_begin >= t.char_end)
      fail_line(lineno, "invalid character offsets");
    if (t.char_begin < prev_end)
      fail_line(lineno, "token offsets overlap the previous token");
    prev_end = t.char_end;

    sent.tokens.push_back(std::move(t));
    sent_lines.push_back(lineno);
  }
  if (in_doc) throw DataError("unexpected end of input: missing #enddoc");
  return docs;
}

std::string write_document_file(const std::vector<Document>& docs) {
  std::string out;
  for (const Document& d : docs) {
    out += "#doc " + d.doc_id + " " + to_string(d.genre) + "\n";
    for (std::size_t si = 0; si < d.sentences.size(); ++si) {
      if (si > 0) out += "\n";
      for (const Token& t : d.sentences[si].tokens) {
        out += std::to_string(t.index);
        out += '\t';
        out += t.text;
        out += '\t';
        out += t.lemma;
        out += '\t';
        out += t.pos;
        out += '\t';
        out += t.ner;
        out += '\t';
        out += std::to_string(t.head);
        out += '\t';
        out += t.deprel;
        out += '\t';
        out += std::to_string(t.char_begin);
        out += '\t';
        out += std::to_string(t.char_end);
        out += '\n';
      }
    }
    out += "#enddoc\n";
  }
  return out;
}

namespace {

std::vector<SpanTok> parse_span(std::string_view field, int lineno) {
  std::vector<SpanTok> span;
  for (std::string_view part : split(field, ',')) {
    auto st = split(part, ':');
    if (st.size() != 2) fail_line(lineno, "bad span entry '" + std::string(part) + "'");
    SpanTok tok;
    tok.sentence = static_cast<int>(need_i64(st[0], lineno, "span sentence index"));
    tok.token = static_cast<int>(need_i64(st[1], lineno, "span token index"));
    if (tok.sentence < 1 || tok.token < 1) fail_line(lineno, "span indices are 1-based");
    span.push_back(tok);
  }
  if (span.empty()) fail_line(lineno, "empty span");
  return span;
}

}  // namespace

std::string span_to_string(const std::vector<SpanTok>& span) {
  std::string out;
  for (std::size_t i = 0; i < span.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(span[i].sentence) + ":" + std::to_string(span[i].token);
  }
  return out;
}

AnnotationSet parse_annotation_file(const std::string& text) {
  AnnotationSet out;
  bool in_doc = false;
  std::string cur_doc;
  std::vector<std::string> cur_ids;  // declaration order
  std::unordered_set<std::string> cur_id_set;
  std::vector<std::vector<std::string>> cur_corefs;

  auto finish_doc = [&](int lineno) {
    Clustering clustering;
    std::unordered_set<std::string> linked;
    for (const auto& members : cur_corefs) {
      std::set<std::string> cluster;
      for (const std::string& m : members) {
        if (!cur_id_set.count(m))
          fail_line(lineno, "coreference references undeclared mention '" + m + "'");
        if (!linked.insert(m).second)
          fail_line(lineno, "mention '" + m + "' appears in more than one coreference cluster");
        cluster.insert(m);
      }
      clustering.clusters.push_back(std::move(cluster));
    }
    for (const std::string& id : cur_ids)
      if (!linked.count(id)) clustering.clusters.push_back({id});
    out.clusterings[cur_doc] = std::move(clustering);
    out.doc_order.push_back(cur_doc);
    cur_ids.clear();
    cur_id_set.clear();
    cur_corefs.clear();
    in_doc = false;
  };

  auto lines = split(text, '\n');
  for (std::size_t li = 0; li < lines.size(); ++li) {
    int lineno = static_cast<int>(li) + 1;
    std::string_view line = lines[li];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    if (line.rfind("#BeginOfDocument", 0) == 0) {
      if (in_doc) fail_line(lineno, "nested #BeginOfDocument");
      std::string_view rest = trim(line.substr(std::string_view("#BeginOfDocument").size()));
      if (rest.empty()) fail_line(lineno, "#BeginOfDocument needs a doc id");
      cur_doc = std::string(rest);
      if (out.clusterings.count(cur_doc)) fail_line(lineno, "duplicate document block '" + cur_doc + "'");
      in_doc = true;
      continue;
    }
    if (line == "#EndOfDocument") {
      if (!in_doc) fail_line(lineno, "#EndOfDocument outside a document");
      finish_doc(lineno);
      continue;
    }
    if (!in_doc) fail_line(lineno, "content outside a document block");

    if (line.rfind("@Coreference", 0) == 0) {
      auto cols = split(line, '\t');
      if (cols.size() != 3) fail_line(lineno, "coreference line needs 3 tab-separated fields");
      std::vector<std::string> members;
      for (auto m : split(cols[2], ',')) {
        auto id = trim(m);
        if (id.empty()) fail_line(lineno, "empty mention id in coreference line");
        members.emplace_back(id);
      }
      if (members.empty()) fail_line(lineno, "coreference line lists no mentions");
      cur_corefs.push_back(std::move(members));
      continue;
    }

    auto cols = split(line, '\t');
    if (cols.size() != 7)
      fail_line(lineno, "nugget line needs 7 tab-separated fields, got " + std::to_string(cols.size()));
    EventNugget n;
    n.doc_id = std::string(cols[1]);
    if (n.doc_id != cur_doc)
      fail_line(lineno, "nugget doc id '" + n.doc_id + "' does not match block '" + cur_doc + "'");
    n.mention_id = std::string(cols[2]);
    if (n.mention_id.empty()) fail_line(lineno, "empty mention id");
    if (!cur_id_set.insert(n.mention_id).second)
      fail_line(lineno, "duplicate mention id '" + n.mention_id + "'");
    cur_ids.push_back(n.mention_id);
    n.span = parse_span(cols[3], lineno);
    n.text = std::string(cols[4]);
    // Gold data may list several subtypes for one mention; keep the first.
    std::string_view subtype = cols[5];
    std::size_t cut = subtype.find_first_of(",;");
    if (cut != std::string_view::npos) subtype = subtype.substr(0, cut);
    n.subtype = std::string(trim(subtype));
    if (n.subtype.empty()) fail_line(lineno, "empty subtype");
    n.realis = std::string(cols[6]);
    if (!valid_realis(n.realis)) fail_line(lineno, "unknown realis label '" + n.realis + "'");
    out.nuggets.push_back(std::move(n));
  }
  if (in_doc) throw DataError("unexpected end of input: missing #EndOfDocument");
  return out;
}

std::string write_annotation_file(const AnnotationSet& ann, const std::string& system_id) {
  // Sanity-check that clusterings match the declared nuggets per document.
  std::map<std::string, std::set<std::string>> ids_by_doc;
  for (const auto& n : ann.nuggets) ids_by_doc[n.doc_id].insert(n.mention_id);
  for (const auto& doc_id : ann.doc_order) {
    auto it = ann.clusterings.find(doc_id);
    if (it == ann.clusterings.end()) throw UsageError("missing clustering for document " + doc_id);
    it->second.validate(ids_by_doc.count(doc_id) ? ids_by_doc[doc_id] : std::set<std::string>{});
  }

  std::string out;
  for (const std::string& doc_id : ann.doc_order) {
    out += "#BeginOfDocument " + doc_id + "\n";
    std::unordered_map<std::string, std::size_t> ordinal;
    std::size_t k = 0;
    for (const auto& n : ann.nuggets) {
      if (n.doc_id != doc_id) continue;
      ordinal[n.mention_id] = k++;
      out += system_id;
      out += '\t';
      out += n.doc_id;
      out += '\t';
      out += n.mention_id;
      out += '\t';
      out += span_to_string(n.span);
      out += '\t';
      out += n.text;
      out += '\t';
      out += n.subtype;
      out += '\t';
      out += n.realis;
      out += '\n';
    }
    // Non-singleton clusters, ordered by first mention; singletons implicit.
    const Clustering& clustering = ann.clusterings.at(doc_id);
    std::vector<std::vector<std::string>> emit;
    for (const auto& cluster : clustering.clusters) {
      if (cluster.size() < 2) continue;
      std::vector<std::string> members(cluster.begin(), cluster.end());
      std::sort(members.begin(), members.end(),
                [&](const std::string& a, const std::string& b) { return ordinal[a] < ordinal[b]; });
      emit.push_back(std::move(members));
    }
    std::sort(emit.begin(), emit.end(),
              [&](const auto& a, const auto& b) { return ordinal[a[0]] < ordinal[b[0]]; });
    for (std::size_t i = 0; i < emit.size(); ++i) {
      out += "@Coreference\tC" + std::to_string(i + 1) + "\t";
      for (std::size_t j = 0; j < emit[i].size(); ++j) {
        if (j) out += ',';
        out += emit[i][j];
      }
      out += '\n';
    }
    out += "#EndOfDocument\n";
  }
  return out;
}

void validate_against(const AnnotationSet& ann, const std::vector<Document>& corpus) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus) by_id[d.doc_id] = &d;
  for (const std::string& doc_id : ann.doc_order)
    if (!by_id.count(doc_id)) throw DataError("annotation references unknown document '" + doc_id + "'");
  for (const auto& n : ann.nuggets) {
    const Document& doc = *by_id.at(n.doc_id);
    for (const SpanTok& st : n.span) {
      if (st.sentence < 1 || st.sentence > static_cast<int>(doc.sentences.size()))
        throw DataError("mention " + n.mention_id + " names sentence " + std::to_string(st.sentence) +
                        " outside document " + n.doc_id);
      const Sentence& sent = doc.sentences[st.sentence - 1];
      if (st.token < 1 || st.token > static_cast<int>(sent.tokens.size()))
        throw DataError("mention " + n.mention_id + " names token " + std::to_string(st.token) +
                        " outside sentence " + std::to_string(st.sentence) + " of document " + n.doc_id);
    }
  }
}

const Sentence& nugget_sentence(const EventNugget& n, const Document& doc) {
  int si = n.span.front().sentence;
  if (si < 1 || si > static_cast<int>(doc.sentences.size()))
    throw DataError("mention " + n.mention_id + " has a dangling span");
  return doc.sentences[si - 1];
}

const Token& nugget_trigger_token(const EventNugget& n, const Document& doc) {
  const Sentence& sent = nugget_sentence(n, doc);
  int ti = n.span.front().token;
  if (ti < 1 || ti > static_cast<int>(sent.tokens.size()))
    throw DataError("mention " + n.mention_id + " has a dangling span");
  return sent.tokens[ti - 1];
}

}  // namespace evn
