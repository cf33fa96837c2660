#include "evn/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "evn/error.hpp"
#include "evn/util.hpp"

namespace evn {

PRF make_prf(double p, double r) {
  PRF out;
  out.p = p;
  out.r = r;
  out.f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return out;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::string match_key(const EventNugget& n, Attribute attribute) {
  std::string key = n.doc_id + "\x1f" + span_to_string(n.span);
  switch (attribute) {
    case Attribute::span: break;
    case Attribute::type: key += "\x1f" + n.subtype; break;
    case Attribute::realis: key += "\x1f" + n.realis; break;
    case Attribute::all: key += "\x1f" + n.subtype + "\x1f" + n.realis; break;
  }
  return key;
}

}  // namespace

PRF mention_f1(const std::vector<EventNugget>& gold, const std::vector<EventNugget>& sys,
               Attribute attribute) {
  // Greedy 1:1 matching on key equality equals summed min counts per key.
  std::unordered_map<std::string, long long> gold_counts;
  for (const auto& n : gold) ++gold_counts[match_key(n, attribute)];
  long long tp = 0;
  for (const auto& n : sys) {
    auto it = gold_counts.find(match_key(n, attribute));
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  double p = ratio(static_cast<double>(tp), static_cast<double>(sys.size()));
  double r = ratio(static_cast<double>(tp), static_cast<double>(gold.size()));
  return make_prf(p, r);
}

namespace {

void check_universes(const Clustering& gold, const Clustering& sys) {
  if (gold.universe() != sys.universe()) throw DataError("mention universe mismatch");
}

std::unordered_map<std::string, int> cluster_index(const Clustering& c) {
  std::unordered_map<std::string, int> out;
  for (std::size_t i = 0; i < c.clusters.size(); ++i)
    for (const std::string& id : c.clusters[i]) out[id] = static_cast<int>(i);
  return out;
}

struct MucCounts {
  double r_num = 0.0, r_den = 0.0, p_num = 0.0, p_den = 0.0;
};

MucCounts muc_counts(const Clustering& gold, const Clustering& sys) {
  check_universes(gold, sys);
  MucCounts out;
  auto link_side = [](const Clustering& keys, const Clustering& resp, double& num, double& den) {
    auto resp_of = cluster_index(resp);
    for (const auto& cluster : keys.clusters) {
      std::set<int> partitions;
      for (const std::string& id : cluster) partitions.insert(resp_of.at(id));
      num += static_cast<double>(cluster.size() - partitions.size());
      den += static_cast<double>(cluster.size() - 1);
    }
  };
  link_side(gold, sys, out.r_num, out.r_den);
  link_side(sys, gold, out.p_num, out.p_den);
  return out;
}

struct B3Counts {
  double p_sum = 0.0, r_sum = 0.0;
  long long mentions = 0;
};

B3Counts b3_counts(const Clustering& gold, const Clustering& sys) {
  check_universes(gold, sys);
  B3Counts out;
  auto gold_of = cluster_index(gold);
  auto sys_of = cluster_index(sys);
  for (const std::string& id : gold.universe()) {
    const auto& g = gold.clusters[gold_of.at(id)];
    const auto& s = sys.clusters[sys_of.at(id)];
    long long inter = 0;
    for (const std::string& m : g)
      if (s.count(m)) ++inter;
    out.r_sum += static_cast<double>(inter) / static_cast<double>(g.size());
    out.p_sum += static_cast<double>(inter) / static_cast<double>(s.size());
    ++out.mentions;
  }
  return out;
}

struct CeafCounts {
  double phi_star = 0.0;
  long long gold_clusters = 0, sys_clusters = 0;
};

CeafCounts ceaf_counts(const Clustering& gold, const Clustering& sys) {
  check_universes(gold, sys);
  CeafCounts out;
  out.gold_clusters = static_cast<long long>(gold.clusters.size());
  out.sys_clusters = static_cast<long long>(sys.clusters.size());
  if (gold.clusters.empty() || sys.clusters.empty()) return out;
  Eigen::MatrixXd w(gold.clusters.size(), sys.clusters.size());
  for (std::size_t i = 0; i < gold.clusters.size(); ++i)
    for (std::size_t j = 0; j < sys.clusters.size(); ++j) {
      const auto& g = gold.clusters[i];
      const auto& s = sys.clusters[j];
      long long inter = 0;
      for (const std::string& m : g)
        if (s.count(m)) ++inter;
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          2.0 * static_cast<double>(inter) / static_cast<double>(g.size() + s.size());
    }
  out.phi_star = assignment_max(w).second;
  return out;
}

struct BlancCounts {
  // Correct / gold / system counts for coreference links and non-links.
  double rc = 0.0, gl = 0.0, sl = 0.0;
  double rn = 0.0, gn = 0.0, sn = 0.0;
};

BlancCounts blanc_counts(const Clustering& gold, const Clustering& sys) {
  check_universes(gold, sys);
  BlancCounts out;
  auto gold_of = cluster_index(gold);
  auto sys_of = cluster_index(sys);
  std::set<std::string> universe = gold.universe();
  std::vector<std::string> ids(universe.begin(), universe.end());
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      bool g = gold_of.at(ids[i]) == gold_of.at(ids[j]);
      bool s = sys_of.at(ids[i]) == sys_of.at(ids[j]);
      out.gl += g;
      out.sl += s;
      out.gn += !g;
      out.sn += !s;
      out.rc += g && s;
      out.rn += !g && !s;
    }
  return out;
}

PRF prf_from_muc(const MucCounts& c) {
  return make_prf(ratio(c.p_num, c.p_den), ratio(c.r_num, c.r_den));
}

PRF prf_from_b3(const B3Counts& c) {
  if (c.mentions == 0) return PRF{};
  return make_prf(c.p_sum / static_cast<double>(c.mentions), c.r_sum / static_cast<double>(c.mentions));
}

PRF prf_from_ceaf(const CeafCounts& c) {
  return make_prf(ratio(c.phi_star, static_cast<double>(c.sys_clusters)),
                  ratio(c.phi_star, static_cast<double>(c.gold_clusters)));
}

// Mean of the link-side and non-link-side scores; a side with no gold and
// no system pairs drops out and the other side stands alone.
PRF prf_from_blanc(const BlancCounts& c) {
  bool have_links = c.gl + c.sl > 0.0;
  bool have_nonlinks = c.gn + c.sn > 0.0;
  PRF link = make_prf(ratio(c.rc, c.sl), ratio(c.rc, c.gl));
  PRF nonlink = make_prf(ratio(c.rn, c.sn), ratio(c.rn, c.gn));
  if (!have_links && !have_nonlinks) return make_prf(1.0, 1.0);
  if (!have_links) return nonlink;
  if (!have_nonlinks) return link;
  PRF out;
  out.p = (link.p + nonlink.p) / 2.0;
  out.r = (link.r + nonlink.r) / 2.0;
  out.f1 = (link.f1 + nonlink.f1) / 2.0;
  return out;
}

}  // namespace

PRF muc(const Clustering& gold, const Clustering& sys) { return prf_from_muc(muc_counts(gold, sys)); }

PRF b_cubed(const Clustering& gold, const Clustering& sys) { return prf_from_b3(b3_counts(gold, sys)); }

PRF ceaf_e(const Clustering& gold, const Clustering& sys) { return prf_from_ceaf(ceaf_counts(gold, sys)); }

PRF blanc(const Clustering& gold, const Clustering& sys) { return prf_from_blanc(blanc_counts(gold, sys)); }

double conll_avg(double f_b3, double f_ceafe, double f_muc, double f_blanc) {
  return (f_b3 + f_ceafe + f_muc + f_blanc) / 4.0;
}

std::pair<std::vector<std::pair<int, int>>, double> assignment_max(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return {{}, 0.0};
  if (w.minCoeff() < 0.0) throw UsageError("assignment_max expects non-negative weights");

  // Potential-based Kuhn-Munkres on the cost matrix -w; rows <= cols.
  bool transposed = w.rows() > w.cols();
  Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(-w.transpose()) : Eigen::MatrixXd(-w);
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      int i0 = match[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<std::pair<int, int>> pairs;
  double total = 0.0;
  for (int j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    int row = match[j] - 1, col = j - 1;
    if (transposed) std::swap(row, col);
    pairs.emplace_back(row, col);
    total += w(row, col);
  }
  std::sort(pairs.begin(), pairs.end());
  return {std::move(pairs), total};
}

CorefScores coref_scores(const std::vector<std::pair<Clustering, Clustering>>& doc_pairs) {
  MucCounts muc_total;
  B3Counts b3_total;
  CeafCounts ceaf_total;
  BlancCounts blanc_total;
  for (const auto& [gold, sys] : doc_pairs) {
    MucCounts mc = muc_counts(gold, sys);
    muc_total.r_num += mc.r_num;
    muc_total.r_den += mc.r_den;
    muc_total.p_num += mc.p_num;
    muc_total.p_den += mc.p_den;
    B3Counts bc = b3_counts(gold, sys);
    b3_total.p_sum += bc.p_sum;
    b3_total.r_sum += bc.r_sum;
    b3_total.mentions += bc.mentions;
    CeafCounts cc = ceaf_counts(gold, sys);
    ceaf_total.phi_star += cc.phi_star;
    ceaf_total.gold_clusters += cc.gold_clusters;
    ceaf_total.sys_clusters += cc.sys_clusters;
    BlancCounts lc = blanc_counts(gold, sys);
    blanc_total.rc += lc.rc;
    blanc_total.gl += lc.gl;
    blanc_total.sl += lc.sl;
    blanc_total.rn += lc.rn;
    blanc_total.gn += lc.gn;
    blanc_total.sn += lc.sn;
  }
  CorefScores out;
  out.muc = prf_from_muc(muc_total);
  out.b3 = prf_from_b3(b3_total);
  out.ceafe = prf_from_ceaf(ceaf_total);
  out.blanc = prf_from_blanc(blanc_total);
  out.conll = conll_avg(out.b3.f1, out.ceafe.f1, out.muc.f1, out.blanc.f1);
  return out;
}

namespace {

std::vector<EventNugget> copy_nuggets(const std::vector<const EventNugget*>& ptrs) {
  std::vector<EventNugget> out;
  out.reserve(ptrs.size());
  for (const auto* p : ptrs) out.push_back(*p);
  return out;
}

// Bijection between gold and system mentions of one document, keyed on the
// exact token span; duplicated spans align in file order.
std::unordered_map<std::string, std::string> align_mentions(
    const std::vector<const EventNugget*>& gold, const std::vector<const EventNugget*>& sys,
    const std::string& doc_id) {
  std::map<std::string, std::vector<const EventNugget*>> gold_by_span, sys_by_span;
  for (const auto* n : gold) gold_by_span[span_to_string(n->span)].push_back(n);
  for (const auto* n : sys) sys_by_span[span_to_string(n->span)].push_back(n);
  if (gold_by_span.size() != sys_by_span.size())
    throw DataError("mention universe mismatch in document " + doc_id);
  std::unordered_map<std::string, std::string> sys_to_gold;
  for (const auto& [span, gold_list] : gold_by_span) {
    auto it = sys_by_span.find(span);
    if (it == sys_by_span.end() || it->second.size() != gold_list.size())
      throw DataError("mention universe mismatch in document " + doc_id);
    for (std::size_t i = 0; i < gold_list.size(); ++i)
      sys_to_gold[it->second[i]->mention_id] = gold_list[i]->mention_id;
  }
  return sys_to_gold;
}

Clustering relabel(const Clustering& c, const std::unordered_map<std::string, std::string>& map) {
  Clustering out;
  for (const auto& cluster : c.clusters) {
    std::set<std::string> ids;
    for (const std::string& id : cluster) ids.insert(map.at(id));
    out.clusters.push_back(std::move(ids));
  }
  return out;
}

PRF doc_mention_f1(const std::vector<const EventNugget*>& gold,
                   const std::vector<const EventNugget*>& sys, Attribute attribute) {
  return mention_f1(copy_nuggets(gold), copy_nuggets(sys), attribute);
}

}  // namespace

std::vector<DocBreakdown> per_document_breakdown(const AnnotationSet& gold, const AnnotationSet& sys,
                                                 const std::vector<Document>& docs) {
  std::vector<DocBreakdown> out;
  for (const Document& doc : docs) {
    DocBreakdown row;
    row.doc_id = doc.doc_id;
    row.genre = doc.genre;
    auto g = gold.nuggets_of(doc.doc_id);
    auto s = sys.nuggets_of(doc.doc_id);
    row.span_f1 = doc_mention_f1(g, s, Attribute::span).f1;
    row.type_realis_f1 = doc_mention_f1(g, s, Attribute::all).f1;
    out.push_back(std::move(row));
  }
  return out;
}

Histogram histogram_from_breakdown(const std::vector<DocBreakdown>& rows) {
  Histogram h;
  auto bin_of = [](double f1) {
    int b = static_cast<int>(f1 * 10.0);
    if (b > 9) b = 9;
    if (b < 0) b = 0;
    return b;
  };
  for (const auto& row : rows) {
    int genre_col = row.genre == Genre::newswire ? 0 : 1;
    ++h.counts[bin_of(row.span_f1)][genre_col];
    ++h.counts[bin_of(row.type_realis_f1)][2 + genre_col];
  }
  return h;
}

ScoreReport score_corpus(const std::vector<Document>& docs, const AnnotationSet& gold,
                         const AnnotationSet& sys) {
  validate_against(gold, docs);
  validate_against(sys, docs);

  ScoreReport report;
  report.span = mention_f1(gold.nuggets, sys.nuggets, Attribute::span);
  report.type = mention_f1(gold.nuggets, sys.nuggets, Attribute::type);
  report.realis = mention_f1(gold.nuggets, sys.nuggets, Attribute::realis);
  report.all = mention_f1(gold.nuggets, sys.nuggets, Attribute::all);

  std::vector<std::pair<Clustering, Clustering>> doc_pairs;
  for (const Document& doc : docs) {
    auto g = gold.nuggets_of(doc.doc_id);
    auto s = sys.nuggets_of(doc.doc_id);
    if (g.empty() && s.empty()) continue;
    auto sys_to_gold = align_mentions(g, s, doc.doc_id);
    Clustering gold_clusters = gold.clusterings.count(doc.doc_id)
                                   ? gold.clusterings.at(doc.doc_id)
                                   : Clustering{};
    Clustering sys_clusters = sys.clusterings.count(doc.doc_id) ? sys.clusterings.at(doc.doc_id)
                                                                : Clustering{};
    doc_pairs.emplace_back(std::move(gold_clusters), relabel(sys_clusters, sys_to_gold));
  }
  report.coref = coref_scores(doc_pairs);
  report.per_document = per_document_breakdown(gold, sys, docs);
  report.histogram = histogram_from_breakdown(report.per_document);
  return report;
}

std::string report_to_tsv(const ScoreReport& report, const std::string& system_id) {
  std::string out;
  out += "Runs\tSpan-P\tSpan-R\tSpan-F1\tType-P\tType-R\tType-F1\tRealis-P\tRealis-R\tRealis-F1\tAll-P\tAll-R\tAll-F1\n";
  out += system_id;
  for (const PRF* prf : {&report.span, &report.type, &report.realis, &report.all})
    out += "\t" + format_pct(prf->p) + "\t" + format_pct(prf->r) + "\t" + format_pct(prf->f1);
  out += "\n\n";
  out += "Runs\tB3\tCeafE\tMUC\tBLANC\tCoNLL\n";
  out += system_id;
  out += "\t" + format_pct(report.coref.b3.f1);
  out += "\t" + format_pct(report.coref.ceafe.f1);
  out += "\t" + format_pct(report.coref.muc.f1);
  out += "\t" + format_pct(report.coref.blanc.f1);
  out += "\t" + format_pct(report.coref.conll);
  out += "\n";
  return out;
}

std::string per_document_to_tsv(const std::vector<DocBreakdown>& rows) {
  std::string out = "doc_id\tgenre\tspan_f1\ttype_realis_f1\n";
  for (const auto& row : rows) {
    out += row.doc_id + "\t" + to_string(row.genre) + "\t" + format_pct(row.span_f1) + "\t" +
           format_pct(row.type_realis_f1) + "\n";
  }
  return out;
}

std::string histogram_to_tsv(const Histogram& h) {
  std::string out =
      "bin_lo\tbin_hi\tspan:newswire\tspan:discussion_forum\ttype_realis:newswire\ttype_realis:discussion_forum\n";
  for (int b = 0; b < 10; ++b) {
    char lo[8], hi[8];
    std::snprintf(lo, sizeof(lo), "%.1f", b / 10.0);
    std::snprintf(hi, sizeof(hi), "%.1f", (b + 1) / 10.0);
    out += std::string(lo) + "\t" + hi;
    for (int s = 0; s < 4; ++s) out += "\t" + std::to_string(h.counts[b][s]);
    out += "\n";
  }
  return out;
}

}  // namespace evn
