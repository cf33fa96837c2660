#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "evn/corpus.hpp"

namespace evn {

struct PRF {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

PRF make_prf(double p, double r);  // f1 = 2pr/(p+r), 0 when p+r = 0

enum class Attribute { span, type, realis, all };

// Micro-averaged mention scores. A system nugget is a true positive when
// an unmatched gold nugget in the same document has the identical token
// span (and equal attribute values for type/realis/all), matched 1:1.
PRF mention_f1(const std::vector<EventNugget>& gold, const std::vector<EventNugget>& sys,
               Attribute attribute);

// Clustering metrics over a shared mention universe (throws DataError on
// universe mismatch). Multi-document scoring pools the per-document counts.
PRF muc(const Clustering& gold, const Clustering& sys);
PRF b_cubed(const Clustering& gold, const Clustering& sys);
PRF ceaf_e(const Clustering& gold, const Clustering& sys);
PRF blanc(const Clustering& gold, const Clustering& sys);

double conll_avg(double f_b3, double f_ceafe, double f_muc, double f_blanc);

// Maximum-weight 1:1 assignment (Kuhn-Munkres) on a non-negative
// rectangular matrix. Returns the matched (row, col) pairs and the total.
std::pair<std::vector<std::pair<int, int>>, double> assignment_max(const Eigen::MatrixXd& w);

struct CorefScores {
  PRF muc;
  PRF b3;
  PRF ceafe;
  PRF blanc;
  double conll = 0.0;
};

// Pooled over per-document clustering pairs.
CorefScores coref_scores(const std::vector<std::pair<Clustering, Clustering>>& doc_pairs);

struct DocBreakdown {
  std::string doc_id;
  Genre genre = Genre::newswire;
  double span_f1 = 0.0;
  double type_realis_f1 = 0.0;  // span + type + realis all correct
};

struct Histogram {
  // counts[bin][series]; series order: span/newswire, span/discussion_forum,
  // type_realis/newswire, type_realis/discussion_forum. Ten equal-width
  // bins; 1.0 falls in the last bin.
  std::array<std::array<long long, 4>, 10> counts{};
};

std::vector<DocBreakdown> per_document_breakdown(const AnnotationSet& gold, const AnnotationSet& sys,
                                                 const std::vector<Document>& docs);
Histogram histogram_from_breakdown(const std::vector<DocBreakdown>& rows);

struct ScoreReport {
  PRF span, type, realis, all;
  CorefScores coref;
  std::vector<DocBreakdown> per_document;
  Histogram histogram;
};

// Full report over a corpus. Mentions are identified across the two files
// by (document, exact token span); coreference scoring requires the two
// mention universes to coincide under that identification.
ScoreReport score_corpus(const std::vector<Document>& docs, const AnnotationSet& gold,
                         const AnnotationSet& sys);

std::string report_to_tsv(const ScoreReport& report, const std::string& system_id);
std::string per_document_to_tsv(const std::vector<DocBreakdown>& rows);
std::string histogram_to_tsv(const Histogram& h);

}  // namespace evn
