#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evn/corpus.hpp"
#include "evn/features.hpp"
#include "evn/rng.hpp"

namespace evntest {

std::string source_dir();
std::string config_path(const std::string& name);

// Bundle over the shipped default vocabularies plus synthetic embeddings.
evn::ResourceBundle test_bundle(const std::string& embeddings_text);

// Structurally valid random documents for round-trip properties.
evn::Document random_document(evn::Rng& rng, const std::string& doc_id);
evn::AnnotationSet random_annotations(evn::Rng& rng, const std::vector<evn::Document>& docs);

// Planted-trigger corpus that small ensembles can overfit: each trigger
// lemma has a fixed subtype and realis, a distinctive embedding, and
// same-lemma mentions within a document corefer.
struct FixtureCorpus {
  std::vector<evn::Document> docs;
  evn::AnnotationSet gold;
  std::string embeddings_text;
};

FixtureCorpus make_fixture_corpus(int n_docs, std::uint64_t seed);

struct FixtureFiles {
  std::string corpus;
  std::string gold;
  std::string embeddings;
  std::string ensemble_spec;
};

// Writes the corpus files plus a small 10-S/3-T ensemble spec under dir.
FixtureFiles write_fixture(const FixtureCorpus& fc, const std::string& dir);

// Scratch directory under the current working directory; wiped per name.
std::string fresh_dir(const std::string& name);

}  // namespace evntest
