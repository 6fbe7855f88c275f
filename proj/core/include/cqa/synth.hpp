#pragma once

#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cqa/eval.hpp"
#include "cqa/ingest.hpp"
#include "cqa/postvec.hpp"
#include "cqa/recommend.hpp"

namespace cqa::synth {

/// Planted-expert corpus: vocabulary-disjoint domains, each with one author
/// who answers every question of the domain with the top score. Canonical
/// words are "d<D>t<I>", their synonyms "d<D>s<I>". Questions use canonical
/// words only; answers mix both, which is what lets embeddings relate them.
struct SynthConfig {
  int domains = 4;
  int questions = 200;   // indexed questions, spread evenly over domains
  int queries = 40;      // held-out questions, spread evenly over domains
  int words_per_domain = 30;
  int user_pool = 40;    // ordinary answerers shared across domains
  int answers_min = 2;   // ordinary answers per question
  int answers_max = 4;
  double synonym_rate = 0.0;  // chance a query word is swapped for its synonym
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<ingest::RawPost> posts;        // indexed questions and their answers
  std::vector<eval::EvalQuery> queries;
  std::set<std::string> dictionary;          // every canonical and synonym word
  std::vector<UserId> planted;               // planted author per domain
  std::vector<int> query_domain;             // domain of each query
};

SynthCorpus generate(const SynthConfig& cfg);

std::string canonical_word(int domain, int i);
std::string synonym_word(int domain, int i);

/// Writes posts in the Stack Exchange Posts.xml layout.
void write_posts_xml(std::span<const ingest::RawPost> posts, std::ostream& out);

/// Index over random unit centroids with `per_domain` questions near each,
/// plus one query vector per domain. Used to time routed queries.
struct ScalingFixture {
  recommend::ExpertIndex index;
  std::vector<postvec::DocVector> queries;
};
ScalingFixture scaling_fixture(int domains, int per_domain, int dim, std::uint64_t seed);

}  // namespace cqa::synth
