#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cqa/embeddings.hpp"
#include "cqa/textio.hpp"
#include "cqa/textprep.hpp"

namespace cqa::postvec {

/// TF-weighted mean of word vectors for one document.
struct DocVector {
  std::vector<double> values;
  std::string doc_id;
  std::uint64_t token_mass = 0;  // Σ tf over in-vocabulary terms; 0 <=> zero vector
  std::uint64_t oov_tokens = 0;  // diagnostic: tokens skipped as out-of-vocabulary

  bool is_zero() const noexcept { return token_mass == 0; }
};

std::map<std::string, std::uint64_t> term_frequency(std::span<const std::string> tokens);
inline std::map<std::string, std::uint64_t> term_frequency(const textprep::TokenDoc& doc) {
  return term_frequency(doc.tokens);
}

/// values = Σ tf(d,t)·T_t / token_mass over in-vocabulary terms (zero vector when none).
DocVector summarize(std::span<const std::string> tokens, const embed::EmbeddingTable& table,
                    std::string doc_id = {});
inline DocVector summarize(const textprep::TokenDoc& doc, const embed::EmbeddingTable& table) {
  return summarize(doc.tokens, table, std::to_string(doc.source_post_id));
}

/// a·b / (|a| |b|). Throws InvalidArgument on a zero vector or a length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

/// Keys are "q<id>" for questions and "a<id>" for answers.
std::string question_key(PostId id);
std::string answer_key(PostId id);

/// Vectors for every question and answer with non-zero token mass.
textio::VectorTable vectorize_corpus(const textprep::PreparedCorpus& corpus, const embed::EmbeddingTable& table);

}  // namespace cqa::postvec
