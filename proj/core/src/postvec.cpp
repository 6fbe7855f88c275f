#include "cqa/postvec.hpp"

#include <algorithm>
#include <cmath>

#include "cqa/error.hpp"

namespace cqa::postvec {

std::map<std::string, std::uint64_t> term_frequency(std::span<const std::string> tokens) {
  std::map<std::string, std::uint64_t> tf;
  for (const auto& t : tokens) ++tf[t];
  return tf;
}

DocVector summarize(std::span<const std::string> tokens, const embed::EmbeddingTable& table,
                    std::string doc_id) {
  if (table.empty()) throw InvalidArgument("summarize: embedding table is empty");
  DocVector out;
  out.doc_id = std::move(doc_id);
  out.values.assign(table.dim(), 0.0);
  // Iterating the TF map (sorted terms) makes the sum independent of token order.
  for (const auto& [term, count] : term_frequency(tokens)) {
    auto row = embed::lookup(table, term);
    if (!row) {
      out.oov_tokens += count;
      continue;
    }
    const double w = static_cast<double>(count);
    for (std::size_t d = 0; d < out.values.size(); ++d) out.values[d] += w * (*row)[d];
    out.token_mass += count;
  }
  if (out.token_mass > 0)
    for (auto& v : out.values) v /= static_cast<double>(out.token_mass);
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine: vector lengths differ");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine: zero vector");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

std::string question_key(PostId id) { return "q" + std::to_string(id); }
std::string answer_key(PostId id) { return "a" + std::to_string(id); }

textio::VectorTable vectorize_corpus(const textprep::PreparedCorpus& corpus, const embed::EmbeddingTable& table) {
  textio::VectorTable out;
  auto add = [&](const std::string& key, const textprep::PreparedPost& post) {
    auto v = summarize(post.tokens, table, key);
    if (v.is_zero()) return;
    out.keys.push_back(key);
    out.values.append_row(v.values);
  };
  for (const auto& q : corpus.questions) {
    add(question_key(q.post.id), q.post);
    for (const auto& a : q.answers) add(answer_key(a.post.id), a.post);
  }
  if (out.keys.empty()) out.values = Matrix(0, table.dim());
  return out;
}

}  // namespace cqa::postvec
