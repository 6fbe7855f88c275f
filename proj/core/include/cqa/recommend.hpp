#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cqa/domains.hpp"
#include "cqa/embeddings.hpp"
#include "cqa/mf.hpp"
#include "cqa/postvec.hpp"
#include "cqa/textprep.hpp"

namespace cqa::recommend {

struct IndexedAnswer {
  PostId answer_id = 0;
  UserId author = 0;
  long long observed_score = 0;
  double observed_norm = 0.0;       // observed / max observed
  double reconstructed_norm = 0.0;  // reconstructed / max reconstructed
  double blended = 0.0;

  friend bool operator==(const IndexedAnswer&, const IndexedAnswer&) = default;
};

struct IndexedQuestion {
  PostId id = 0;
  int domain = 0;
  std::vector<double> vector;             // non-zero summary of title + body
  std::vector<std::string> token_set;     // sorted, unique; used by the lexical baseline
  std::vector<IndexedAnswer> answers;     // (blended desc, answer id asc)

  friend bool operator==(const IndexedQuestion&, const IndexedQuestion&) = default;
};

/// Per-domain question lists with scored answers. Immutable; share freely
/// across concurrent queries.
class ExpertIndex {
 public:
  ExpertIndex() = default;
  /// Blends answer scores at `lambda` and orders answers. Questions without a
  /// named answer are dropped. Throws InvalidArgument on an out-of-range
  /// domain, a zero question vector or lambda outside [0, 1].
  ExpertIndex(Matrix centroids, std::vector<std::vector<std::string>> domain_words,
              std::vector<IndexedQuestion> questions, textprep::FilterConfig filter, double lambda);

  /// Same index with answers re-blended and re-ordered at another lambda.
  ExpertIndex with_lambda(double lambda) const;

  double lambda() const noexcept { return lambda_; }
  std::size_t domain_count() const noexcept { return centroids_.rows(); }
  std::size_t size() const noexcept { return questions_.size(); }
  const Matrix& centroids() const noexcept { return centroids_; }
  const std::vector<std::string>& domain_words(std::size_t d) const { return domain_words_.at(d); }
  const std::vector<std::size_t>& domain_questions(std::size_t d) const { return by_domain_.at(d); }
  const std::vector<IndexedQuestion>& questions() const noexcept { return questions_; }
  const textprep::FilterConfig& filter() const noexcept { return filter_; }
  std::set<UserId> authors() const;

  friend bool operator==(const ExpertIndex& a, const ExpertIndex& b) {
    return a.lambda_ == b.lambda_ && a.centroids_ == b.centroids_ && a.domain_words_ == b.domain_words_ &&
           a.questions_ == b.questions_ && a.filter_ == b.filter_;
  }

 private:
  void reblend();

  Matrix centroids_;
  std::vector<std::vector<std::string>> domain_words_;  // sorted per domain
  std::vector<IndexedQuestion> questions_;
  std::vector<std::vector<std::size_t>> by_domain_;
  textprep::FilterConfig filter_;
  double lambda_ = 0.5;
};

/// Joins the prepared corpus with its vectors, domains and factorization.
/// The factorization must have been computed on build_vote_matrix(corpus).
ExpertIndex build_index(const textprep::PreparedCorpus& corpus, const embed::EmbeddingTable& table,
                        const domains::DomainModel& model, const mf::Factorization& factorization,
                        double lambda);

void save_index(const ExpertIndex& index, std::ostream& out);
ExpertIndex load_index(std::istream& in);
/// 64-bit FNV-1a over the serialised index.
std::uint64_t index_fingerprint(const ExpertIndex& index);

struct Evidence {
  PostId question_id = 0;
  double similarity = 0.0;
  std::vector<PostId> answer_ids;  // the expert's answers on that question, best first
};

struct Expert {
  UserId user_id = 0;
  double score = 0.0;
  Evidence evidence;
};

struct Recommendation {
  std::size_t domain = 0;
  std::vector<Expert> experts;  // unique users, non-increasing score
};

/// Nearest centroid by cosine distance (ties: lowest index). Throws
/// Error("query has no in-vocabulary terms") for a zero vector.
std::size_t route_query(const postvec::DocVector& query, const Matrix& centroids);

/// Routes the query, visits the routed domain's questions by decreasing
/// cosine similarity and collects authors in blended-score order until `ell`
/// distinct experts are found or the domain runs out. An expert's score is
/// blended answer score x question similarity, capped at the previous
/// expert's score so the list stays non-increasing.
Recommendation recommend_experts(std::string_view query, const ExpertIndex& index,
                                 const embed::EmbeddingTable& table, std::size_t ell);
Recommendation recommend_for_vector(const postvec::DocVector& query, const ExpertIndex& index, std::size_t ell);

/// |a ∩ b| / |a ∪ b| over sorted unique token lists; 0 when both are empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

/// The same procedure with token-set Jaccard overlap in place of embeddings,
/// for routing (against each domain's word set) and for question matching.
Recommendation jaccard_recommend(std::string_view query, const ExpertIndex& index, std::size_t ell);

}  // namespace cqa::recommend
