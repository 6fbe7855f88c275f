#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cqa/domains.hpp"
#include "cqa/embeddings.hpp"
#include "cqa/ingest.hpp"
#include "cqa/mf.hpp"
#include "cqa/textprep.hpp"

namespace cqa::eval {

/// Answer score of each user who answered the held-out question.
using Truth = std::map<UserId, double>;

struct EvalQuery {
  PostId question_id = 0;
  std::string text;  // title + "\n" + body
  Truth truth;

  friend bool operator==(const EvalQuery&, const EvalQuery&) = default;
};

/// Removes `count` seeded-random questions from the corpus and turns them
/// into queries. Truth holds each answer author's best score on the question.
struct HoldOut {
  ingest::Corpus corpus;
  std::vector<EvalQuery> queries;  // ascending question id
};
HoldOut hold_out(const ingest::Corpus& corpus, std::size_t count, std::uint64_t seed);

void save_queries(std::span<const EvalQuery> queries, std::ostream& out);
std::vector<EvalQuery> load_queries(std::istream& in);

/// Seeded shuffle then near-equal contiguous partition. Returns query
/// indices per fold. Throws InvalidArgument for folds < 1 or folds > n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int folds, std::uint64_t seed);

/// Fraction of queries with a truth user among the first n recommendations.
double accuracy_at_n(std::span<const std::vector<UserId>> recommended, std::span<const Truth> truth, std::size_t n);

/// DCG / IDCG with relevance = max(0, truth score). Queries whose IDCG is 0
/// are left out of the mean; 0 when every query is left out.
double ndcg_at_n(std::span<const std::vector<UserId>> recommended, std::span<const Truth> truth, std::size_t n);
double ndcg_one(std::span<const UserId> recommended, const Truth& truth, std::size_t n);

struct EvalConfig {
  int folds = 3;
  std::vector<double> lambdas{0.0, 0.5, 1.0};
  std::size_t top = 20;  // N_max and the ell passed to the recommenders
  std::uint64_t seed = 1;
  mf::NmfConfig nmf;
};

struct MethodBlock {
  std::vector<double> accuracy;  // index N-1
  std::vector<double> ndcg;
  std::size_t no_terms = 0;      // queries rejected for lack of usable terms
};

struct LambdaBlock {
  double lambda = 0.0;
  MethodBlock embedding;
  MethodBlock jaccard;
};

struct FoldResult {
  int fold = 0;
  std::size_t queries = 0;
  std::size_t unreachable = 0;  // no truth author present in the index
  std::vector<LambdaBlock> blocks;
};

struct Summary {
  std::vector<double> mean;
  std::vector<double> stddev;  // population stddev over folds
};

struct EvalReport {
  EvalConfig config;
  std::size_t total_queries = 0;
  std::size_t unreachable = 0;
  double reachable_upper_bound = 0.0;  // best attainable accuracy
  std::vector<FoldResult> folds;
  // keyed by (lambda position, "embedding_accuracy" | "embedding_ndcg" | ...)
  std::map<std::pair<std::size_t, std::string>, Summary> aggregate;
};

/// For each fold: drops the fold's questions from the corpus, factorizes the
/// remaining votes, builds an index and runs both recommenders at every
/// lambda. Embeddings and domains are reused as given.
EvalReport run_evaluation(const textprep::PreparedCorpus& corpus, const embed::EmbeddingTable& table,
                          const domains::DomainModel& model, std::span<const EvalQuery> queries,
                          const EvalConfig& cfg);

void write_report_json(const EvalReport& report, std::ostream& out);
void write_report_csv(const EvalReport& report, std::ostream& out);

}  // namespace cqa::eval
