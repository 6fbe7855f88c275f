#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cqa/matrix.hpp"

namespace cqa::embed {

/// Word -> dense vector map. Immutable once built.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Throws InvalidArgument on duplicate words or a row-count mismatch.
  EmbeddingTable(std::vector<std::string> words, Matrix vectors);

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t dim() const noexcept { return vectors_.cols(); }
  bool empty() const noexcept { return words_.empty(); }

  const std::vector<std::string>& words() const noexcept { return words_; }
  const Matrix& vectors() const noexcept { return vectors_; }
  std::optional<std::size_t> index_of(const std::string& word) const;
  std::span<const double> row(std::size_t i) const { return vectors_.row(i); }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.words_ == b.words_ && a.vectors_ == b.vectors_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  Matrix vectors_;
};

std::optional<std::span<const double>> lookup(const EmbeddingTable& table, const std::string& word);

/// Sub-table over vocab ∩ dictionary, rows unchanged. Throws on an empty
/// dictionary or an empty intersection.
EmbeddingTable restrict_vocabulary(const EmbeddingTable& table, const std::set<std::string>& dictionary);

/// Top-k words by cosine similarity, descending (ties by word), excluding `word`.
/// Throws InvalidArgument for an out-of-vocabulary query.
std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingTable& table,
                                                              const std::string& word, std::size_t k);

/// word2vec text format: "<vocab_size> <dim>" then "<word> v1 ... v_dim".
void save_embeddings(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable load_embeddings(std::istream& in);

struct SgnsConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_learning_rate = 0.025;
  int min_count = 5;
  double subsample_threshold = 1e-4;
  std::uint64_t seed = 1;
  /// 1 = deterministic. More threads train with unsynchronised (relaxed
  /// atomic) updates and are not reproducible run to run.
  int threads = 1;

  void validate() const;
};

/// Loss -log σ(u_o·v_c) - Σ log σ(-u_n·v_c) for one (center, context) pair and
/// its gradients with respect to every vector involved.
struct PairGradient {
  double loss = 0.0;
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

PairGradient sgns_pair_gradient(std::span<const double> center, std::span<const double> context,
                                std::span<const std::span<const double>> negatives);

struct TrainingReport {
  std::vector<double> epoch_loss;  // mean pair loss per epoch
  std::uint64_t pairs = 0;
  std::size_t vocab_size = 0;
};

/// Skip-gram with negative sampling. Vocabulary is every word with count >=
/// min_count, ordered by (count desc, word asc). Throws Error("no trainable
/// vocabulary") when nothing survives the cutoff.
EmbeddingTable train_sgns(std::span<const std::vector<std::string>> sentences, const SgnsConfig& cfg,
                          TrainingReport* report = nullptr);

}  // namespace cqa::embed
