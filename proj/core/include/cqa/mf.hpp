#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "cqa/ingest.hpp"
#include "cqa/matrix.hpp"
#include "cqa/textprep.hpp"

namespace cqa::mf {

/// Sparse question x user answer-score matrix. A stored entry means "user
/// answered this question", even when its (clipped) value is 0.
class VoteMatrix {
 public:
  struct Entry {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  struct Vote {
    PostId question = 0;
    UserId user = 0;
    long long score = 0;
  };

  /// Scores of the same (question, user) are summed, then clipped at 0.
  static VoteMatrix from_votes(std::span<const Vote> votes);

  std::size_t rows() const noexcept { return row_ids_.size(); }
  std::size_t cols() const noexcept { return col_ids_.size(); }
  const std::vector<PostId>& row_ids() const noexcept { return row_ids_; }
  const std::vector<UserId>& col_ids() const noexcept { return col_ids_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }  // (row, col) ascending

  std::optional<std::size_t> row_of(PostId id) const;
  std::optional<std::size_t> col_of(UserId id) const;

  Matrix dense() const;

 private:
  std::vector<PostId> row_ids_;
  std::vector<UserId> col_ids_;
  std::map<PostId, std::size_t> row_index_;
  std::map<UserId, std::size_t> col_index_;
  std::vector<Entry> entries_;
};

VoteMatrix build_vote_matrix(const ingest::Corpus& corpus);
VoteMatrix build_vote_matrix(const textprep::PreparedCorpus& corpus);

struct NmfConfig {
  int rank = 32;
  double alpha = 0.1;  // elastic-net intensity
  double rho = 0.5;    // l1 ratio
  double tol = 1e-4;   // stop when |ΔJ| / J < tol
  int max_iter = 200;
  std::uint64_t seed = 1;
};

struct Factorization {
  Matrix W;  // rows x rank, >= 0
  Matrix H;  // rank x cols, >= 0
  NmfConfig config;
  std::vector<double> loss_trace;  // J at initialisation, then after every iteration
  std::vector<PostId> row_ids;
  std::vector<UserId> col_ids;
};

/// J = ½‖V − WH‖²_F over every cell + αρ(‖W‖₁ + ‖H‖₁) + α(1−ρ)/2 (‖W‖²_F + ‖H‖²_F).
double objective(const VoteMatrix& v, const Matrix& W, const Matrix& H, double alpha, double rho);

/// Alternating non-negative coordinate descent on J. Throws InvalidArgument
/// for an all-zero matrix, rank outside [1, min(rows, cols)], alpha < 0 or rho outside [0, 1].
Factorization factorize(const VoteMatrix& v, const NmfConfig& cfg);

/// Lowers cfg.rank to min(rows, cols) when it exceeds it.
NmfConfig clamp_rank(NmfConfig cfg, const VoteMatrix& v);

Matrix reconstruct(const Factorization& f);

/// (1−λ)·observed/max(observed) + λ·reconstructed/max(reconstructed), cell by cell.
class BlendedScores {
 public:
  BlendedScores(const VoteMatrix& observed, const Matrix& reconstructed, double lambda);

  double lambda() const noexcept { return lambda_; }
  /// 0 for unknown ids and for cells outside both supports.
  double score(PostId question, UserId user) const;
  double observed_normalized(PostId question, UserId user) const;
  double reconstructed_normalized(PostId question, UserId user) const;

 private:
  double lambda_;
  std::map<PostId, std::size_t> rows_;
  std::map<UserId, std::size_t> cols_;
  std::map<std::pair<std::size_t, std::size_t>, double> observed_;
  Matrix reconstructed_;
};

/// Throws InvalidArgument for lambda outside [0, 1] or mismatched shapes.
BlendedScores blend_scores(const VoteMatrix& observed, const Matrix& reconstructed, double lambda);

/// <prefix>.w (keys w<question_id>), <prefix>.h (keys h<user_id>, one column of H per line),
/// <prefix>.meta (config and loss trace).
void save_factorization(const Factorization& f, const std::filesystem::path& prefix);
Factorization load_factorization(const std::filesystem::path& prefix);

}  // namespace cqa::mf
