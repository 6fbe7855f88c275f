#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cqa/embeddings.hpp"
#include "cqa/ingest.hpp"
#include "cqa/matrix.hpp"
#include "cqa/postvec.hpp"

namespace cqa::domains {

struct KMeansConfig {
  int k = 2;
  std::uint64_t seed = 1;
  int max_iters = 300;
  double tol = 1e-6;  // stop once every centroid moves less than this
  int restarts = 5;   // independent k-means++ starts; the lowest objective wins
};

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centroids;                    // mean of each cluster's members
  double objective = 0.0;              // within-cluster sum of squared distances
  std::vector<double> objective_trace; // per Lloyd iteration, then per refinement pass, of the winning start
  int iterations = 0;
};

/// Lloyd's algorithm from a seeded k-means++ start, followed by single-point
/// moves while any lowers the objective. Empty clusters are re-seeded with
/// the point farthest from its centroid. Throws
/// InvalidArgument if k < 2, k > rows, or any value is non-finite.
KMeansResult kmeans(const Matrix& points, const KMeansConfig& cfg);

/// Copy with every non-zero row scaled to unit length.
Matrix normalize_rows(const Matrix& m);

/// Mean silhouette over all points with Euclidean distance; singleton
/// clusters contribute 0. Throws InvalidArgument with fewer than two clusters.
double silhouette(const Matrix& points, std::span<const int> assignment);

/// Exact below `max_points`, otherwise the silhouette of a seeded uniform sample.
double silhouette_sampled(const Matrix& points, std::span<const int> assignment, std::size_t max_points,
                          std::uint64_t seed);

struct KSelectionReport {
  std::vector<std::pair<int, double>> candidates;  // (k, silhouette)
  int chosen_k = 0;
};

struct SelectKConfig {
  int k_min_useful = 50;
  int restarts = 5;
  int max_iters = 300;
  double tol = 1e-6;
  std::size_t silhouette_sample = 2000;
};

/// Silhouette-argmax over candidates with k >= k_min_useful (all candidates
/// when none qualifies); ties go to the smaller k.
KSelectionReport select_k(const Matrix& points, std::span<const int> k_candidates, std::uint64_t seed,
                          const SelectKConfig& cfg = {});

struct QuestionVector {
  PostId id = 0;
  std::vector<double> values;
};

/// Index of the centroid with the smallest cosine distance; ties go to the
/// lowest index. Zero centroids never win. Throws on a zero query.
std::size_t nearest_centroid(std::span<const double> v, const Matrix& centroids);

struct AssignmentDiagnostics {
  std::vector<PostId> skipped_zero;
};

std::map<PostId, int> assign_questions(std::span<const QuestionVector> questions, const Matrix& centroids,
                                       AssignmentDiagnostics* diagnostics = nullptr);

struct DomainModel {
  int k = 0;
  Matrix centroids;
  std::map<std::string, int> word_assignment;
  std::map<PostId, int> question_assignment;

  friend bool operator==(const DomainModel&, const DomainModel&) = default;
};

struct DomainConfig {
  std::optional<int> k;              // nullopt = choose by silhouette
  std::vector<int> k_candidates;     // used when k is unset
  std::uint64_t seed = 1;
  SelectKConfig selection;
};

struct DomainBuild {
  DomainModel model;
  std::optional<KSelectionReport> selection;
};

/// Clusters the L2-normalised word vectors of `table`, then assigns questions.
DomainBuild build_domains(const embed::EmbeddingTable& table, std::span<const QuestionVector> questions,
                          const DomainConfig& cfg);

/// Question vectors ("q<id>" rows) out of a vectorize dump.
std::vector<QuestionVector> question_vectors(const textio::VectorTable& vectors);

/// Files: <prefix>.centroids (vector table, keys c0..), <prefix>.assign
/// ("<question_id> <cluster>"), <prefix>.words ("<word> <cluster>").
void save_domain_model(const DomainModel& model, const std::filesystem::path& prefix);
DomainModel load_domain_model(const std::filesystem::path& prefix);
std::filesystem::path centroids_path(const std::filesystem::path& prefix);
std::filesystem::path assignment_path(const std::filesystem::path& prefix);
std::filesystem::path words_path(const std::filesystem::path& prefix);

}  // namespace cqa::domains
