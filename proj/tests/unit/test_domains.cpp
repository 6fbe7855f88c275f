#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "cqa/domains.hpp"
#include "cqa/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cqa;
using namespace cqa::domains;

namespace {

// Gaussian blobs around the given centres, `per` points each.
Matrix blobs(const std::vector<std::vector<double>>& centres, int per, double spread, std::uint64_t seed,
             std::vector<int>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  Matrix m;
  for (std::size_t c = 0; c < centres.size(); ++c)
    for (int i = 0; i < per; ++i) {
      std::vector<double> p = centres[c];
      for (auto& x : p) x += noise(rng);
      m.append_row(p);
      if (truth) truth->push_back(static_cast<int>(c));
    }
  return m;
}

std::set<std::set<std::size_t>> partition(std::span<const int> assignment, const std::vector<std::size_t>& ids) {
  std::map<int, std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < assignment.size(); ++i) groups[assignment[i]].insert(ids[i]);
  std::set<std::set<std::size_t>> out;
  for (auto& [c, g] : groups) out.insert(g);
  return out;
}

KMeansConfig cfg_k(int k, int restarts = 5, std::uint64_t seed = 1) {
  KMeansConfig c;
  c.k = k;
  c.restarts = restarts;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("separable groups split exactly") {
  std::vector<int> truth;
  const auto m = blobs({{10, 0}, {-10, 0}}, 10, 0.03, 2, &truth);
  const auto r = kmeans(m, cfg_k(2));
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) CHECK((truth[i] == truth[j]) == (r.assignment[i] == r.assignment[j]));
}

TEST_CASE("k equal to n gives zero objective") {
  std::mt19937_64 rng(4);
  const auto m = fixture::random_matrix(6, 3, rng);
  const auto r = kmeans(m, cfg_k(6));
  CHECK(r.objective == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::set<int>(r.assignment.begin(), r.assignment.end()).size() == 6);
}

TEST_CASE("objective trace never increases") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = fixture::random_matrix(50, 4, rng);
    const auto r = kmeans(m, cfg_k(4, 1, 10 + trial));
    REQUIRE_FALSE(r.objective_trace.empty());
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-9);
    CHECK(r.objective == Catch::Approx(r.objective_trace.back()).margin(1e-9));
  }
}

TEST_CASE("centroids are member means") {
  std::mt19937_64 rng(9);
  const auto m = fixture::random_matrix(30, 3, rng);
  const auto r = kmeans(m, cfg_k(3));
  for (int c = 0; c < 3; ++c) {
    std::vector<double> mean(3, 0.0);
    int n = 0;
    for (std::size_t i = 0; i < 30; ++i)
      if (r.assignment[i] == c) {
        for (std::size_t d = 0; d < 3; ++d) mean[d] += m(i, d);
        ++n;
      }
    REQUIRE(n > 0);
    for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(mean[d] / n - r.centroids(c, d)) < 1e-9);
  }
}

TEST_CASE("kmeans argument errors") {
  Matrix m(3, 2, 1.0);
  CHECK_THROWS_AS(kmeans(m, cfg_k(1)), InvalidArgument);
  CHECK_THROWS_AS(kmeans(m, cfg_k(4)), InvalidArgument);
  m(1, 1) = std::nan("");
  CHECK_THROWS_AS(kmeans(m, cfg_k(2)), InvalidArgument);
}

TEST_CASE("twelve points match exhaustive two-partition search") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = fixture::random_matrix(12, 2, rng);
    const auto [best, label] = oracle::best_two_partition(fixture::to_dense(m));
    const auto r = kmeans(m, cfg_k(2, 10, 100 + trial));
    CHECK(std::abs(r.objective - best) < 1e-9 * std::max(1.0, best));
    std::vector<std::size_t> ids(12);
    std::iota(ids.begin(), ids.end(), 0);
    CHECK(partition(r.assignment, ids) == partition(label, ids));
  }
}

TEST_CASE("row permutation preserves the partition") {
  const auto m = blobs({{5, 5}, {-5, 5}, {0, -6}}, 8, 0.2, 13);
  const auto base = kmeans(m, cfg_k(3));
  std::vector<std::size_t> order(m.rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(14);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix permuted;
  for (auto i : order) permuted.append_row(m.row(i));
  const auto r = kmeans(permuted, cfg_k(3));
  std::vector<std::size_t> identity(m.rows());
  std::iota(identity.begin(), identity.end(), 0);
  CHECK(partition(r.assignment, order) == partition(base.assignment, identity));
}

TEST_CASE("silhouette matches the reference definition") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = fixture::random_matrix(12, 3, rng);
    std::vector<int> label(12);
    for (int i = 0; i < 12; ++i) label[i] = i % 3;
    std::swap(label[0], label[5]);
    label[11] = 3;  // singleton
    CHECK(std::abs(silhouette(m, label) - oracle::silhouette(fixture::to_dense(m), label)) < 1e-9);
  }
}

TEST_CASE("silhouette edge cases") {
  const auto far = blobs({{10, 0}, {-10, 0}}, 10, 0.01, 5);
  std::vector<int> label;
  for (int i = 0; i < 20; ++i) label.push_back(i < 10 ? 0 : 1);
  CHECK(silhouette(far, label) > 0.9);

  const Matrix same(6, 2, 1.0);
  const std::vector<int> split{0, 0, 0, 1, 1, 1};
  CHECK(silhouette(same, split) == 0.0);

  const std::vector<int> one(6, 0);
  CHECK_THROWS_AS(silhouette(same, one), InvalidArgument);
}

TEST_CASE("sampled silhouette is exact on small inputs") {
  std::mt19937_64 rng(32);
  const auto m = fixture::random_matrix(20, 2, rng);
  std::vector<int> label(20);
  for (int i = 0; i < 20; ++i) label[i] = i % 2;
  CHECK(silhouette_sampled(m, label, 2000, 1) == silhouette(m, label));
  const double sampled = silhouette_sampled(m, label, 10, 1);
  CHECK(sampled >= -1.0);
  CHECK(sampled <= 1.0);
}

TEST_CASE("k selection on four blobs") {
  const auto m = blobs({{8, 0}, {-8, 0}, {0, 8}, {0, -8}}, 15, 0.5, 41);
  SelectKConfig sc;
  sc.k_min_useful = 2;
  const std::vector<int> candidates{2, 3, 4, 5, 6};
  const auto report = select_k(m, candidates, 7, sc);
  CHECK(report.chosen_k == 4);
  CHECK(report.candidates.size() == 5);

  const std::vector<int> single{3};
  CHECK(select_k(m, single, 7, sc).chosen_k == 3);

  SelectKConfig strict;  // no candidate reaches the default minimum
  CHECK(select_k(m, candidates, 7, strict).chosen_k == 4);
}

TEST_CASE("nearest centroid and tie rule") {
  Matrix c(5, 2);
  c(0, 0) = 1;
  c(1, 0) = 1;
  c(1, 1) = 1;
  c(2, 0) = -1;
  c(3, 1) = 1;
  c(4, 0) = 1;
  c(4, 1) = 1;
  const std::vector<double> at3{0, 2};
  CHECK(nearest_centroid(at3, c) == 3);
  const std::vector<double> diag{3, 3};
  CHECK(nearest_centroid(diag, c) == 1);
  const std::vector<double> zero{0, 0};
  CHECK_THROWS(nearest_centroid(zero, c));

  const std::vector<QuestionVector> qs{{1, {0, 5}}, {2, {0, 0}}, {3, {2, 2}}};
  AssignmentDiagnostics diag_out;
  const auto a = assign_questions(qs, c, &diag_out);
  CHECK(a == std::map<PostId, int>{{1, 3}, {3, 1}});
  CHECK(diag_out.skipped_zero == std::vector<PostId>{2});
}

TEST_CASE("cluster-pure questions land in their source cluster") {
  std::vector<std::vector<double>> centres;
  for (int c = 0; c < 4; ++c) {
    std::vector<double> v(8, 0.0);
    v[2 * c] = 1;
    v[2 * c + 1] = 1;
    centres.push_back(v);
  }
  std::vector<int> truth;
  const auto words = blobs(centres, 10, 0.05, 51, &truth);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < words.rows(); ++i) names.push_back("w" + std::to_string(i));
  const embed::EmbeddingTable table(names, words);

  std::mt19937_64 rng(52);
  std::vector<QuestionVector> qs;
  std::vector<int> source;
  for (int q = 0; q < 20; ++q) {
    const int c = q % 4;
    std::vector<std::string> toks;
    for (int t = 0; t < 5; ++t) toks.push_back(names[c * 10 + rng() % 10]);
    qs.push_back({static_cast<PostId>(q + 1), postvec::summarize(toks, table).values});
    source.push_back(c);
  }
  DomainConfig dc;
  dc.k = 4;
  const auto built = build_domains(table, qs, dc);
  REQUIRE(built.model.k == 4);
  // map each source cluster to the cluster its words ended up in
  std::map<int, int> label_of;
  for (std::size_t i = 0; i < names.size(); ++i) label_of[truth[i]] = built.model.word_assignment.at(names[i]);
  int correct = 0;
  for (int q = 0; q < 20; ++q) correct += built.model.question_assignment.at(q + 1) == label_of[source[q]];
  CHECK(correct >= 19);
  CHECK(built.model.question_assignment.size() == 20);
}

TEST_CASE("domain model round trip") {
  fixture::TempDir dir;
  DomainModel m;
  m.k = 2;
  m.centroids = Matrix(2, 3);
  m.centroids(0, 1) = 0.5;
  m.centroids(1, 2) = -0.25;
  m.word_assignment = {{"alpha", 0}, {"beta", 1}};
  m.question_assignment = {{10, 1}, {11, 0}};
  const auto prefix = dir / "model";
  save_domain_model(m, prefix);
  CHECK(std::filesystem::exists(centroids_path(prefix)));
  CHECK(fixture::slurp(assignment_path(prefix)) == "10 1\n11 0\n");
  CHECK(load_domain_model(prefix) == m);
  CHECK_THROWS(load_domain_model(dir / "missing"));
}

TEST_CASE("question vectors come from q-prefixed rows") {
  textio::VectorTable t;
  t.keys = {"q5", "a6", "q7"};
  t.values = Matrix(3, 2, 1.0);
  const auto qs = question_vectors(t);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].id == 5);
  CHECK(qs[1].id == 7);
}
