#include "cqa/domains.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "cqa/error.hpp"
#include "cqa/textio.hpp"

namespace cqa::domains {

namespace {

std::vector<std::size_t> kmeanspp_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  std::vector<std::size_t> seeds;
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::size_t next = pick(rng);
  for (int c = 0; c < k; ++c) {
    seeds.push_back(next);
    chosen[next] = true;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), points.row(next)));
      if (!chosen[i]) total += d2[i];
    }
    if (c + 1 == k) break;
    if (total > 0.0) {
      double target = unit(rng) * total;
      next = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] == 0.0) continue;
        next = i;
        target -= d2[i];
        if (target <= 0.0) break;
      }
    } else {
      // Remaining points coincide with chosen ones: pick any unchosen index.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      next = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
    }
  }
  return seeds;
}

double sse(const Matrix& points, std::span<const int> assignment, const Matrix& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    s += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(assignment[i])));
  return s;
}

void recompute_centroids(const Matrix& points, std::span<const int> assignment, Matrix& centroids,
                         std::vector<std::size_t>& sizes) {
  std::fill(centroids.data().begin(), centroids.data().end(), 0.0);
  std::fill(sizes.begin(), sizes.end(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    ++sizes[c];
    auto row = centroids.row(c);
    const auto p = points.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] += p[d];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c)
    if (sizes[c] > 0)
      for (auto& v : centroids.row(c)) v /= static_cast<double>(sizes[c]);
}

// Single-point moves that lower the objective (Hartigan). Lloyd's fixed points
// are not all local minima under such moves; this escapes the shallow ones.
// Each pass appends the objective to the trace.
void refine(const Matrix& points, KMeansResult& r, std::vector<std::size_t>& sizes, int max_passes) {
  const std::size_t n = points.rows(), k = r.centroids.rows(), dim = points.cols();
  Matrix sums(k, dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = sums.row(static_cast<std::size_t>(r.assignment[i]));
    const auto p = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) row[d] += p[d];
  }
  auto set_centroid = [&](std::size_t c) {
    for (std::size_t d = 0; d < dim; ++d) r.centroids(c, d) = sizes[c] ? sums(c, d) / static_cast<double>(sizes[c]) : 0.0;
  };
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto own = static_cast<std::size_t>(r.assignment[i]);
      if (sizes[own] < 2) continue;
      const auto p = points.row(i);
      const double na = static_cast<double>(sizes[own]);
      const double removal = na / (na - 1.0) * squared_distance(p, r.centroids.row(own));
      std::size_t target = own;
      double best = removal;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == own) continue;
        const double nb = static_cast<double>(sizes[c]);
        const double addition = nb / (nb + 1.0) * squared_distance(p, r.centroids.row(c));
        if (addition < best) {
          best = addition;
          target = c;
        }
      }
      if (target == own || removal - best <= 1e-12 * removal) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        sums(own, d) -= p[d];
        sums(target, d) += p[d];
      }
      --sizes[own];
      ++sizes[target];
      r.assignment[i] = static_cast<int>(target);
      set_centroid(own);
      set_centroid(target);
      moved = true;
    }
    if (!moved) break;
    recompute_centroids(points, r.assignment, r.centroids, sizes);  // drop accumulated rounding
    r.objective_trace.push_back(sse(points, r.assignment, r.centroids));
  }
}

KMeansResult lloyd(const Matrix& points, const KMeansConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  const auto k = static_cast<std::size_t>(cfg.k);
  KMeansResult r;
  r.centroids = Matrix(k, points.cols());
  const auto seeds = kmeanspp_seeds(points, cfg.k, rng);
  for (std::size_t c = 0; c < k; ++c) {
    auto row = r.centroids.row(c);
    std::copy(points.row(seeds[c]).begin(), points.row(seeds[c]).end(), row.begin());
  }
  r.assignment.assign(n, 0);
  std::vector<std::size_t> sizes(k);
  Matrix previous;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points.row(i), r.centroids.row(c));
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      r.assignment[i] = arg;
    }
    previous = r.centroids;
    recompute_centroids(points, r.assignment, r.centroids, sizes);

    // Re-seed empty clusters with the worst-fit point of a cluster that can spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      double worst = -1.0;
      std::size_t arg = n;
      for (std::size_t i = 0; i < n; ++i) {
        const auto owner = static_cast<std::size_t>(r.assignment[i]);
        if (sizes[owner] < 2) continue;
        const double d = squared_distance(points.row(i), r.centroids.row(owner));
        if (d > worst) {
          worst = d;
          arg = i;
        }
      }
      if (arg == n) break;
      r.assignment[arg] = static_cast<int>(c);
      recompute_centroids(points, r.assignment, r.centroids, sizes);
    }

    r.objective_trace.push_back(sse(points, r.assignment, r.centroids));
    r.iterations = iter + 1;
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(squared_distance(previous.row(c), r.centroids.row(c))));
    if (shift < cfg.tol) break;
  }
  refine(points, r, sizes, cfg.max_iters);
  r.objective = r.objective_trace.back();
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, const KMeansConfig& cfg) {
  if (cfg.k < 2) throw InvalidArgument("kmeans: k must be >= 2");
  if (static_cast<std::size_t>(cfg.k) > points.rows())
    throw InvalidArgument("kmeans: k = " + std::to_string(cfg.k) + " exceeds the " +
                          std::to_string(points.rows()) + " input rows");
  if (cfg.max_iters < 1 || cfg.restarts < 1) throw InvalidArgument("kmeans: max_iters and restarts must be >= 1");
  for (double v : points.data())
    if (!std::isfinite(v)) throw InvalidArgument("kmeans: non-finite input");

  std::mt19937_64 rng(cfg.seed);
  KMeansResult best;
  for (int run = 0; run < cfg.restarts; ++run) {
    auto r = lloyd(points, cfg, rng);
    if (run == 0 || r.objective < best.objective) best = std::move(r);
  }
  return best;
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double n = norm2(row);
    if (n > 0.0)
      for (auto& v : row) v /= n;
  }
  return out;
}

double silhouette(const Matrix& points, std::span<const int> assignment) {
  if (assignment.size() != points.rows()) throw InvalidArgument("silhouette: assignment size mismatch");
  std::map<int, std::size_t> label_index;
  for (int a : assignment) label_index.emplace(a, 0);
  if (label_index.size() < 2) throw InvalidArgument("silhouette: needs at least two clusters");
  std::size_t next = 0;
  for (auto& [label, idx] : label_index) idx = next++;
  const std::size_t k = label_index.size();
  std::vector<std::size_t> label(points.rows());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    label[i] = label_index[assignment[i]];
    ++sizes[label[i]];
  }

  std::vector<double> dist_sum(k);
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (sizes[label[i]] == 1) continue;  // contributes 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < points.rows(); ++j) {
      if (j == i) continue;
      dist_sum[label[j]] += std::sqrt(squared_distance(points.row(i), points.row(j)));
    }
    const double a = dist_sum[label[i]] / static_cast<double>(sizes[label[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != label[i]) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(points.rows());
}

double silhouette_sampled(const Matrix& points, std::span<const int> assignment, std::size_t max_points,
                          std::uint64_t seed) {
  if (points.rows() <= max_points) return silhouette(points, assignment);
  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  Matrix sample;
  std::vector<int> labels;
  for (auto i : idx) {
    sample.append_row(points.row(i));
    labels.push_back(assignment[i]);
  }
  return silhouette(sample, labels);
}

KSelectionReport select_k(const Matrix& points, std::span<const int> k_candidates, std::uint64_t seed,
                          const SelectKConfig& cfg) {
  if (k_candidates.empty()) throw InvalidArgument("select_k: no candidates");
  KSelectionReport report;
  for (int k : k_candidates) {
    KMeansConfig kc{k, seed, cfg.max_iters, cfg.tol, cfg.restarts};
    const auto r = kmeans(points, kc);
    report.candidates.emplace_back(k, silhouette_sampled(points, r.assignment, cfg.silhouette_sample, seed));
  }
  const bool any_useful = std::any_of(report.candidates.begin(), report.candidates.end(),
                                      [&](const auto& c) { return c.first >= cfg.k_min_useful; });
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [k, score] : report.candidates) {
    if (any_useful && k < cfg.k_min_useful) continue;
    if (score > best || (score == best && k < report.chosen_k)) {
      best = score;
      report.chosen_k = k;
    }
  }
  return report;
}

std::size_t nearest_centroid(std::span<const double> v, const Matrix& centroids) {
  const double vn = norm2(v);
  if (vn == 0.0) throw InvalidArgument("nearest_centroid: zero vector");
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  bool found = false;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double cn = norm2(centroids.row(c));
    if (cn == 0.0) continue;
    const double sim = dot(v, centroids.row(c)) / (vn * cn);
    if (!found || sim > best) {
      best = sim;
      arg = c;
      found = true;
    }
  }
  if (!found) throw InvalidArgument("nearest_centroid: no usable centroid");
  return arg;
}

std::map<PostId, int> assign_questions(std::span<const QuestionVector> questions, const Matrix& centroids,
                                       AssignmentDiagnostics* diagnostics) {
  std::map<PostId, int> out;
  for (const auto& q : questions) {
    if (norm2(q.values) == 0.0) {
      if (diagnostics) diagnostics->skipped_zero.push_back(q.id);
      continue;
    }
    out[q.id] = static_cast<int>(nearest_centroid(q.values, centroids));
  }
  return out;
}

DomainBuild build_domains(const embed::EmbeddingTable& table, std::span<const QuestionVector> questions,
                          const DomainConfig& cfg) {
  Matrix points;
  std::vector<std::string> words;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (norm2(table.row(i)) == 0.0) continue;
    words.push_back(table.words()[i]);
    points.append_row(table.row(i));
  }
  points = normalize_rows(points);

  DomainBuild out;
  int k = 0;
  if (cfg.k) {
    k = *cfg.k;
  } else {
    out.selection = select_k(points, cfg.k_candidates, cfg.seed, cfg.selection);
    k = out.selection->chosen_k;
  }
  const auto result =
      kmeans(points, {k, cfg.seed, cfg.selection.max_iters, cfg.selection.tol, cfg.selection.restarts});
  out.model.k = k;
  out.model.centroids = result.centroids;
  for (std::size_t i = 0; i < words.size(); ++i) out.model.word_assignment[words[i]] = result.assignment[i];
  out.model.question_assignment = assign_questions(questions, out.model.centroids);
  return out;
}

std::vector<QuestionVector> question_vectors(const textio::VectorTable& vectors) {
  std::vector<QuestionVector> out;
  for (std::size_t i = 0; i < vectors.keys.size(); ++i) {
    const auto& key = vectors.keys[i];
    if (key.empty() || key[0] != 'q') continue;
    QuestionVector q;
    q.id = textio::parse_int(std::string_view(key).substr(1), "question key");
    q.values.assign(vectors.values.row(i).begin(), vectors.values.row(i).end());
    out.push_back(std::move(q));
  }
  return out;
}

std::filesystem::path centroids_path(const std::filesystem::path& prefix) {
  auto p = prefix;
  p += ".centroids";
  return p;
}
std::filesystem::path assignment_path(const std::filesystem::path& prefix) {
  auto p = prefix;
  p += ".assign";
  return p;
}
std::filesystem::path words_path(const std::filesystem::path& prefix) {
  auto p = prefix;
  p += ".words";
  return p;
}

void save_domain_model(const DomainModel& model, const std::filesystem::path& prefix) {
  textio::VectorTable centroids;
  for (int c = 0; c < model.k; ++c) centroids.keys.push_back("c" + std::to_string(c));
  centroids.values = model.centroids;
  textio::write_file_atomic(centroids_path(prefix),
                            [&](std::ostream& out) { textio::write_vector_table(out, centroids); });
  textio::write_file_atomic(assignment_path(prefix), [&](std::ostream& out) {
    for (const auto& [q, c] : model.question_assignment) out << q << ' ' << c << '\n';
  });
  textio::write_file_atomic(words_path(prefix), [&](std::ostream& out) {
    for (const auto& [w, c] : model.word_assignment) out << w << ' ' << c << '\n';
  });
}

namespace {

template <typename Key, typename Parse>
std::map<Key, int> read_pairs(const std::filesystem::path& path, int k, Parse&& parse_key) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<Key, int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (textio::trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string key, cluster, extra;
    const std::string where = path.filename().string() + " line " + std::to_string(line_no);
    if (!(fields >> key >> cluster) || (fields >> extra)) throw ParseError(where + ": expected '<key> <cluster>'");
    const auto c = textio::parse_int(cluster, where);
    if (c < 0 || c >= k) throw ParseError(where + ": cluster index out of range");
    out[parse_key(key, where)] = static_cast<int>(c);
  }
  return out;
}

}  // namespace

DomainModel load_domain_model(const std::filesystem::path& prefix) {
  std::ifstream cin(centroids_path(prefix));
  if (!cin) throw Error("cannot open " + centroids_path(prefix).string());
  auto table = textio::read_vector_table(cin);
  DomainModel model;
  model.k = static_cast<int>(table.keys.size());
  for (int c = 0; c < model.k; ++c)
    if (table.keys[static_cast<std::size_t>(c)] != "c" + std::to_string(c))
      throw ParseError("centroid file: expected key c" + std::to_string(c));
  model.centroids = std::move(table.values);
  model.question_assignment = read_pairs<PostId>(assignment_path(prefix), model.k,
                                                 [](const std::string& key, const std::string& where) {
                                                   return static_cast<PostId>(textio::parse_int(key, where));
                                                 });
  if (std::filesystem::exists(words_path(prefix)))
    model.word_assignment = read_pairs<std::string>(words_path(prefix), model.k,
                                                    [](const std::string& key, const std::string&) { return key; });
  return model;
}

}  // namespace cqa::domains
