#include "cqa/mf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "cqa/error.hpp"
#include "cqa/textio.hpp"

namespace cqa::mf {

VoteMatrix VoteMatrix::from_votes(std::span<const Vote> votes) {
  VoteMatrix m;
  std::map<std::pair<PostId, UserId>, long long> totals;
  for (const auto& v : votes) {
    totals[{v.question, v.user}] += v.score;
    m.row_index_.emplace(v.question, 0);
    m.col_index_.emplace(v.user, 0);
  }
  for (auto& [id, idx] : m.row_index_) {
    idx = m.row_ids_.size();
    m.row_ids_.push_back(id);
  }
  for (auto& [id, idx] : m.col_index_) {
    idx = m.col_ids_.size();
    m.col_ids_.push_back(id);
  }
  for (const auto& [key, total] : totals)
    m.entries_.push_back({m.row_index_.at(key.first), m.col_index_.at(key.second),
                          static_cast<double>(std::max(total, 0LL))});
  return m;
}

std::optional<std::size_t> VoteMatrix::row_of(PostId id) const {
  auto it = row_index_.find(id);
  return it == row_index_.end() ? std::nullopt : std::optional(it->second);
}

std::optional<std::size_t> VoteMatrix::col_of(UserId id) const {
  auto it = col_index_.find(id);
  return it == col_index_.end() ? std::nullopt : std::optional(it->second);
}

Matrix VoteMatrix::dense() const {
  Matrix d(rows(), cols());
  for (const auto& e : entries_) d(e.row, e.col) = e.value;
  return d;
}

VoteMatrix build_vote_matrix(const ingest::Corpus& corpus) {
  std::vector<VoteMatrix::Vote> votes;
  for (const auto& q : corpus.questions)
    for (const auto& a : q.answers)
      if (a.owner_user_id) votes.push_back({q.question.id, *a.owner_user_id, a.score});
  return VoteMatrix::from_votes(votes);
}

VoteMatrix build_vote_matrix(const textprep::PreparedCorpus& corpus) {
  std::vector<VoteMatrix::Vote> votes;
  for (const auto& q : corpus.questions)
    for (const auto& a : q.answers) votes.push_back({q.post.id, a.author, a.score});
  return VoteMatrix::from_votes(votes);
}

namespace {

// A^T A for an (n x r) matrix, or A A^T for an (r x m) one when `rows` is false.
Matrix gram(const Matrix& a, bool over_rows) {
  const std::size_t r = over_rows ? a.cols() : a.rows();
  Matrix g(r, r);
  if (over_rows) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto row = a.row(i);
      for (std::size_t k = 0; k < r; ++k)
        for (std::size_t l = 0; l < r; ++l) g(k, l) += row[k] * row[l];
    }
  } else {
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t l = k; l < r; ++l) {
        const double v = dot(a.row(k), a.row(l));
        g(k, l) = v;
        g(l, k) = v;
      }
  }
  return g;
}

double cell(const Matrix& W, const Matrix& H, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < W.cols(); ++k) s += W(i, k) * H(k, j);
  return s;
}

// One exact coordinate minimisation of J over x given the quadratic
// coefficients: J(x) = ½ hess_data x² + (grad_lin) x + αρ x + ½ α(1−ρ) x², x >= 0.
double coordinate_step(double x, double grad, double hess) {
  if (hess <= 0.0) return grad > 0.0 ? 0.0 : x;
  return std::max(0.0, x - grad / hess);
}

}  // namespace

double objective(const VoteMatrix& v, const Matrix& W, const Matrix& H, double alpha, double rho) {
  // ½‖V − WH‖² = ½[Σ_obs (V − WH)² + (‖WH‖² − Σ_obs (WH)²)], with ‖WH‖² = <WᵀW, HHᵀ>.
  const Matrix wtw = gram(W, true);
  const Matrix hht = gram(H, false);
  double total_sq = 0.0;
  for (std::size_t k = 0; k < wtw.rows(); ++k)
    for (std::size_t l = 0; l < wtw.cols(); ++l) total_sq += wtw(k, l) * hht(k, l);
  double obs_resid = 0.0, obs_sq = 0.0;
  for (const auto& e : v.entries()) {
    const double p = cell(W, H, e.row, e.col);
    obs_resid += (e.value - p) * (e.value - p);
    obs_sq += p * p;
  }
  const double loss = 0.5 * (obs_resid + std::max(0.0, total_sq - obs_sq));
  double l1 = 0.0, l2 = 0.0;
  for (const Matrix* m : {&W, &H})
    for (double x : m->data()) {
      l1 += std::abs(x);
      l2 += x * x;
    }
  return loss + alpha * rho * l1 + 0.5 * alpha * (1.0 - rho) * l2;
}

Factorization factorize(const VoteMatrix& v, const NmfConfig& cfg) {
  const std::size_t n = v.rows(), m = v.cols();
  if (cfg.rank < 1 || static_cast<std::size_t>(cfg.rank) > std::min(n, m))
    throw InvalidArgument("factorize: rank " + std::to_string(cfg.rank) + " outside [1, " +
                          std::to_string(std::min(n, m)) + "]");
  if (cfg.alpha < 0.0 || cfg.rho < 0.0 || cfg.rho > 1.0)
    throw InvalidArgument("factorize: need alpha >= 0 and rho in [0, 1]");
  if (cfg.max_iter < 1) throw InvalidArgument("factorize: max_iter must be >= 1");
  double sum = 0.0;
  for (const auto& e : v.entries()) sum += e.value;
  if (sum <= 0.0) throw InvalidArgument("factorize: vote matrix is all zero");

  const auto r = static_cast<std::size_t>(cfg.rank);
  const double l1 = cfg.alpha * cfg.rho;
  const double l2 = cfg.alpha * (1.0 - cfg.rho);

  Factorization f;
  f.config = cfg;
  f.row_ids = v.row_ids();
  f.col_ids = v.col_ids();
  f.W = Matrix(n, r);
  f.H = Matrix(r, m);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(sum / static_cast<double>(n * m) / static_cast<double>(r));
  for (auto& x : f.W.data()) x = scale * std::abs(normal(rng));
  for (auto& x : f.H.data()) x = scale * std::abs(normal(rng));

  f.loss_trace.push_back(objective(v, f.W, f.H, cfg.alpha, cfg.rho));
  Matrix vht(n, r), wtv(r, m);
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    // W half-step.
    const Matrix hht = gram(f.H, false);
    std::fill(vht.data().begin(), vht.data().end(), 0.0);
    for (const auto& e : v.entries())
      for (std::size_t k = 0; k < r; ++k) vht(e.row, k) += e.value * f.H(k, e.col);
    for (std::size_t i = 0; i < n; ++i) {
      auto w = f.W.row(i);
      for (std::size_t k = 0; k < r; ++k) {
        double grad = -vht(i, k) + l1 + l2 * w[k];
        for (std::size_t l = 0; l < r; ++l) grad += w[l] * hht(l, k);
        w[k] = coordinate_step(w[k], grad, hht(k, k) + l2);
      }
    }

    // H half-step.
    const Matrix wtw = gram(f.W, true);
    std::fill(wtv.data().begin(), wtv.data().end(), 0.0);
    for (const auto& e : v.entries())
      for (std::size_t k = 0; k < r; ++k) wtv(k, e.col) += f.W(e.row, k) * e.value;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < r; ++k) {
        double grad = -wtv(k, j) + l1 + l2 * f.H(k, j);
        for (std::size_t l = 0; l < r; ++l) grad += wtw(k, l) * f.H(l, j);
        f.H(k, j) = coordinate_step(f.H(k, j), grad, wtw(k, k) + l2);
      }
    }

    const double prev = f.loss_trace.back();
    const double cur = objective(v, f.W, f.H, cfg.alpha, cfg.rho);
    f.loss_trace.push_back(cur);
    if (cur == 0.0 || std::abs(prev - cur) / std::max(prev, 1e-300) < cfg.tol) break;
  }
  return f;
}

NmfConfig clamp_rank(NmfConfig cfg, const VoteMatrix& v) {
  const auto cap = static_cast<int>(std::min(v.rows(), v.cols()));
  if (cfg.rank > cap) cfg.rank = cap;
  return cfg;
}

Matrix reconstruct(const Factorization& f) {
  Matrix out(f.W.rows(), f.H.cols());
  for (std::size_t i = 0; i < f.W.rows(); ++i)
    for (std::size_t k = 0; k < f.W.cols(); ++k) {
      const double w = f.W(i, k);
      if (w == 0.0) continue;
      auto row = out.row(i);
      const auto h = f.H.row(k);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += w * h[j];
    }
  return out;
}

BlendedScores::BlendedScores(const VoteMatrix& observed, const Matrix& reconstructed, double lambda)
    : lambda_(lambda), reconstructed_(reconstructed) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("blend_scores: lambda must lie in [0, 1]");
  if (reconstructed.rows() != observed.rows() || reconstructed.cols() != observed.cols())
    throw InvalidArgument("blend_scores: shapes of observed and reconstructed matrices differ");
  for (std::size_t i = 0; i < observed.rows(); ++i) rows_[observed.row_ids()[i]] = i;
  for (std::size_t j = 0; j < observed.cols(); ++j) cols_[observed.col_ids()[j]] = j;

  double obs_max = 0.0;
  for (const auto& e : observed.entries()) obs_max = std::max(obs_max, e.value);
  for (const auto& e : observed.entries()) observed_[{e.row, e.col}] = obs_max > 0.0 ? e.value / obs_max : 0.0;

  double rec_max = 0.0;
  for (double x : reconstructed_.data()) rec_max = std::max(rec_max, x);
  if (rec_max > 0.0)
    for (auto& x : reconstructed_.data()) x = std::max(0.0, x) / rec_max;
}

double BlendedScores::observed_normalized(PostId question, UserId user) const {
  auto r = rows_.find(question);
  auto c = cols_.find(user);
  if (r == rows_.end() || c == cols_.end()) return 0.0;
  auto it = observed_.find({r->second, c->second});
  return it == observed_.end() ? 0.0 : it->second;
}

double BlendedScores::reconstructed_normalized(PostId question, UserId user) const {
  auto r = rows_.find(question);
  auto c = cols_.find(user);
  if (r == rows_.end() || c == cols_.end()) return 0.0;
  return reconstructed_(r->second, c->second);
}

double BlendedScores::score(PostId question, UserId user) const {
  return (1.0 - lambda_) * observed_normalized(question, user) + lambda_ * reconstructed_normalized(question, user);
}

BlendedScores blend_scores(const VoteMatrix& observed, const Matrix& reconstructed, double lambda) {
  return BlendedScores(observed, reconstructed, lambda);
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  auto p = prefix;
  p += suffix;
  return p;
}

}  // namespace

void save_factorization(const Factorization& f, const std::filesystem::path& prefix) {
  textio::VectorTable w;
  for (auto id : f.row_ids) w.keys.push_back("w" + std::to_string(id));
  w.values = f.W;
  textio::VectorTable h;
  for (auto id : f.col_ids) h.keys.push_back("h" + std::to_string(id));
  h.values = Matrix(f.H.cols(), f.H.rows());
  for (std::size_t k = 0; k < f.H.rows(); ++k)
    for (std::size_t j = 0; j < f.H.cols(); ++j) h.values(j, k) = f.H(k, j);

  textio::write_file_atomic(with_suffix(prefix, ".w"), [&](std::ostream& out) { textio::write_vector_table(out, w); });
  textio::write_file_atomic(with_suffix(prefix, ".h"), [&](std::ostream& out) { textio::write_vector_table(out, h); });
  nlohmann::json meta = {{"kind", "nmf"},
                         {"version", 1},
                         {"rank", f.config.rank},
                         {"alpha", f.config.alpha},
                         {"rho", f.config.rho},
                         {"tol", f.config.tol},
                         {"max_iter", f.config.max_iter},
                         {"seed", f.config.seed},
                         {"iterations", f.loss_trace.size() - 1},
                         {"loss_trace", f.loss_trace}};
  textio::write_file_atomic(with_suffix(prefix, ".meta"), [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
}

Factorization load_factorization(const std::filesystem::path& prefix) {
  auto open = [&](const char* suffix) {
    std::ifstream in(with_suffix(prefix, suffix));
    if (!in) throw Error("cannot open " + with_suffix(prefix, suffix).string());
    return in;
  };
  Factorization f;
  try {
    auto meta_in = open(".meta");
    const auto meta = nlohmann::json::parse(meta_in);
    f.config.rank = meta.at("rank").get<int>();
    f.config.alpha = meta.at("alpha").get<double>();
    f.config.rho = meta.at("rho").get<double>();
    f.config.tol = meta.at("tol").get<double>();
    f.config.max_iter = meta.at("max_iter").get<int>();
    f.config.seed = meta.at("seed").get<std::uint64_t>();
    f.loss_trace = meta.at("loss_trace").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("factorization meta: ") + e.what());
  }
  auto w_in = open(".w");
  auto w = textio::read_vector_table(w_in);
  auto h_in = open(".h");
  auto h = textio::read_vector_table(h_in);
  if (w.values.cols() != static_cast<std::size_t>(f.config.rank) ||
      h.values.cols() != static_cast<std::size_t>(f.config.rank))
    throw ParseError("factorization: factor width does not match rank");
  for (const auto& k : w.keys) f.row_ids.push_back(textio::parse_int(std::string_view(k).substr(1), "W row key"));
  for (const auto& k : h.keys) f.col_ids.push_back(textio::parse_int(std::string_view(k).substr(1), "H column key"));
  f.W = std::move(w.values);
  f.H = Matrix(h.values.cols(), h.values.rows());
  for (std::size_t j = 0; j < h.values.rows(); ++j)
    for (std::size_t k = 0; k < h.values.cols(); ++k) f.H(k, j) = h.values(j, k);
  return f;
}

}  // namespace cqa::mf
