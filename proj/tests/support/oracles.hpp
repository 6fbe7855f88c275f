// Brute-force reference implementations written directly from the textbook
// definitions. They share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Dense = std::vector<Vec>;  // row-major, rows of equal length

inline double cosine(const Vec& a, const Vec& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(ab / (std::sqrt(aa) * std::sqrt(bb)));
}

inline std::map<std::string, int> term_counts(const std::vector<std::string>& tokens) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    int c = 0;
    for (std::size_t j = 0; j < tokens.size(); ++j) c += tokens[j] == tokens[i];
    out[tokens[i]] = c;
  }
  return out;
}

// Mean of the in-vocabulary token vectors, one term per token occurrence.
inline Vec token_mean(const std::vector<std::string>& tokens, const std::map<std::string, Vec>& table,
                      std::size_t dim) {
  Vec sum(dim, 0.0);
  int n = 0;
  for (const auto& t : tokens) {
    auto it = table.find(t);
    if (it == table.end()) continue;
    for (std::size_t d = 0; d < dim; ++d) sum[d] += it->second[d];
    ++n;
  }
  if (n > 0)
    for (auto& x : sum) x /= n;
  return sum;
}

inline double euclid(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double silhouette(const Dense& x, const std::vector<int>& label) {
  const int k = *std::max_element(label.begin(), label.end()) + 1;
  double total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<int> cnt(k, 0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j == i) continue;
      sum[label[j]] += euclid(x[i], x[j]);
      cnt[label[j]] += 1;
    }
    if (cnt[label[i]] == 0) continue;  // singleton
    const double a = sum[label[i]] / cnt[label[i]];
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != label[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    const double m = std::max(a, b);
    total += m == 0 ? 0.0 : (b - a) / m;
  }
  return total / static_cast<double>(x.size());
}

inline double sse(const Dense& x, const std::vector<int>& label, int k) {
  const std::size_t dim = x[0].size();
  Dense c(k, Vec(dim, 0.0));
  std::vector<int> n(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) c[label[i]][d] += x[i][d];
    n[label[i]]++;
  }
  for (int j = 0; j < k; ++j)
    for (auto& v : c[j]) v /= std::max(1, n[j]);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = euclid(x[i], c[label[i]]);
    s += e * e;
  }
  return s;
}

// Minimum-SSE partition into two non-empty groups by enumeration.
inline std::pair<double, std::vector<int>> best_two_partition(const Dense& x) {
  const std::size_t n = x.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_label;
  for (std::uint64_t mask = 1; mask < (1ULL << (n - 1)); ++mask) {  // point n-1 always in group 0
    std::vector<int> label(n);
    for (std::size_t i = 0; i + 1 < n; ++i) label[i] = (mask >> i) & 1;
    label[n - 1] = 0;
    const double s = sse(x, label, 2);
    if (s < best) {
      best = s;
      best_label = label;
    }
  }
  return {best, best_label};
}

inline double ndcg(const std::vector<long long>& recommended, const std::map<long long, double>& truth, std::size_t n) {
  std::vector<double> rel;
  for (const auto& kv : truth) rel.push_back(kv.second > 0 ? kv.second : 0.0);
  std::sort(rel.rbegin(), rel.rend());
  double idcg = 0, dcg = 0;
  for (std::size_t i = 0; i < n && i < rel.size(); ++i) idcg += rel[i] / std::log2(i + 2.0);
  for (std::size_t i = 0; i < n && i < recommended.size(); ++i) {
    auto it = truth.find(recommended[i]);
    if (it != truth.end() && it->second > 0) dcg += it->second / std::log2(i + 2.0);
  }
  return dcg / idcg;
}

inline Dense product(const Dense& w, const Dense& h) {
  Dense out(w.size(), Vec(h[0].size(), 0.0));
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < h[0].size(); ++j)
      for (std::size_t k = 0; k < h.size(); ++k) out[i][j] += w[i][k] * h[k][j];
  return out;
}

// ½‖V−WH‖²_F + αρ(‖W‖₁+‖H‖₁) + α(1−ρ)/2 (‖W‖²_F+‖H‖²_F), every cell counted.
inline double nmf_objective(const Dense& v, const Dense& w, const Dense& h, double alpha, double rho) {
  const Dense wh = product(w, h);
  double fit = 0, l1 = 0, l2 = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v[0].size(); ++j) fit += (v[i][j] - wh[i][j]) * (v[i][j] - wh[i][j]);
  for (const auto* m : {&w, &h})
    for (const auto& row : *m)
      for (double x : row) {
        l1 += std::abs(x);
        l2 += x * x;
      }
  return 0.5 * fit + alpha * rho * l1 + 0.5 * alpha * (1 - rho) * l2;
}

// Projected gradient descent with Armijo backtracking on the non-negative
// orthant, where the l1 term is linear. Best objective over `restarts`.
inline double nmf_projected_gradient(const Dense& v, std::size_t rank, double alpha, double rho, int restarts,
                                     std::uint64_t seed, int iters = 3000) {
  const std::size_t n = v.size(), m = v[0].size();
  double mean = 0;
  for (const auto& row : v)
    for (double x : row) mean += x;
  mean /= static_cast<double>(n * m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::sqrt(mean / rank));
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Dense w(n, Vec(rank)), h(rank, Vec(m));
    for (auto& row : w)
      for (auto& x : row) x = u(rng);
    for (auto& row : h)
      for (auto& x : row) x = u(rng);
    double j = nmf_objective(v, w, h, alpha, rho);
    double step = 1.0;
    for (int it = 0; it < iters; ++it) {
      const Dense wh = product(w, h);
      Dense gw(n, Vec(rank, 0.0)), gh(rank, Vec(m, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < m; ++c) {
          const double e = wh[i][c] - v[i][c];
          for (std::size_t k = 0; k < rank; ++k) {
            gw[i][k] += e * h[k][c];
            gh[k][c] += e * w[i][k];
          }
        }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < rank; ++k) gw[i][k] += alpha * rho + alpha * (1 - rho) * w[i][k];
      for (std::size_t k = 0; k < rank; ++k)
        for (std::size_t c = 0; c < m; ++c) gh[k][c] += alpha * rho + alpha * (1 - rho) * h[k][c];
      step *= 2.0;
      bool moved = false;
      while (step > 1e-14) {
        Dense w2 = w, h2 = h;
        double decrease = 0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = 0; k < rank; ++k) {
            w2[i][k] = std::max(0.0, w[i][k] - step * gw[i][k]);
            decrease += gw[i][k] * (w[i][k] - w2[i][k]);
          }
        for (std::size_t k = 0; k < rank; ++k)
          for (std::size_t c = 0; c < m; ++c) {
            h2[k][c] = std::max(0.0, h[k][c] - step * gh[k][c]);
            decrease += gh[k][c] * (h[k][c] - h2[k][c]);
          }
        const double j2 = nmf_objective(v, w2, h2, alpha, rho);
        if (j2 <= j - 1e-4 * decrease) {
          w = std::move(w2);
          h = std::move(h2);
          moved = j - j2 > 1e-13 * std::max(1.0, j);
          j = j2;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    best = std::min(best, j);
  }
  return best;
}

// Negative-sampling loss for one pair, evaluated from its definition.
inline double sgns_loss(const Vec& center, const Vec& context, const Dense& negatives) {
  auto dotp = [](const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  double loss = -std::log(sig(dotp(context, center)));
  for (const auto& n : negatives) loss -= std::log(sig(-dotp(n, center)));
  return loss;
}

}  // namespace oracle
