#include "cqa/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "cqa/error.hpp"
#include "cqa/textio.hpp"

namespace cqa::embed {

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, Matrix vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (words_.size() != vectors_.rows())
    throw InvalidArgument("embedding table: word count does not match row count");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (!index_.emplace(words_[i], i).second)
      throw InvalidArgument("embedding table: duplicate word '" + words_[i] + "'");
}

std::optional<std::size_t> EmbeddingTable::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const double>> lookup(const EmbeddingTable& table, const std::string& word) {
  if (auto i = table.index_of(word)) return table.row(*i);
  return std::nullopt;
}

EmbeddingTable restrict_vocabulary(const EmbeddingTable& table, const std::set<std::string>& dictionary) {
  if (dictionary.empty()) throw InvalidArgument("restrict_vocabulary: dictionary is empty");
  std::vector<std::string> words;
  Matrix vectors;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!dictionary.contains(table.words()[i])) continue;
    words.push_back(table.words()[i]);
    vectors.append_row(table.row(i));
  }
  if (words.empty()) throw InvalidArgument("restrict_vocabulary: vocabulary and dictionary are disjoint");
  return EmbeddingTable(std::move(words), std::move(vectors));
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingTable& table,
                                                              const std::string& word, std::size_t k) {
  auto qi = table.index_of(word);
  if (!qi) throw InvalidArgument("nearest_neighbors: '" + word + "' is not in the vocabulary");
  const auto q = table.row(*qi);
  const double qn = norm2(q);
  std::vector<std::pair<std::string, double>> scored;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == *qi) continue;
    const double n = norm2(table.row(i));
    if (n == 0.0 || qn == 0.0) continue;
    scored.emplace_back(table.words()[i], dot(q, table.row(i)) / (qn * n));
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  scored.resize(keep);
  return scored;
}

void save_embeddings(const EmbeddingTable& table, std::ostream& out) {
  textio::write_vector_table(out, {table.words(), table.vectors()});
}

EmbeddingTable load_embeddings(std::istream& in) {
  auto t = textio::read_vector_table(in);
  try {
    return EmbeddingTable(std::move(t.keys), std::move(t.values));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

void SgnsConfig::validate() const {
  if (dim < 1 || window < 1 || negatives < 1 || epochs < 1 || min_count < 1 || threads < 1)
    throw InvalidArgument("sgns: dim, window, negatives, epochs, min_count and threads must be >= 1");
  if (!(initial_learning_rate > 0.0)) throw InvalidArgument("sgns: learning rate must be > 0");
  if (!(subsample_threshold >= 0.0)) throw InvalidArgument("sgns: subsample threshold must be >= 0");
}

namespace {

// -log σ(x), computed without overflow.
double neg_log_sigmoid(double x) { return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Loss of one pair and the scalar coefficients c such that
// d loss / d context = c_o * center, d loss / d negative_n = c_n * center and
// d loss / d center = c_o * context + Σ c_n * negative_n.
template <typename Dot>
double pair_terms(Dot&& dot_with_center, std::size_t negatives, double& context_coeff,
                  std::span<double> negative_coeff) {
  const double xo = dot_with_center(0, true);
  double loss = neg_log_sigmoid(xo);
  context_coeff = sigmoid(xo) - 1.0;
  for (std::size_t n = 0; n < negatives; ++n) {
    const double xn = dot_with_center(n, false);
    loss += neg_log_sigmoid(-xn);
    negative_coeff[n] = sigmoid(xn);
  }
  return loss;
}

}  // namespace

PairGradient sgns_pair_gradient(std::span<const double> center, std::span<const double> context,
                                std::span<const std::span<const double>> negatives) {
  const std::size_t dim = center.size();
  if (context.size() != dim) throw InvalidArgument("sgns_pair_gradient: dimension mismatch");
  for (const auto& n : negatives)
    if (n.size() != dim) throw InvalidArgument("sgns_pair_gradient: dimension mismatch");

  double co = 0.0;
  std::vector<double> cn(negatives.size());
  PairGradient g;
  g.loss = pair_terms(
      [&](std::size_t n, bool positive) { return dot(center, positive ? context : negatives[n]); },
      negatives.size(), co, cn);
  g.center.assign(dim, 0.0);
  g.context.assign(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    g.center[d] += co * context[d];
    g.context[d] = co * center[d];
  }
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    std::vector<double> gn(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      g.center[d] += cn[n] * negatives[n][d];
      gn[d] = cn[n] * center[d];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

namespace {

struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> sentences, int min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : counts)
    if (c >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(w, c);
  // Stable sort over the lexicographic map order gives (count desc, word asc).
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [w, c] : kept) {
    v.words.push_back(w);
    v.counts.push_back(c);
    v.total += c;
  }
  return v;
}

// Relaxed-atomic access when several threads share the weights.
template <bool Shared>
struct Weights {
  static double load(const double& x) {
    if constexpr (Shared)
      return std::atomic_ref<const double>(x).load(std::memory_order_relaxed);
    else
      return x;
  }
  static void add(double& x, double delta) {
    if constexpr (Shared) {
      std::atomic_ref<double> r(x);
      r.store(r.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
    } else {
      x += delta;
    }
  }
};

struct Shard {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::uint64_t seed = 0;
};

struct TrainState {
  const SgnsConfig& cfg;
  const Vocabulary& vocab;
  const std::vector<std::vector<std::uint32_t>>& ids;
  const std::vector<double>& noise_cdf;
  Matrix& input;
  Matrix& output;
  std::atomic<std::uint64_t> processed{0};
  std::uint64_t budget = 0;  // epochs * total words
};

struct EpochStats {
  double loss = 0.0;
  std::uint64_t pairs = 0;
};

template <bool Shared>
EpochStats run_shard(TrainState& st, const Shard& shard, std::mt19937_64& rng) {
  using W = Weights<Shared>;
  const auto& cfg = st.cfg;
  const std::size_t dim = static_cast<std::size_t>(cfg.dim);
  const std::size_t neg = static_cast<std::size_t>(cfg.negatives);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> shrink(0, cfg.window - 1);
  std::vector<double> grad_center(dim);
  std::vector<double> neg_coeff(neg);
  std::vector<std::uint32_t> neg_ids(neg);
  std::vector<std::uint32_t> kept;
  EpochStats stats;

  const double threshold = cfg.subsample_threshold * static_cast<double>(st.vocab.total);
  auto draw_noise = [&]() {
    const double u = unit(rng);
    auto it = std::upper_bound(st.noise_cdf.begin(), st.noise_cdf.end(), u);
    return static_cast<std::uint32_t>(std::min<std::size_t>(
        static_cast<std::size_t>(it - st.noise_cdf.begin()), st.noise_cdf.size() - 1));
  };

  for (std::size_t s = shard.begin; s < shard.end; ++s) {
    const auto& sentence = st.ids[s];
    const std::uint64_t done = st.processed.fetch_add(sentence.size(), std::memory_order_relaxed);
    const double progress = static_cast<double>(done) / static_cast<double>(st.budget + 1);
    const double lr = cfg.initial_learning_rate * std::max(1e-4, 1.0 - progress);

    kept.clear();
    for (auto w : sentence) {
      if (threshold > 0.0) {
        const double f = static_cast<double>(st.vocab.counts[w]);
        const double keep = (std::sqrt(f / threshold) + 1.0) * threshold / f;
        if (keep < unit(rng)) continue;
      }
      kept.push_back(w);
    }

    for (std::size_t pos = 0; pos < kept.size(); ++pos) {
      const int reach = cfg.window - shrink(rng);
      const std::size_t lo = pos >= static_cast<std::size_t>(reach) ? pos - reach : 0;
      const std::size_t hi = std::min(kept.size() - 1, pos + static_cast<std::size_t>(reach));
      const auto center_row = st.input.row(kept[pos]);
      for (std::size_t c = lo; c <= hi; ++c) {
        if (c == pos) continue;
        const std::uint32_t ctx = kept[c];
        std::size_t n_used = 0;
        for (std::size_t n = 0; n < neg; ++n) {
          const auto id = draw_noise();
          if (id != ctx) neg_ids[n_used++] = id;
        }
        auto dot_center = [&](std::size_t n, bool positive) {
          const auto other = st.output.row(positive ? ctx : neg_ids[n]);
          double acc = 0.0;
          for (std::size_t d = 0; d < dim; ++d) acc += W::load(center_row[d]) * W::load(other[d]);
          return acc;
        };
        double ctx_coeff = 0.0;
        stats.loss += pair_terms(dot_center, n_used, ctx_coeff, neg_coeff);
        ++stats.pairs;

        std::fill(grad_center.begin(), grad_center.end(), 0.0);
        auto apply_output = [&](std::uint32_t id, double coeff) {
          auto row = st.output.row(id);
          for (std::size_t d = 0; d < dim; ++d) {
            grad_center[d] += coeff * W::load(row[d]);
            W::add(row[d], -lr * coeff * W::load(center_row[d]));
          }
        };
        apply_output(ctx, ctx_coeff);
        for (std::size_t n = 0; n < n_used; ++n) apply_output(neg_ids[n], neg_coeff[n]);
        auto center_mut = st.input.row(kept[pos]);
        for (std::size_t d = 0; d < dim; ++d) W::add(center_mut[d], -lr * grad_center[d]);
      }
    }
  }
  return stats;
}

}  // namespace

EmbeddingTable train_sgns(std::span<const std::vector<std::string>> sentences, const SgnsConfig& cfg,
                          TrainingReport* report) {
  cfg.validate();
  const Vocabulary vocab = build_vocabulary(sentences, cfg.min_count);
  if (vocab.words.empty()) throw Error("no trainable vocabulary");

  std::unordered_map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < vocab.words.size(); ++i) index.emplace(vocab.words[i], static_cast<std::uint32_t>(i));
  std::vector<std::vector<std::uint32_t>> ids;
  ids.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<std::uint32_t> row;
    for (const auto& w : s)
      if (auto it = index.find(w); it != index.end()) row.push_back(it->second);
    if (!row.empty()) ids.push_back(std::move(row));
  }

  std::vector<double> noise_cdf(vocab.words.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab.counts.size(); ++i) {
    acc += std::pow(static_cast<double>(vocab.counts[i]), 0.75);
    noise_cdf[i] = acc;
  }
  for (auto& x : noise_cdf) x /= acc;

  const std::size_t dim = static_cast<std::size_t>(cfg.dim);
  Matrix input(vocab.words.size(), dim);
  Matrix output(vocab.words.size(), dim, 0.0);
  std::mt19937_64 init_rng(cfg.seed);
  std::uniform_real_distribution<double> init(-0.5 / cfg.dim, 0.5 / cfg.dim);
  for (auto& x : input.data()) {
    do {
      x = init(init_rng);
    } while (x == 0.0);
  }

  TrainState st{cfg, vocab, ids, noise_cdf, input, output};
  st.budget = static_cast<std::uint64_t>(cfg.epochs) * vocab.total;

  TrainingReport rep;
  rep.vocab_size = vocab.words.size();
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), std::max<std::size_t>(ids.size(), 1));
  std::vector<std::mt19937_64> rngs;
  for (std::size_t t = 0; t < threads; ++t) rngs.emplace_back(cfg.seed * 0x9E3779B97F4A7C15ULL + 1 + t);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochStats total;
    if (threads == 1) {
      total = run_shard<false>(st, {0, ids.size(), 0}, rngs[0]);
    } else {
      std::vector<EpochStats> partial(threads);
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        const Shard shard{ids.size() * t / threads, ids.size() * (t + 1) / threads, t};
        pool.emplace_back([&, shard, t] { partial[t] = run_shard<true>(st, shard, rngs[t]); });
      }
      for (auto& th : pool) th.join();
      for (const auto& p : partial) {
        total.loss += p.loss;
        total.pairs += p.pairs;
      }
    }
    rep.pairs += total.pairs;
    rep.epoch_loss.push_back(total.pairs ? total.loss / static_cast<double>(total.pairs) : 0.0);
  }
  if (report) *report = std::move(rep);
  return EmbeddingTable(vocab.words, std::move(input));
}

}  // namespace cqa::embed
