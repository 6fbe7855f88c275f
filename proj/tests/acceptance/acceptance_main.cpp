// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cqa/domains.hpp"
#include "cqa/embeddings.hpp"
#include "cqa/eval.hpp"
#include "cqa/mf.hpp"
#include "cqa/pipeline.hpp"
#include "cqa/postvec.hpp"
#include "cqa/recommend.hpp"
#include "cqa/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cqa;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------- 1: formula oracles ----------

Outcome formula_oracles() {
  Outcome o;
  std::mt19937_64 rng(101);
  const std::vector<std::string> vocab{"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"};
  double worst = 0, worst_trace = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t dim = 2 + trial % 7;
    const auto m = fixture::random_matrix(vocab.size(), dim, rng);
    const embed::EmbeddingTable table(vocab, m);
    std::map<std::string, oracle::Vec> dense;
    for (std::size_t i = 0; i < vocab.size(); ++i) dense[vocab[i]] = oracle::Vec(m.row(i).begin(), m.row(i).end());

    std::vector<std::string> doc, other;
    for (int i = 0; i < 15; ++i) doc.push_back(vocab[rng() % vocab.size()]);
    for (int i = 0; i < 11; ++i) other.push_back(rng() % 5 == 0 ? "oov" : vocab[rng() % vocab.size()]);

    // term frequency
    const auto tf = postvec::term_frequency(doc);
    for (const auto& [w, c] : oracle::term_counts(doc))
      o.require(tf.count(w) && tf.at(w) == static_cast<std::uint64_t>(c), "term frequency mismatch");

    // summarization and cosine
    const auto a = postvec::summarize(doc, table), b = postvec::summarize(other, table);
    const auto ra = oracle::token_mean(doc, dense, dim), rb = oracle::token_mean(other, dense, dim);
    for (std::size_t d = 0; d < dim; ++d) {
      worst = std::max({worst, std::abs(a.values[d] - ra[d]), std::abs(b.values[d] - rb[d])});
    }
    if (!b.is_zero()) worst = std::max(worst, std::abs(postvec::cosine(a.values, b.values) - oracle::cosine(ra, rb)));

    // silhouette on 12 points, 3 clusters
    const auto pts = fixture::random_matrix(12, dim, rng);
    std::vector<int> label(12);
    for (int i = 0; i < 12; ++i) label[i] = static_cast<int>(rng() % 3);
    label[0] = 0;
    label[1] = 1;
    label[2] = 2;
    worst = std::max(worst, std::abs(domains::silhouette(pts, label) - oracle::silhouette(fixture::to_dense(pts), label)));

    // nDCG
    eval::Truth truth;
    std::map<long long, double> ref_truth;
    for (int u = 0; u < 8; ++u)
      if (rng() % 2 || u == 0) {
        const double s = 1 + static_cast<double>(rng() % 15);
        truth[u] = s;
        ref_truth[u] = s;
      }
    std::vector<UserId> ranked(12);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::shuffle(ranked.begin(), ranked.end(), rng);
    const std::vector<long long> ranked_ll(ranked.begin(), ranked.end());
    for (std::size_t n = 1; n <= 5; ++n)
      worst = std::max(worst, std::abs(eval::ndcg_one(ranked, truth, n) - oracle::ndcg(ranked_ll, ref_truth, n)));

    // objective, at random factors and along a factorization trace
    std::vector<mf::VoteMatrix::Vote> votes;
    oracle::Dense v(6, oracle::Vec(5, 0.0));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        if (rng() % 2 || i == j) {
          const long long s = 1 + static_cast<long long>(rng() % 9);
          votes.push_back({static_cast<PostId>(i + 1), static_cast<UserId>(j + 1), s});
          v[i][j] = static_cast<double>(s);
        }
    const auto vm = mf::VoteMatrix::from_votes(votes);
    const double alpha = 0.05 * (trial % 4), rho = 0.25 * (trial % 5);
    const auto w = fixture::random_matrix(6, 2, rng, 0, 1), h = fixture::random_matrix(2, 5, rng, 0, 1);
    worst = std::max(worst, std::abs(mf::objective(vm, w, h, alpha, rho) -
                                     oracle::nmf_objective(v, fixture::to_dense(w), fixture::to_dense(h), alpha, rho)));
    mf::NmfConfig nc;
    nc.rank = 2;
    nc.alpha = alpha;
    nc.rho = rho;
    nc.tol = 0;
    nc.seed = 1000 + trial;
    for (int it = 1; it <= 4; ++it) {
      nc.max_iter = it;
      const auto f = mf::factorize(vm, nc);
      worst_trace = std::max(worst_trace, std::abs(f.loss_trace.back() - oracle::nmf_objective(v, fixture::to_dense(f.W),
                                                                                                fixture::to_dense(f.H),
                                                                                                alpha, rho)));
    }
  }
  o.require(worst < 1e-9, "formula deviation " + std::to_string(worst));
  o.require(worst_trace < 1e-6, "trace deviation " + std::to_string(worst_trace));
  std::ostringstream s;
  s << "25 instances, max |err| " << worst << ", trace " << worst_trace;
  if (o.ok) o.detail = s.str();
  return o;
}

// ---------- 2: NMF ----------

Outcome nmf_checks() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::vector<mf::VoteMatrix::Vote> votes;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 15; ++j)
      if (rng() % 4 == 0 || i % 15 == j) votes.push_back({i + 1, j + 1, 1 + static_cast<long long>(rng() % 20)});
  const auto v = mf::VoteMatrix::from_votes(votes);
  double worst_rise = 0;
  int runs = 0;
  for (double alpha : {0.0, 0.1, 1.0})
    for (double rho : {0.0, 0.5, 1.0})
      for (int rank : {2, 5, 10}) {
        mf::NmfConfig c;
        c.alpha = alpha;
        c.rho = rho;
        c.rank = rank;
        c.tol = 1e-10;
        c.max_iter = 300;
        const auto f = mf::factorize(v, c);
        for (std::size_t i = 1; i < f.loss_trace.size(); ++i)
          worst_rise = std::max(worst_rise, f.loss_trace[i] - f.loss_trace[i - 1]);
        for (double x : f.W.data()) o.require(x >= 0, "negative W entry");
        for (double x : f.H.data()) o.require(x >= 0, "negative H entry");
        ++runs;
      }
  o.require(worst_rise <= 1e-10, "objective rose by " + std::to_string(worst_rise));

  const std::vector<double> u{1, 3, 2, 5, 4}, w{2, 1, 4, 3};
  std::vector<mf::VoteMatrix::Vote> outer;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j)
      outer.push_back({static_cast<PostId>(i + 1), static_cast<UserId>(j + 1), std::llround(u[i] * w[j])});
  mf::NmfConfig c;
  c.rank = 1;
  c.alpha = 0;
  c.tol = 1e-12;
  c.max_iter = 1000;
  const auto f = mf::factorize(mf::VoteMatrix::from_votes(outer), c);
  const auto r = mf::reconstruct(f);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) {
      num += std::pow(r(i, j) - u[i] * w[j], 2);
      den += std::pow(u[i] * w[j], 2);
    }
  const double rel = std::sqrt(num / den);
  o.require(rel < 1e-3, "rank-1 relative error " + std::to_string(rel));
  std::ostringstream s;
  s << runs << " grid runs, max rise " << worst_rise << ", rank-1 error " << rel;
  if (o.ok) o.detail = s.str();
  return o;
}

// ---------- 3: k-means ----------

Outcome kmeans_checks() {
  Outcome o;
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    domains::KMeansConfig c;
    c.k = 3 + trial % 4;
    c.restarts = 1;
    c.seed = 50 + trial;
    const auto r = domains::kmeans(fixture::random_matrix(50, 4, rng), c);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      o.require(r.objective_trace[i] <= r.objective_trace[i - 1], "objective increased");
  }
  int matched = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = fixture::random_matrix(12, 2, rng);
    const double best = oracle::best_two_partition(fixture::to_dense(pts)).first;
    domains::KMeansConfig c;
    c.k = 2;
    c.restarts = 10;
    c.seed = 70 + trial;
    const auto r = domains::kmeans(pts, c);
    matched += std::abs(r.objective - best) <= 1e-9 * std::max(1.0, best);
  }
  o.require(matched == 10, std::to_string(matched) + "/10 partitions matched the exhaustive oracle");
  if (o.ok) o.detail = "monotone traces, 10/10 exhaustive partitions matched";
  return o;
}

// ---------- 4: SGNS gradient ----------

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const std::size_t dim = 16, k = 5;
  double worst = 0;
  for (int pair = 0; pair < 32; ++pair) {
    auto vec = [&] {
      oracle::Vec x(dim);
      for (auto& e : x) e = u(rng);
      return x;
    };
    oracle::Vec center = vec(), context = vec();
    oracle::Dense negs;
    for (std::size_t n = 0; n < k; ++n) negs.push_back(vec());
    const std::vector<std::span<const double>> spans(negs.begin(), negs.end());
    const auto g = embed::sgns_pair_gradient(center, context, spans);
    const double h = 1e-5;
    auto fd = [&](oracle::Vec& x, std::size_t d) {
      const double keep = x[d];
      x[d] = keep + h;
      const double up = oracle::sgns_loss(center, context, negs);
      x[d] = keep - h;
      const double down = oracle::sgns_loss(center, context, negs);
      x[d] = keep;
      return (up - down) / (2 * h);
    };
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
    for (std::size_t d = 0; d < dim; ++d) {
      worst = std::max(worst, rel(g.center[d], fd(center, d)));
      worst = std::max(worst, rel(g.context[d], fd(context, d)));
      for (std::size_t n = 0; n < k; ++n) worst = std::max(worst, rel(g.negatives[n][d], fd(negs[n], d)));
    }
  }
  std::ostringstream s;
  s << "32 pairs, max relative error " << worst;
  o.require(worst < 1e-4, s.str());
  if (o.ok) o.detail = s.str();
  return o;
}

// ---------- pipeline fixture shared by 5, 6, 7 ----------

pipeline::PipelineConfig planted_config(const fs::path& dir, double synonym_rate, const std::string& work_name) {
  synth::SynthConfig sc;
  sc.domains = 4;
  sc.questions = 200;
  sc.queries = 40;
  sc.synonym_rate = synonym_rate;
  const auto world = synth::generate(sc);
  const auto base = dir / ("data-" + std::to_string(static_cast<int>(synonym_rate * 100)));
  fs::create_directories(base);
  if (!fs::exists(base / "Posts.xml")) {
    std::ofstream xml(base / "Posts.xml");
    synth::write_posts_xml(world.posts, xml);
    std::ofstream dict(base / "dictionary.txt");
    for (const auto& w : world.dictionary) dict << w << '\n';
    std::ofstream q(base / "queries.jsonl");
    eval::save_queries(world.queries, q);
  }
  const auto work = dir / work_name;
  fs::create_directories(work);
  auto cfg = pipeline::default_config(1);
  cfg.paths.dump = base / "Posts.xml";
  cfg.paths.dictionary = base / "dictionary.txt";
  cfg.paths.queries = base / "queries.jsonl";
  cfg.paths.corpus = work / "corpus.jsonl";
  cfg.paths.prepared = work / "prepared.jsonl";
  cfg.paths.embeddings = work / "embeddings.txt";
  cfg.paths.vectors = work / "vectors.txt";
  cfg.paths.domains = work / "domains";
  cfg.paths.mf = work / "mf";
  cfg.paths.index = work / "index.jsonl";
  cfg.paths.report = work / "report.json";
  cfg.embed.dim = 32;
  cfg.embed.epochs = 15;
  cfg.embed.min_count = 2;
  cfg.embed.window = 5;
  cfg.embed.subsample_threshold = 0;
  cfg.domains.k = 4;
  cfg.nmf.rank = 8;
  cfg.eval.nmf = cfg.nmf;
  cfg.lambda = 0;
  cfg.eval.folds = 3;
  cfg.eval.lambdas = {0.0, 0.5, 1.0};
  cfg.eval.top = 10;
  return cfg;
}

const std::vector<pipeline::Stage> kFullRun{pipeline::Stage::ingest,  pipeline::Stage::prep, pipeline::Stage::embed,
                                            pipeline::Stage::vectorize, pipeline::Stage::domains,
                                            pipeline::Stage::mf,      pipeline::Stage::index, pipeline::Stage::eval};

bool run(const pipeline::PipelineConfig& cfg, std::string* error) {
  std::ostringstream out, err;
  const int status = pipeline::run_stages(kFullRun, cfg, false, out, err);
  if (status != 0) *error = err.str();
  return status == 0;
}

eval::EvalReport report_of(const pipeline::PipelineConfig& cfg) {
  // re-derive the report numbers from the run's own artifacts
  std::ifstream prepared_in(cfg.paths.prepared), emb_in(cfg.paths.embeddings), q_in(cfg.paths.queries);
  const auto prepared = textprep::load_prepared(prepared_in);
  const auto table = embed::load_embeddings(emb_in);
  const auto model = domains::load_domain_model(cfg.paths.domains);
  const auto queries = eval::load_queries(q_in);
  return eval::run_evaluation(prepared, table, model, queries, cfg.eval);
}

// ---------- 5: planted experts ----------

Outcome planted_experts(const fs::path& dir) {
  Outcome o;
  const auto t0 = Clock::now();
  std::string error;
  const auto canonical = planted_config(dir, 0.0, "planted");
  if (!run(canonical, &error)) {
    o.require(false, "pipeline failed: " + error);
    return o;
  }
  const double pipeline_seconds = seconds_since(t0);
  const auto plain = report_of(canonical);
  // fold means weighted by fold size give the accuracy over all 40 queries
  auto overall = [](const eval::EvalReport& r, std::size_t lambda_pos, bool embedding, std::size_t n) {
    double hits = 0;
    std::size_t total = 0;
    for (const auto& f : r.folds) {
      const auto& b = f.blocks.at(lambda_pos);
      hits += (embedding ? b.embedding : b.jaccard).accuracy.at(n - 1) * static_cast<double>(f.queries);
      total += f.queries;
    }
    return hits / static_cast<double>(total);
  };
  const double acc1 = overall(plain, 0, true, 1);
  o.require(plain.total_queries == 40, "expected 40 queries, got " + std::to_string(plain.total_queries));
  o.require(acc1 == 1.0, "accuracy@1 at lambda 0 = " + std::to_string(acc1));

  const auto synonyms = planted_config(dir, 0.9, "synonyms");
  if (!run(synonyms, &error)) {
    o.require(false, "synonym pipeline failed: " + error);
    return o;
  }
  const auto syn = report_of(synonyms);
  std::ostringstream s;
  s << "accuracy@1 (lambda 0) " << acc1 << "; synonym accuracy@5";
  for (std::size_t l = 0; l < syn.config.lambdas.size(); ++l) {
    const double emb = overall(syn, l, true, 5), jac = overall(syn, l, false, 5);
    s << " [lambda " << syn.config.lambdas[l] << ": embedding " << emb << " vs jaccard " << jac << "]";
    o.require(emb > jac, "embedding accuracy@5 not above jaccard at lambda " + std::to_string(syn.config.lambdas[l]));
  }
  s << "; pipeline " << pipeline_seconds << " s";
  o.require(pipeline_seconds < 60.0, "pipeline took " + std::to_string(pipeline_seconds) + " s");
  if (o.ok) o.detail = s.str();
  return o;
}

// ---------- 6: lambda endpoints ----------

Outcome lambda_endpoints(const fs::path& dir) {
  Outcome o;
  const auto cfg = planted_config(dir, 0.0, "planted");
  std::ifstream in(cfg.paths.index), prepared_in(cfg.paths.prepared);
  const auto base = recommend::load_index(in);
  const auto prepared = textprep::load_prepared(prepared_in);
  const auto f = mf::load_factorization(cfg.paths.mf);
  const auto rec = mf::reconstruct(f);

  // raw per-cell vote totals and reconstructed values, straight from the artifacts
  std::map<std::pair<PostId, UserId>, long long> observed;
  for (const auto& q : prepared.questions)
    for (const auto& a : q.answers) observed[{q.post.id, a.author}] += a.score;
  std::map<PostId, std::size_t> row;
  std::map<UserId, std::size_t> col;
  for (std::size_t i = 0; i < f.row_ids.size(); ++i) row[f.row_ids[i]] = i;
  for (std::size_t j = 0; j < f.col_ids.size(); ++j) col[f.col_ids[j]] = j;

  std::size_t checked = 0;
  for (double lambda : {0.0, 1.0}) {
    const auto index = base.with_lambda(lambda);
    for (const auto& q : index.questions()) {
      auto key = [&](const recommend::IndexedAnswer& a) {
        return lambda == 0.0 ? static_cast<double>(std::max(0LL, observed.at({q.id, a.author})))
                             : rec(row.at(q.id), col.at(a.author));
      };
      auto expected = q.answers;
      std::sort(expected.begin(), expected.end(), [&](const auto& a, const auto& b) {
        const double ka = key(a), kb = key(b);
        return ka != kb ? ka > kb : a.answer_id < b.answer_id;
      });
      for (std::size_t i = 0; i < expected.size(); ++i)
        o.require(expected[i].answer_id == q.answers[i].answer_id,
                  "ranking differs on question " + std::to_string(q.id) + " at lambda " + std::to_string(lambda));
      ++checked;
    }
  }
  if (o.ok) o.detail = std::to_string(checked) + " answer rankings identical at lambda 0 and 1";
  return o;
}

// ---------- 7: determinism ----------

Outcome determinism(const fs::path& dir) {
  Outcome o;
  const auto first = planted_config(dir, 0.0, "planted");
  const auto second = planted_config(dir, 0.0, "planted-again");
  std::string error;
  if (!run(second, &error)) {
    o.require(false, "second run failed: " + error);
    return o;
  }
  const std::vector<std::string> files{"corpus.jsonl",      "prepared.jsonl", "embeddings.txt", "vectors.txt",
                                       "domains.centroids", "domains.assign", "domains.words",  "mf.w",
                                       "mf.h",              "mf.meta",        "index.jsonl",    "report.json",
                                       "report.json.csv"};
  for (const auto& f : files) {
    const auto a = fixture::slurp(first.paths.index.parent_path() / f);
    const auto b = fixture::slurp(second.paths.index.parent_path() / f);
    o.require(!a.empty() && a == b, f + " differs between runs");
  }
  if (o.ok) o.detail = std::to_string(files.size()) + " artifacts byte-identical";
  return o;
}

// ---------- 8: online scaling ----------

double per_query_seconds(const synth::ScalingFixture& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 7; ++rep) {
    std::size_t sink = 0, runs = 0;
    const auto t0 = Clock::now();
    while (seconds_since(t0) < 0.1)
      for (const auto& q : f.queries) {
        sink += recommend::recommend_for_vector(q, f.index, 10).experts.size();
        ++runs;
      }
    best = std::min(best, seconds_since(t0) / static_cast<double>(runs));
    if (sink == 0) return std::numeric_limits<double>::infinity();
  }
  return best;
}

Outcome scaling() {
  Outcome o;
  const auto small = synth::scaling_fixture(100, 50, 64, 808);
  const auto large = synth::scaling_fixture(200, 50, 64, 808);
  const double t100 = per_query_seconds(small), t200 = per_query_seconds(large);
  const double ratio = t200 / t100;
  o.require(ratio <= 3.0, "latency ratio " + std::to_string(ratio));
  std::ostringstream s;
  s << "per-query " << t100 * 1e6 << " us -> " << t200 * 1e6 << " us, ratio " << ratio;
  if (o.ok) o.detail = s.str();
  return o;
}

}  // namespace

int main() {
  fixture::TempDir dir;
  int failures = 0;
  auto report = [&](int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double took = seconds_since(t0);
    if (limit_seconds > 0 && took >= limit_seconds) {
      if (o.ok) o.detail = "took " + std::to_string(took) + " s";
      o.ok = false;
    }
    failures += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << id << ". " << name << "  (" << o.detail << "; "
              << std::round(took * 100) / 100 << " s)" << std::endl;
  };
  report(1, "formula oracles", 10, formula_oracles);
  report(2, "NMF monotone objective and rank-1 recovery", 30, nmf_checks);
  report(3, "k-means monotone and exhaustive 2-partition", 10, kmeans_checks);
  report(4, "SGNS gradient check", 10, gradient_check);
  report(5, "planted-expert recovery and synonym ordering", 0, [&] { return planted_experts(dir.path()); });
  report(6, "lambda endpoint rankings", 0, [&] { return lambda_endpoints(dir.path()); });
  report(7, "determinism across runs", 0, [&] { return determinism(dir.path()); });
  report(8, "online scaling 100 -> 200 domains", 0, scaling);
  return failures == 0 ? 0 : 1;
}
