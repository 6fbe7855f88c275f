#include "cqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cqa/error.hpp"
#include "cqa/recommend.hpp"
#include "cqa/textio.hpp"

namespace cqa::eval {

using nlohmann::json;

HoldOut hold_out(const ingest::Corpus& corpus, std::size_t count, std::uint64_t seed) {
  if (count >= corpus.questions.size())
    throw InvalidArgument("hold_out: cannot hold out " + std::to_string(count) + " of " +
                          std::to_string(corpus.questions.size()) + " questions");
  std::vector<std::size_t> order(corpus.questions.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());

  HoldOut out;
  std::set<PostId> ids;
  for (auto i : order) {
    const auto& q = corpus.questions[i];
    EvalQuery eq;
    eq.question_id = q.question.id;
    eq.text = q.question.title + "\n" + q.question.body;
    for (const auto& a : q.answers) {
      const auto user = *a.owner_user_id;
      auto [it, fresh] = eq.truth.emplace(user, static_cast<double>(a.score));
      if (!fresh) it->second = std::max(it->second, static_cast<double>(a.score));
    }
    ids.insert(eq.question_id);
    out.queries.push_back(std::move(eq));
  }
  out.corpus = ingest::without_questions(corpus, ids);
  return out;
}

void save_queries(std::span<const EvalQuery> queries, std::ostream& out) {
  for (const auto& q : queries) {
    json truth = json::array();
    for (const auto& [user, score] : q.truth) truth.push_back({{"user_id", user}, {"score", score}});
    out << json{{"question_id", q.question_id}, {"text", q.text}, {"truth", truth}}.dump() << '\n';
  }
}

std::vector<EvalQuery> load_queries(std::istream& in) {
  std::vector<EvalQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto rec = json::parse(line);
      EvalQuery q;
      q.question_id = rec.at("question_id").get<PostId>();
      q.text = rec.at("text").get<std::string>();
      for (const auto& t : rec.at("truth")) q.truth[t.at("user_id").get<UserId>()] = t.at("score").get<double>();
      if (q.truth.empty()) throw ParseError("query without ground truth");
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ParseError("queries line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("queries line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 1) throw InvalidArgument("kfold_split: folds must be >= 1");
  if (n < static_cast<std::size_t>(folds)) throw InvalidArgument("kfold_split: fewer queries than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto f = static_cast<std::size_t>(folds);
  std::vector<std::vector<std::size_t>> out(f);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < f; ++i) {
    const std::size_t size = n / f + (i < n % f ? 1 : 0);
    out[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

namespace {

void check_shapes(std::size_t a, std::size_t b, std::size_t n) {
  if (n == 0) throw InvalidArgument("metric cutoff N must be >= 1");
  if (a != b) throw InvalidArgument("recommendation and truth lists differ in length");
}

}  // namespace

double accuracy_at_n(std::span<const std::vector<UserId>> recommended, std::span<const Truth> truth, std::size_t n) {
  check_shapes(recommended.size(), truth.size(), n);
  if (recommended.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < recommended.size(); ++q) {
    const auto& r = recommended[q];
    const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min(n, r.size()));
    if (std::any_of(r.begin(), end, [&](UserId u) { return truth[q].contains(u); })) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(recommended.size());
}

double ndcg_one(std::span<const UserId> recommended, const Truth& truth, std::size_t n) {
  std::vector<double> ideal;
  for (const auto& [user, score] : truth) ideal.push_back(std::max(0.0, score));
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(n, ideal.size()); ++i) idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  if (idcg == 0.0) return std::nan("");
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(n, recommended.size()); ++i) {
    auto it = truth.find(recommended[i]);
    if (it != truth.end()) dcg += std::max(0.0, it->second) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double ndcg_at_n(std::span<const std::vector<UserId>> recommended, std::span<const Truth> truth, std::size_t n) {
  check_shapes(recommended.size(), truth.size(), n);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t q = 0; q < recommended.size(); ++q) {
    const double v = ndcg_one(recommended[q], truth[q], n);
    if (std::isnan(v)) continue;
    sum += v;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

namespace {

template <class Recommend>
MethodBlock score_method(std::span<const EvalQuery> queries, std::span<const std::size_t> members,
                         std::size_t top, Recommend&& recommend) {
  MethodBlock block;
  std::vector<std::vector<UserId>> recs;
  std::vector<Truth> truth;
  for (auto qi : members) {
    std::vector<UserId> users;
    try {
      for (const auto& e : recommend(queries[qi].text).experts) users.push_back(e.user_id);
    } catch (const Error&) {
      ++block.no_terms;  // counted as a miss
    }
    recs.push_back(std::move(users));
    truth.push_back(queries[qi].truth);
  }
  for (std::size_t n = 1; n <= top; ++n) {
    block.accuracy.push_back(accuracy_at_n(recs, truth, n));
    block.ndcg.push_back(ndcg_at_n(recs, truth, n));
  }
  return block;
}

textprep::PreparedCorpus excluding(const textprep::PreparedCorpus& corpus, const std::set<PostId>& ids) {
  textprep::PreparedCorpus out;
  out.config = corpus.config;
  for (const auto& q : corpus.questions)
    if (!ids.contains(q.post.id)) out.questions.push_back(q);
  return out;
}

Summary summarize_folds(const std::vector<const std::vector<double>*>& series) {
  Summary s;
  if (series.empty()) return s;
  const std::size_t len = series.front()->size();
  s.mean.assign(len, 0.0);
  s.stddev.assign(len, 0.0);
  const auto k = static_cast<double>(series.size());
  for (const auto* v : series)
    for (std::size_t i = 0; i < len; ++i) s.mean[i] += (*v)[i] / k;
  for (const auto* v : series)
    for (std::size_t i = 0; i < len; ++i) s.stddev[i] += ((*v)[i] - s.mean[i]) * ((*v)[i] - s.mean[i]) / k;
  for (auto& x : s.stddev) x = std::sqrt(x);
  return s;
}

}  // namespace

EvalReport run_evaluation(const textprep::PreparedCorpus& corpus, const embed::EmbeddingTable& table,
                          const domains::DomainModel& model, std::span<const EvalQuery> queries,
                          const EvalConfig& cfg) {
  if (cfg.top == 0) throw InvalidArgument("eval: top must be >= 1");
  if (cfg.lambdas.empty()) throw InvalidArgument("eval: lambda grid is empty");
  for (double l : cfg.lambdas)
    if (!(l >= 0.0 && l <= 1.0)) throw InvalidArgument("eval: lambda must lie in [0, 1]");

  EvalReport report;
  report.config = cfg;
  report.total_queries = queries.size();
  const auto folds = kfold_split(queries.size(), cfg.folds, cfg.seed);

  std::set<PostId> corpus_ids;
  for (const auto& q : corpus.questions) corpus_ids.insert(q.post.id);

  std::optional<recommend::ExpertIndex> shared;  // reused while no fold touches the corpus
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::set<PostId> excluded;
    for (auto qi : folds[f])
      if (corpus_ids.contains(queries[qi].question_id)) excluded.insert(queries[qi].question_id);

    recommend::ExpertIndex base;
    if (excluded.empty() && shared) {
      base = *shared;
    } else {
      const auto fold_corpus = excluding(corpus, excluded);
      const auto votes = mf::build_vote_matrix(fold_corpus);
      const auto factors = mf::factorize(votes, mf::clamp_rank(cfg.nmf, votes));
      base = recommend::build_index(fold_corpus, table, model, factors, cfg.lambdas.front());
      if (excluded.empty()) shared = base;
    }

    FoldResult fr;
    fr.fold = static_cast<int>(f);
    fr.queries = folds[f].size();
    const auto authors = base.authors();
    for (auto qi : folds[f]) {
      const auto& truth = queries[qi].truth;
      if (std::none_of(truth.begin(), truth.end(), [&](const auto& t) { return authors.contains(t.first); }))
        ++fr.unreachable;
    }
    report.unreachable += fr.unreachable;

    for (double lambda : cfg.lambdas) {
      const auto index = base.with_lambda(lambda);
      LambdaBlock block;
      block.lambda = lambda;
      block.embedding = score_method(queries, folds[f], cfg.top, [&](const std::string& text) {
        return recommend::recommend_experts(text, index, table, cfg.top);
      });
      block.jaccard = score_method(queries, folds[f], cfg.top, [&](const std::string& text) {
        return recommend::jaccard_recommend(text, index, cfg.top);
      });
      fr.blocks.push_back(std::move(block));
    }
    report.folds.push_back(std::move(fr));
  }

  report.reachable_upper_bound =
      queries.empty() ? 0.0
                      : static_cast<double>(queries.size() - report.unreachable) / static_cast<double>(queries.size());

  for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
    const std::pair<const char*, MethodBlock LambdaBlock::*> methods[] = {{"embedding", &LambdaBlock::embedding},
                                                                         {"jaccard", &LambdaBlock::jaccard}};
    for (const auto& [name, member] : methods) {
      std::vector<const std::vector<double>*> acc, ndcg;
      for (const auto& fr : report.folds) {
        acc.push_back(&(fr.blocks[li].*member).accuracy);
        ndcg.push_back(&(fr.blocks[li].*member).ndcg);
      }
      report.aggregate[{li, std::string(name) + "_accuracy"}] = summarize_folds(acc);
      report.aggregate[{li, std::string(name) + "_ndcg"}] = summarize_folds(ndcg);
    }
  }
  return report;
}

namespace {

json method_json(const MethodBlock& m) {
  return {{"accuracy", m.accuracy}, {"ndcg", m.ndcg}, {"no_terms", m.no_terms}};
}

}  // namespace

void write_report_json(const EvalReport& report, std::ostream& out) {
  const auto& c = report.config;
  json doc;
  doc["config"] = {{"folds", c.folds},
                   {"lambdas", c.lambdas},
                   {"top", c.top},
                   {"seed", c.seed},
                   {"nmf",
                    {{"rank", c.nmf.rank},
                     {"alpha", c.nmf.alpha},
                     {"rho", c.nmf.rho},
                     {"tol", c.nmf.tol},
                     {"max_iter", c.nmf.max_iter},
                     {"seed", c.nmf.seed}}}};
  doc["total_queries"] = report.total_queries;
  doc["unreachable"] = report.unreachable;
  doc["reachable_upper_bound"] = report.reachable_upper_bound;
  json folds = json::array();
  for (const auto& fr : report.folds) {
    json blocks = json::array();
    for (const auto& b : fr.blocks)
      blocks.push_back({{"lambda", b.lambda}, {"embedding", method_json(b.embedding)}, {"jaccard", method_json(b.jaccard)}});
    folds.push_back({{"fold", fr.fold}, {"queries", fr.queries}, {"unreachable", fr.unreachable}, {"blocks", blocks}});
  }
  doc["folds"] = folds;
  json agg = json::array();
  for (const auto& [key, s] : report.aggregate)
    agg.push_back({{"lambda", c.lambdas[key.first]}, {"metric", key.second}, {"mean", s.mean}, {"stddev", s.stddev}});
  doc["aggregate"] = agg;
  out << doc.dump(2) << '\n';
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "fold,lambda,N,metric,value\n";
  for (const auto& fr : report.folds)
    for (const auto& b : fr.blocks) {
      const std::pair<const char*, const MethodBlock*> methods[] = {{"embedding", &b.embedding}, {"jaccard", &b.jaccard}};
      for (const auto& [name, m] : methods)
        for (std::size_t i = 0; i < m->accuracy.size(); ++i) {
          out << fr.fold << ',' << textio::format_double(b.lambda) << ',' << i + 1 << ',' << name << "_accuracy,"
              << textio::format_double(m->accuracy[i]) << '\n';
          out << fr.fold << ',' << textio::format_double(b.lambda) << ',' << i + 1 << ',' << name << "_ndcg,"
              << textio::format_double(m->ndcg[i]) << '\n';
        }
    }
}

}  // namespace cqa::eval
