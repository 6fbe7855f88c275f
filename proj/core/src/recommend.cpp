#include "cqa/recommend.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cqa/error.hpp"

namespace cqa::recommend {

using nlohmann::json;

ExpertIndex::ExpertIndex(Matrix centroids, std::vector<std::vector<std::string>> domain_words,
                         std::vector<IndexedQuestion> questions, textprep::FilterConfig filter, double lambda)
    : centroids_(std::move(centroids)),
      domain_words_(std::move(domain_words)),
      filter_(std::move(filter)),
      lambda_(lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("expert index: lambda must lie in [0, 1]");
  domain_words_.resize(centroids_.rows());
  for (auto& words : domain_words_) {
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
  }
  by_domain_.resize(centroids_.rows());
  for (auto& q : questions) {
    if (q.answers.empty()) continue;
    if (q.domain < 0 || static_cast<std::size_t>(q.domain) >= centroids_.rows())
      throw InvalidArgument("expert index: question " + std::to_string(q.id) + " has an unknown domain");
    if (norm2(q.vector) == 0.0)
      throw InvalidArgument("expert index: question " + std::to_string(q.id) + " has a zero vector");
    std::sort(q.token_set.begin(), q.token_set.end());
    q.token_set.erase(std::unique(q.token_set.begin(), q.token_set.end()), q.token_set.end());
    by_domain_[static_cast<std::size_t>(q.domain)].push_back(questions_.size());
    questions_.push_back(std::move(q));
  }
  reblend();
}

void ExpertIndex::reblend() {
  for (auto& q : questions_) {
    for (auto& a : q.answers) a.blended = (1.0 - lambda_) * a.observed_norm + lambda_ * a.reconstructed_norm;
    std::sort(q.answers.begin(), q.answers.end(), [](const IndexedAnswer& x, const IndexedAnswer& y) {
      return x.blended != y.blended ? x.blended > y.blended : x.answer_id < y.answer_id;
    });
  }
}

ExpertIndex ExpertIndex::with_lambda(double lambda) const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("expert index: lambda must lie in [0, 1]");
  ExpertIndex copy = *this;
  copy.lambda_ = lambda;
  copy.reblend();
  return copy;
}

std::set<UserId> ExpertIndex::authors() const {
  std::set<UserId> out;
  for (const auto& q : questions_)
    for (const auto& a : q.answers) out.insert(a.author);
  return out;
}

ExpertIndex build_index(const textprep::PreparedCorpus& corpus, const embed::EmbeddingTable& table,
                        const domains::DomainModel& model, const mf::Factorization& factorization,
                        double lambda) {
  const auto votes = mf::build_vote_matrix(corpus);
  if (votes.row_ids() != factorization.row_ids || votes.col_ids() != factorization.col_ids)
    throw InvalidArgument("build_index: factorization was computed on a different corpus");
  const mf::BlendedScores scores(votes, mf::reconstruct(factorization), lambda);

  std::vector<std::vector<std::string>> words(static_cast<std::size_t>(model.k));
  for (const auto& [w, c] : model.word_assignment) words.at(static_cast<std::size_t>(c)).push_back(w);

  std::vector<IndexedQuestion> questions;
  for (const auto& pq : corpus.questions) {
    auto v = postvec::summarize(pq.post.tokens, table);
    if (v.is_zero()) continue;
    IndexedQuestion q;
    q.id = pq.post.id;
    auto it = model.question_assignment.find(q.id);
    q.domain = it != model.question_assignment.end()
                   ? it->second
                   : static_cast<int>(domains::nearest_centroid(v.values, model.centroids));
    q.vector = std::move(v.values);
    q.token_set = pq.post.tokens;
    for (const auto& a : pq.answers) {
      IndexedAnswer ia;
      ia.answer_id = a.post.id;
      ia.author = a.author;
      ia.observed_score = a.score;
      ia.observed_norm = scores.observed_normalized(q.id, a.author);
      ia.reconstructed_norm = scores.reconstructed_normalized(q.id, a.author);
      q.answers.push_back(ia);
    }
    questions.push_back(std::move(q));
  }
  return ExpertIndex(model.centroids, std::move(words), std::move(questions), corpus.config, lambda);
}

namespace {

json filter_json(const textprep::FilterConfig& cfg) {
  json rules = json::object();
  for (const auto& [tag, s] : cfg.comment_rules()) {
    json blocks = json::array();
    for (const auto& [o, c] : s.blocks) blocks.push_back({o, c});
    rules[tag] = {{"line", s.line_prefixes}, {"block", blocks}};
  }
  return {{"stopwords", cfg.stopwords()},
          {"dictionary", cfg.dictionary() ? json(*cfg.dictionary()) : json(nullptr)},
          {"comment_rules", rules}};
}

textprep::FilterConfig filter_from(const json& j) {
  std::map<std::string, textprep::CommentSyntax> rules;
  for (const auto& [tag, r] : j.at("comment_rules").items()) {
    textprep::CommentSyntax s;
    s.line_prefixes = r.at("line").get<std::vector<std::string>>();
    for (const auto& b : r.at("block")) s.blocks.emplace_back(b.at(0).get<std::string>(), b.at(1).get<std::string>());
    rules[tag] = std::move(s);
  }
  std::optional<std::set<std::string>> dict;
  if (!j.at("dictionary").is_null()) dict = j.at("dictionary").get<std::set<std::string>>();
  return textprep::FilterConfig(j.at("stopwords").get<std::set<std::string>>(), std::move(dict), std::move(rules));
}

}  // namespace

void save_index(const ExpertIndex& index, std::ostream& out) {
  json meta = {{"kind", "meta"},
               {"version", 1},
               {"lambda", index.lambda()},
               {"domains", index.domain_count()},
               {"dim", index.centroids().cols()},
               {"questions", index.size()},
               {"filter", filter_json(index.filter())}};
  out << meta.dump() << '\n';
  for (std::size_t d = 0; d < index.domain_count(); ++d) {
    const auto row = index.centroids().row(d);
    json rec = {{"kind", "domain"},
                {"index", d},
                {"centroid", std::vector<double>(row.begin(), row.end())},
                {"words", index.domain_words(d)}};
    out << rec.dump() << '\n';
  }
  for (const auto& q : index.questions()) {
    json answers = json::array();
    for (const auto& a : q.answers)
      answers.push_back({{"id", a.answer_id},
                         {"author", a.author},
                         {"score", a.observed_score},
                         {"observed", a.observed_norm},
                         {"reconstructed", a.reconstructed_norm}});
    json rec = {{"kind", "question"}, {"id", q.id},           {"domain", q.domain},
                {"vector", q.vector}, {"tokens", q.token_set}, {"answers", std::move(answers)}};
    out << rec.dump() << '\n';
  }
}

ExpertIndex load_index(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<json> meta;
  Matrix centroids;
  std::vector<std::vector<std::string>> words;
  std::vector<IndexedQuestion> questions;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json rec = json::parse(line);
      const auto kind = rec.at("kind").get<std::string>();
      if (kind == "meta") {
        if (rec.at("version").get<int>() != 1) throw ParseError("unsupported index version");
        meta = rec;
        centroids = Matrix(rec.at("domains").get<std::size_t>(), rec.at("dim").get<std::size_t>());
        words.resize(centroids.rows());
      } else if (!meta) {
        throw ParseError("record before meta record");
      } else if (kind == "domain") {
        const auto d = rec.at("index").get<std::size_t>();
        const auto c = rec.at("centroid").get<std::vector<double>>();
        if (d >= centroids.rows() || c.size() != centroids.cols()) throw ParseError("bad domain record");
        std::copy(c.begin(), c.end(), centroids.row(d).begin());
        words[d] = rec.at("words").get<std::vector<std::string>>();
      } else if (kind == "question") {
        IndexedQuestion q;
        q.id = rec.at("id").get<PostId>();
        q.domain = rec.at("domain").get<int>();
        q.vector = rec.at("vector").get<std::vector<double>>();
        if (q.vector.size() != centroids.cols()) throw ParseError("question vector has the wrong dimension");
        q.token_set = rec.at("tokens").get<std::vector<std::string>>();
        for (const auto& a : rec.at("answers")) {
          IndexedAnswer ia;
          ia.answer_id = a.at("id").get<PostId>();
          ia.author = a.at("author").get<UserId>();
          ia.observed_score = a.at("score").get<long long>();
          ia.observed_norm = a.at("observed").get<double>();
          ia.reconstructed_norm = a.at("reconstructed").get<double>();
          q.answers.push_back(ia);
        }
        questions.push_back(std::move(q));
      } else {
        throw ParseError("unknown record kind '" + kind + "'");
      }
    }
    if (!meta) throw ParseError("index file is empty");
    if (questions.size() != meta->at("questions").get<std::size_t>()) throw ParseError("truncated index file");
    return ExpertIndex(std::move(centroids), std::move(words), std::move(questions),
                       filter_from(meta->at("filter")), meta->at("lambda").get<double>());
  } catch (const json::exception& e) {
    throw ParseError("index line " + std::to_string(line_no) + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError("index line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::uint64_t index_fingerprint(const ExpertIndex& index) {
  std::ostringstream out;
  save_index(index, out);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : out.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::size_t route_query(const postvec::DocVector& query, const Matrix& centroids) {
  if (query.is_zero() || norm2(query.values) == 0.0) throw Error("query has no in-vocabulary terms");
  return domains::nearest_centroid(query.values, centroids);
}

namespace {

// Visits questions in (similarity desc, id asc) order and gathers authors.
Recommendation collect(const ExpertIndex& index, std::size_t domain, std::vector<std::pair<double, std::size_t>> scored,
                       std::size_t ell) {
  Recommendation rec;
  rec.domain = domain;
  if (ell == 0) throw InvalidArgument("recommend: ell must be >= 1");
  const auto& questions = index.questions();
  auto worse = [&](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
    if (a.first != b.first) return a.first < b.first;
    return questions[a.second].id > questions[b.second].id;
  };
  std::make_heap(scored.begin(), scored.end(), worse);

  std::map<UserId, std::size_t> position;
  while (!scored.empty() && rec.experts.size() < ell) {
    std::pop_heap(scored.begin(), scored.end(), worse);
    const auto [sim, qi] = scored.back();
    scored.pop_back();
    if (!(sim > 0.0)) break;  // no lexical or semantic evidence left
    const auto& q = questions[qi];
    std::set<UserId> added_here;
    for (const auto& a : q.answers) {
      auto it = position.find(a.author);
      if (it != position.end()) {
        if (added_here.contains(a.author)) rec.experts[it->second].evidence.answer_ids.push_back(a.answer_id);
        continue;
      }
      if (rec.experts.size() >= ell) continue;
      double score = a.blended * sim;
      if (!rec.experts.empty()) score = std::min(score, rec.experts.back().score);
      position[a.author] = rec.experts.size();
      added_here.insert(a.author);
      rec.experts.push_back({a.author, score, {q.id, sim, {a.answer_id}}});
    }
  }
  return rec;
}

}  // namespace

Recommendation recommend_for_vector(const postvec::DocVector& query, const ExpertIndex& index, std::size_t ell) {
  const std::size_t domain = route_query(query, index.centroids());
  const auto& members = index.domain_questions(domain);
  if (members.empty()) throw Error("empty domain");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(members.size());
  for (auto qi : members) scored.emplace_back(postvec::cosine(query.values, index.questions()[qi].vector), qi);
  return collect(index, domain, std::move(scored), ell);
}

Recommendation recommend_experts(std::string_view query, const ExpertIndex& index,
                                 const embed::EmbeddingTable& table, std::size_t ell) {
  const auto tokens = textprep::prepare_query(query, index.filter());
  return recommend_for_vector(postvec::summarize(tokens, table, "query"), index, ell);
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

Recommendation jaccard_recommend(std::string_view query, const ExpertIndex& index, std::size_t ell) {
  auto tokens = textprep::prepare_query(query, index.filter());
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  if (tokens.empty()) throw Error("query has no in-vocabulary terms");
  if (index.domain_count() == 0) throw Error("empty domain");

  std::size_t domain = 0;
  double best = -1.0;
  for (std::size_t d = 0; d < index.domain_count(); ++d) {
    const double s = jaccard(tokens, index.domain_words(d));
    if (s > best) {
      best = s;
      domain = d;
    }
  }
  const auto& members = index.domain_questions(domain);
  if (members.empty()) throw Error("empty domain");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(members.size());
  for (auto qi : members) scored.emplace_back(jaccard(tokens, index.questions()[qi].token_set), qi);
  return collect(index, domain, std::move(scored), ell);
}

}  // namespace cqa::recommend
