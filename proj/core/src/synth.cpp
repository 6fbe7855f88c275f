#include "cqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cqa/error.hpp"

namespace cqa::synth {

std::string canonical_word(int domain, int i) { return "d" + std::to_string(domain) + "t" + std::to_string(i); }
std::string synonym_word(int domain, int i) { return "d" + std::to_string(domain) + "s" + std::to_string(i); }

namespace {

const std::vector<std::string> kFiller{"the", "is", "how", "do", "i", "a", "with", "to", "my", "in", "when", "it"};
const std::vector<std::string> kNoise{"thing", "stuff", "problem", "issue", "help", "works", "broken", "question"};

struct Gen {
  const SynthConfig& cfg;
  std::mt19937_64 rng;

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  const std::string& pick(const std::vector<std::string>& v) { return v[static_cast<std::size_t>(pick(static_cast<int>(v.size())))]; }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

  std::string canonical(int d) { return canonical_word(d, pick(cfg.words_per_domain)); }
  std::string synonym(int d) { return synonym_word(d, pick(cfg.words_per_domain)); }

  std::string question_title(int d) {
    std::string s = "how do i " + canonical(d);
    for (int i = 0; i < 3; ++i) s += " " + canonical(d);
    return s;
  }

  std::string question_body(int d) {
    std::string p;
    for (int i = 0; i < 14; ++i) {
      if (!p.empty()) p += ' ';
      const int r = pick(7);
      p += r < 4 ? canonical(d) : r < 6 ? pick(kFiller) : pick(kNoise);
    }
    return "<p>" + p + "</p>\n<pre><code># " + canonical(d) + " " + canonical(d) + "\nvalue = compute(x)\n</code></pre>";
  }

  std::string answer_body(int d) {
    std::string p;
    for (int i = 0; i < 12; ++i) {
      if (!p.empty()) p += ' ';
      const int r = pick(6);
      p += r < 3 ? canonical(d) : r < 5 ? synonym(d) : pick(kFiller);
    }
    return "<p>" + p + "</p>";
  }

  std::string query_text(int d) {
    std::string s;
    for (int i = 0; i < 8; ++i) {
      const int w = pick(cfg.words_per_domain);
      if (!s.empty()) s += ' ';
      s += chance(cfg.synonym_rate) ? synonym_word(d, w) : canonical_word(d, w);
    }
    return "how do i " + s + "\n<p>" + pick(kFiller) + " " + pick(kNoise) + "</p>";
  }
};

}  // namespace

SynthCorpus generate(const SynthConfig& cfg) {
  if (cfg.domains < 1 || cfg.questions < cfg.domains || cfg.queries < 0 || cfg.words_per_domain < 1 ||
      cfg.user_pool < cfg.answers_max || cfg.answers_min < 0 || cfg.answers_max < cfg.answers_min ||
      !(cfg.synonym_rate >= 0.0 && cfg.synonym_rate <= 1.0))
    throw InvalidArgument("synth: inconsistent configuration");

  Gen g{cfg, std::mt19937_64(cfg.seed)};
  SynthCorpus out;
  for (int d = 0; d < cfg.domains; ++d) {
    for (int i = 0; i < cfg.words_per_domain; ++i) {
      out.dictionary.insert(canonical_word(d, i));
      out.dictionary.insert(synonym_word(d, i));
    }
    out.planted.push_back(1000 + d);
  }
  auto ordinary = [&](int i) { return static_cast<UserId>(2000 + i); };

  PostId next_id = 1;
  const int total = cfg.questions + cfg.queries;
  for (int n = 0; n < total; ++n) {
    const bool is_query = n >= cfg.questions;
    const int d = (is_query ? n - cfg.questions : n) % cfg.domains;

    ingest::RawPost q;
    q.id = next_id++;
    q.post_type = ingest::PostType::question;
    q.score = 1 + g.pick(10);
    q.title = g.question_title(d);
    q.body = g.question_body(d);
    q.tags = {"python", "domain" + std::to_string(d)};
    q.owner_user_id = 3000 + g.pick(cfg.user_pool);

    std::vector<ingest::RawPost> answers;
    ingest::RawPost top;
    top.id = next_id++;
    top.post_type = ingest::PostType::answer;
    top.parent_id = q.id;
    top.score = 30 + g.pick(11);
    top.body = g.answer_body(d);
    top.owner_user_id = out.planted[static_cast<std::size_t>(d)];
    answers.push_back(top);
    q.accepted_answer_id = top.id;

    const int extra = cfg.answers_min + g.pick(cfg.answers_max - cfg.answers_min + 1);
    std::vector<int> pool(static_cast<std::size_t>(cfg.user_pool));
    for (int i = 0; i < cfg.user_pool; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::shuffle(pool.begin(), pool.end(), g.rng);
    for (int a = 0; a < extra; ++a) {
      ingest::RawPost ans;
      ans.id = next_id++;
      ans.post_type = ingest::PostType::answer;
      ans.parent_id = q.id;
      ans.score = 1 + g.pick(15);
      ans.body = g.answer_body(d);
      ans.owner_user_id = ordinary(pool[static_cast<std::size_t>(a)]);
      answers.push_back(ans);
    }

    if (is_query) {
      eval::EvalQuery eq;
      eq.question_id = q.id;
      eq.text = g.query_text(d);
      for (const auto& a : answers) {
        auto [it, fresh] = eq.truth.emplace(*a.owner_user_id, static_cast<double>(a.score));
        if (!fresh) it->second = std::max(it->second, static_cast<double>(a.score));
      }
      out.queries.push_back(std::move(eq));
      out.query_domain.push_back(d);
    } else {
      out.posts.push_back(std::move(q));
      for (auto& a : answers) out.posts.push_back(std::move(a));
    }
  }
  return out;
}

namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#xA;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_posts_xml(std::span<const ingest::RawPost> posts, std::ostream& out) {
  out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n";
  for (const auto& p : posts) {
    const int type = p.post_type == ingest::PostType::question ? 1 : p.post_type == ingest::PostType::answer ? 2 : 5;
    out << "  <row Id=\"" << p.id << "\" PostTypeId=\"" << type << '"';
    if (p.parent_id) out << " ParentId=\"" << *p.parent_id << '"';
    if (p.accepted_answer_id) out << " AcceptedAnswerId=\"" << *p.accepted_answer_id << '"';
    out << " Score=\"" << p.score << '"';
    if (!p.title.empty()) out << " Title=\"" << escape(p.title) << '"';
    out << " Body=\"" << escape(p.body) << '"';
    if (!p.tags.empty()) {
      std::string tags;
      for (const auto& t : p.tags) tags += "<" + t + ">";
      out << " Tags=\"" << escape(tags) << '"';
    }
    if (p.owner_user_id) out << " OwnerUserId=\"" << *p.owner_user_id << '"';
    out << " />\n";
  }
  out << "</posts>\n";
}

ScalingFixture scaling_fixture(int domains, int per_domain, int dim, std::uint64_t seed) {
  if (domains < 1 || per_domain < 1 || dim < 2) throw InvalidArgument("scaling_fixture: bad size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto unit = [&](std::vector<double> v) {
    const double n = norm2(v);
    for (auto& x : v) x /= n;
    return v;
  };

  Matrix centroids(static_cast<std::size_t>(domains), static_cast<std::size_t>(dim));
  std::vector<std::vector<std::string>> words(static_cast<std::size_t>(domains));
  std::vector<recommend::IndexedQuestion> questions;
  ScalingFixture fx;
  PostId next_id = 1;
  for (int d = 0; d < domains; ++d) {
    std::vector<double> c(static_cast<std::size_t>(dim));
    for (auto& x : c) x = normal(rng);
    c = unit(std::move(c));
    std::copy(c.begin(), c.end(), centroids.row(static_cast<std::size_t>(d)).begin());
    words[static_cast<std::size_t>(d)] = {canonical_word(d, 0), canonical_word(d, 1)};
    for (int i = 0; i < per_domain; ++i) {
      recommend::IndexedQuestion q;
      q.id = next_id++;
      q.domain = d;
      q.vector = c;
      for (auto& x : q.vector) x += 0.1 * normal(rng);
      q.token_set = {canonical_word(d, i % 2)};
      for (int a = 0; a < 3; ++a) {
        recommend::IndexedAnswer ans;
        ans.answer_id = next_id++;
        ans.author = 1 + (d * 7 + i + a) % 500;
        ans.observed_score = 3 - a;
        ans.observed_norm = (3.0 - a) / 3.0;
        ans.reconstructed_norm = ans.observed_norm;
        q.answers.push_back(ans);
      }
      questions.push_back(std::move(q));
    }
    postvec::DocVector query;
    query.values = c;
    for (auto& x : query.values) x += 0.05 * normal(rng);
    query.doc_id = "query" + std::to_string(d);
    query.token_mass = 1;
    fx.queries.push_back(std::move(query));
  }
  fx.index = recommend::ExpertIndex(std::move(centroids), std::move(words), std::move(questions),
                                    textprep::FilterConfig{}, 0.0);
  return fx;
}

}  // namespace cqa::synth
