#include "cqa/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include <nlohmann/json.hpp>

#include "cqa/error.hpp"
#include "xml_reader.hpp"

namespace cqa::ingest {

using nlohmann::json;

struct PostReader::Impl {
  explicit Impl(std::istream& in) : xml(in) {}
  detail::XmlElementReader xml;
};

PostReader::PostReader(std::istream& in) : impl_(std::make_unique<Impl>(in)) {}
PostReader::~PostReader() = default;

namespace {

constexpr std::size_t kMaxSkipSamples = 20;

std::optional<long long> to_integer(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

std::vector<std::string> parse_tags(std::string_view tags) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : tags) {
    if (c == '<' || c == '>' || c == '|') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<RawPost> PostReader::next() {
  while (auto element = impl_->xml.next()) {
    if (element->name != "row") continue;
    ++skips_.rows_read;

    auto skip = [&](const std::string& why) {
      ++skips_.rows_skipped;
      if (skips_.samples.size() < kMaxSkipSamples)
        skips_.samples.push_back("row at byte " + std::to_string(element->offset) + ": " + why);
    };

    RawPost post;
    bool has_id = false, has_score = false;
    std::string bad;
    std::optional<long long> parent;
    for (const auto& [name, value] : element->attributes) {
      auto integer = [&]() -> std::optional<long long> {
        auto v = to_integer(value);
        if (!v && bad.empty()) bad = "non-integer " + name;
        return v;
      };
      if (name == "Id") {
        if (auto v = integer()) post.id = *v, has_id = *v > 0;
      } else if (name == "PostTypeId") {
        post.post_type = value == "1" ? PostType::question
                         : value == "2" ? PostType::answer
                                        : PostType::other;
      } else if (name == "ParentId") {
        parent = integer();
      } else if (name == "AcceptedAnswerId") {
        post.accepted_answer_id = integer();
      } else if (name == "Score") {
        if (auto v = integer()) post.score = *v, has_score = true;
      } else if (name == "Title") {
        post.title = value;
      } else if (name == "Body") {
        post.body = value;
      } else if (name == "Tags") {
        post.tags = parse_tags(value);
      } else if (name == "OwnerUserId") {
        post.owner_user_id = integer();
      }
    }
    if (!has_id) {
      skip("missing or invalid Id");
      continue;
    }
    if (!has_score) {
      skip("missing or invalid Score");
      continue;
    }
    if (!bad.empty()) {
      skip(bad);
      continue;
    }
    if (post.post_type == PostType::answer) {
      if (!parent) {
        skip("answer without ParentId");
        continue;
      }
      post.parent_id = parent;
      post.accepted_answer_id.reset();
    } else if (post.post_type == PostType::question) {
      post.parent_id.reset();
    } else {
      post.parent_id = parent;
    }
    return post;
  }
  return std::nullopt;
}

std::vector<RawPost> parse_posts(std::istream& in, SkipReport* report) {
  PostReader reader(in);
  std::vector<RawPost> out;
  while (auto post = reader.next()) out.push_back(std::move(*post));
  if (report) *report = reader.skips();
  return out;
}

void CorpusBuilder::add(RawPost post) {
  if (post.post_type == PostType::question) {
    questions_.push_back(std::move(post));
  } else if (post.post_type == PostType::answer && post.owner_user_id) {
    // Answers by deleted users can never be recommended.
    post.title.clear();
    post.tags.clear();
    post.accepted_answer_id.reset();
    answers_.push_back(std::move(post));
  }
}

Corpus CorpusBuilder::build(const CorpusFilter& filter) const {
  if (filter.top_answers < 1) throw InvalidArgument("top_answers must be >= 1");

  std::map<PostId, const RawPost*> questions;
  for (const auto& q : questions_)
    if (q.accepted_answer_id) questions.emplace(q.id, &q);

  std::map<PostId, std::vector<const RawPost*>> by_parent;
  std::set<PostId> seen_answers;
  for (const auto& a : answers_) {
    if (a.score <= filter.min_score) continue;
    if (!questions.contains(*a.parent_id)) continue;
    if (!seen_answers.insert(a.id).second) continue;
    by_parent[*a.parent_id].push_back(&a);
  }

  Corpus corpus;
  corpus.filter = filter;
  for (const auto& [qid, q] : questions) {
    auto it = by_parent.find(qid);
    if (it == by_parent.end()) continue;
    auto candidates = it->second;
    std::sort(candidates.begin(), candidates.end(), [](const RawPost* a, const RawPost* b) {
      return a->score != b->score ? a->score > b->score : a->id < b->id;
    });
    CorpusQuestion cq;
    cq.question = *q;
    const std::size_t keep = std::min(candidates.size(), static_cast<std::size_t>(filter.top_answers));
    for (std::size_t i = 0; i < keep; ++i) cq.answers.push_back(*candidates[i]);
    for (std::size_t i = keep; i < candidates.size(); ++i) {
      if (candidates[i]->id == *q->accepted_answer_id) {
        cq.answers.push_back(*candidates[i]);
        break;
      }
    }
    for (const auto& a : cq.answers) corpus.users.insert(*a.owner_user_id);
    corpus.questions.push_back(std::move(cq));
  }
  if (corpus.questions.empty()) throw Error("empty corpus");
  return corpus;
}

Corpus build_corpus(std::span<const RawPost> posts, const CorpusFilter& filter) {
  CorpusBuilder builder;
  for (const auto& p : posts) builder.add(p);
  return builder.build(filter);
}

Corpus without_questions(const Corpus& corpus, const std::set<PostId>& ids) {
  Corpus out;
  out.filter = corpus.filter;
  for (const auto& q : corpus.questions) {
    if (ids.contains(q.question.id)) continue;
    for (const auto& a : q.answers) out.users.insert(*a.owner_user_id);
    out.questions.push_back(q);
  }
  return out;
}

namespace {

json optional_json(const std::optional<long long>& v) { return v ? json(*v) : json(nullptr); }

std::optional<long long> optional_from(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<long long>();
}

}  // namespace

void save_corpus(const Corpus& corpus, std::ostream& out) {
  json meta = {{"kind", "meta"},
               {"version", kCorpusFormatVersion},
               {"min_score", corpus.filter.min_score},
               {"top_answers", corpus.filter.top_answers},
               {"questions", corpus.questions.size()}};
  out << meta.dump() << '\n';
  for (const auto& cq : corpus.questions) {
    const auto& q = cq.question;
    json answers = json::array();
    for (const auto& a : cq.answers)
      answers.push_back({{"id", a.id},
                         {"score", a.score},
                         {"owner_user_id", optional_json(a.owner_user_id)},
                         {"body_text", a.body}});
    json rec = {{"kind", "question"},
                {"id", q.id},
                {"title", q.title},
                {"body_text", q.body},
                {"tags", q.tags},
                {"accepted_answer_id", optional_json(q.accepted_answer_id)},
                {"score", q.score},
                {"owner_user_id", optional_json(q.owner_user_id)},
                {"answers", std::move(answers)}};
    out << rec.dump() << '\n';
  }
}

Corpus load_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
      const auto kind = rec.at("kind").get<std::string>();
      if (kind == "meta") {
        const int version = rec.at("version").get<int>();
        if (version != kCorpusFormatVersion)
          throw ParseError(where + ": unsupported corpus format version " + std::to_string(version));
        corpus.filter.min_score = rec.at("min_score").get<long long>();
        corpus.filter.top_answers = rec.at("top_answers").get<int>();
        declared = rec.value("questions", std::size_t{0});
        have_meta = true;
        continue;
      }
      if (kind != "question") throw ParseError(where + ": unknown record kind '" + kind + "'");
      if (!have_meta) throw ParseError(where + ": question record before meta record");
      CorpusQuestion cq;
      auto& q = cq.question;
      q.post_type = PostType::question;
      q.id = rec.at("id").get<PostId>();
      q.title = rec.at("title").get<std::string>();
      q.body = rec.at("body_text").get<std::string>();
      q.tags = rec.at("tags").get<std::vector<std::string>>();
      q.accepted_answer_id = optional_from(rec, "accepted_answer_id");
      q.score = rec.value("score", 0LL);
      if (rec.contains("owner_user_id")) q.owner_user_id = optional_from(rec, "owner_user_id");
      for (const auto& a : rec.at("answers")) {
        RawPost ans;
        ans.post_type = PostType::answer;
        ans.id = a.at("id").get<PostId>();
        ans.parent_id = q.id;
        ans.score = a.at("score").get<long long>();
        ans.owner_user_id = optional_from(a, "owner_user_id");
        ans.body = a.at("body_text").get<std::string>();
        if (ans.owner_user_id) corpus.users.insert(*ans.owner_user_id);
        cq.answers.push_back(std::move(ans));
      }
      corpus.questions.push_back(std::move(cq));
    } catch (const json::exception& e) {
      throw ParseError(where + ": truncated or invalid record (" + e.what() + ")");
    }
  }
  if (!have_meta && corpus.questions.empty()) throw Error("empty corpus");
  if (!have_meta) throw ParseError("corpus file has no meta record");
  if (declared != corpus.questions.size())
    throw ParseError("truncated corpus: meta declares " + std::to_string(declared) +
                     " questions, found " + std::to_string(corpus.questions.size()));
  if (corpus.questions.empty()) throw Error("empty corpus");
  return corpus;
}

}  // namespace cqa::ingest
