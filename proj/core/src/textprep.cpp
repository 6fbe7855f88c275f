#include "cqa/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cqa/entities.hpp"
#include "cqa/error.hpp"
#include "cqa/textio.hpp"

namespace cqa::textprep {

using nlohmann::json;

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",       "about",  "above",   "after",  "again",   "against", "all",     "am",
      "an",      "and",    "any",     "are",    "as",      "at",      "be",      "because",
      "been",    "before", "being",   "below",  "between", "both",    "but",     "by",
      "can",     "could",  "d",       "did",    "do",      "does",    "doing",   "don",
      "down",    "during", "each",    "few",    "for",     "from",    "further", "had",
      "has",     "have",   "having",  "he",     "her",     "here",    "hers",    "herself",
      "him",     "himself", "his",    "how",    "i",       "if",      "in",      "into",
      "is",      "it",     "its",     "itself", "just",    "ll",      "m",       "me",
      "more",    "most",   "my",      "myself", "no",      "nor",     "not",     "now",
      "o",       "of",     "off",     "on",     "once",    "only",    "or",      "other",
      "our",     "ours",   "ourselves", "out",  "over",    "own",     "re",      "s",
      "same",    "she",    "should",  "so",     "some",    "such",    "t",       "than",
      "that",    "the",    "their",   "theirs", "them",    "themselves", "then", "there",
      "these",   "they",   "this",    "those",  "through", "to",      "too",     "under",
      "until",   "up",     "ve",      "very",   "was",     "we",      "were",    "what",
      "when",    "where",  "which",   "while",  "who",     "whom",    "why",     "will",
      "with",    "would",  "y",       "you",    "your",    "yours",   "yourself", "yourselves"};
  return words;
}

const std::map<std::string, CommentSyntax>& default_comment_rules() {
  static const std::map<std::string, CommentSyntax> rules = [] {
    const CommentSyntax hash{{"#"}, {}};
    const CommentSyntax c_like{{"//"}, {{"/*", "*/"}}};
    const CommentSyntax sql{{"--"}, {}};
    const CommentSyntax markup{{}, {{"<!--", "-->"}}};
    std::map<std::string, CommentSyntax> r;
    for (const char* t : {"python", "ruby", "bash"}) r[t] = hash;
    for (const char* t : {"c", "cpp", "c++", "java", "javascript", "csharp", "c#"}) r[t] = c_like;
    r["sql"] = sql;
    for (const char* t : {"html", "xml"}) r[t] = markup;
    return r;
  }();
  return rules;
}

FilterConfig::FilterConfig() : stopwords_(default_stopwords()), rules_(default_comment_rules()) {}

FilterConfig::FilterConfig(std::set<std::string> stopwords,
                           std::optional<std::set<std::string>> dictionary,
                           std::map<std::string, CommentSyntax> comment_rules)
    : stopwords_(std::move(stopwords)),
      dictionary_(std::move(dictionary)),
      rules_(std::move(comment_rules)) {
  normalise();
}

void FilterConfig::set_stopwords(std::set<std::string> words) {
  stopwords_ = std::move(words);
  normalise();
}

void FilterConfig::set_dictionary(std::optional<std::set<std::string>> words) {
  dictionary_ = std::move(words);
  normalise();
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::set<std::string> lowered(const std::set<std::string>& words) {
  std::set<std::string> out;
  for (const auto& w : words) out.insert(lower(w));
  return out;
}

}  // namespace

void FilterConfig::normalise() {
  stopwords_ = lowered(stopwords_);
  if (dictionary_) {
    std::set<std::string> dict;
    for (const auto& w : lowered(*dictionary_))
      if (!stopwords_.contains(w)) dict.insert(w);
    dictionary_ = std::move(dict);
  }
}

std::map<std::string, CommentSyntax> parse_comment_rules(std::istream& in) {
  std::map<std::string, CommentSyntax> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = textio::trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream fields(t);
    std::string tag, kind, open, close;
    fields >> tag >> kind >> open;
    const std::string where = "comment rules line " + std::to_string(line_no);
    if (open.empty()) throw ParseError(where + ": expected '<tag> line|block <token> [<close>]'");
    if (kind == "line") {
      rules[lower(tag)].line_prefixes.push_back(open);
    } else if (kind == "block") {
      if (!(fields >> close)) throw ParseError(where + ": block rule needs open and close tokens");
      rules[lower(tag)].blocks.emplace_back(open, close);
    } else {
      throw ParseError(where + ": unknown rule kind '" + kind + "'");
    }
  }
  return rules;
}

namespace {

bool is_block_tag(std::string_view name) {
  static const std::set<std::string, std::less<>> block = {
      "p",  "div", "br", "li", "ul", "ol", "h1", "h2", "h3",    "h4",         "h5",
      "h6", "tr",  "td", "th", "hr", "table", "blockquote", "dl", "dt", "dd"};
  return block.contains(name);
}

struct TagInfo {
  std::string name;  // lowercase
  bool closing = false;
  std::size_t end = 0;  // index one past '>'
  bool comment = false;
};

// Parses a tag starting at html[i] == '<'. Returns nullopt when '<' is literal text.
std::optional<TagInfo> read_tag(std::string_view html, std::size_t i) {
  if (i + 1 >= html.size()) return std::nullopt;
  const unsigned char n = static_cast<unsigned char>(html[i + 1]);
  TagInfo tag;
  if (html.substr(i, 4) == "<!--") {
    const auto close = html.find("-->", i + 4);
    tag.comment = true;
    tag.end = close == std::string_view::npos ? html.size() : close + 3;
    return tag;
  }
  if (!(std::isalpha(n) || n == '/' || n == '!' || n == '?')) return std::nullopt;
  std::size_t j = i + 1;
  if (html[j] == '/') {
    tag.closing = true;
    ++j;
  }
  while (j < html.size() && (std::isalnum(static_cast<unsigned char>(html[j])) || html[j] == '-'))
    tag.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(html[j++]))));
  char quote = 0;
  while (j < html.size()) {
    const char c = html[j++];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      tag.end = j;
      return tag;
    }
  }
  tag.end = html.size();  // unterminated: swallow the rest
  return tag;
}

}  // namespace

StrippedHtml strip_html(std::string_view html) {
  StrippedHtml out;
  std::string text;          // pending raw text segment
  std::string code;          // current code block
  std::string code_outer;    // "pre" or "code" while inside a code block
  auto flush_text = [&](std::string& sink) {
    sink += decode_html_entities(text);
    text.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      text.push_back(html[i++]);
      continue;
    }
    auto tag = read_tag(html, i);
    if (!tag) {
      text.push_back(html[i++]);
      continue;
    }
    i = tag->end;
    if (tag->comment) continue;
    if (!code_outer.empty()) {
      if (tag->closing && tag->name == code_outer) {
        flush_text(code);
        out.code_blocks.push_back(std::move(code));
        code.clear();
        code_outer.clear();
      }
      continue;
    }
    if (!tag->closing && (tag->name == "pre" || tag->name == "code")) {
      flush_text(out.prose);
      code_outer = tag->name;
      continue;
    }
    flush_text(out.prose);
    if (is_block_tag(tag->name)) out.prose.push_back('\n');
  }
  if (!code_outer.empty()) {
    flush_text(code);
    out.code_blocks.push_back(std::move(code));
  } else {
    flush_text(out.prose);
  }
  out.prose = textio::trim(out.prose);
  return out;
}

std::string extract_code_comments(std::string_view code, std::span<const std::string> tags,
                                  const FilterConfig& cfg) {
  const CommentSyntax* syntax = nullptr;
  for (const auto& tag : tags) {
    auto it = cfg.comment_rules().find(lower(tag));
    if (it != cfg.comment_rules().end()) {
      syntax = &it->second;
      break;
    }
  }
  if (!syntax) return {};

  std::string result;
  auto emit = [&](std::string_view body) {
    std::string t = textio::trim(body);
    if (t.empty()) return;
    if (!result.empty()) result.push_back('\n');
    result += t;
  };

  std::size_t i = 0;
  while (i < code.size()) {
    // Earliest opener wins; longer opener breaks ties.
    std::size_t best = std::string_view::npos;
    std::size_t best_len = 0;
    const std::string* close = nullptr;
    for (const auto& p : syntax->line_prefixes) {
      auto pos = code.find(p, i);
      if (pos < best || (pos == best && pos != std::string_view::npos && p.size() > best_len)) {
        best = pos;
        best_len = p.size();
        close = nullptr;
      }
    }
    for (const auto& [open, cl] : syntax->blocks) {
      auto pos = code.find(open, i);
      if (pos < best || (pos == best && pos != std::string_view::npos && open.size() > best_len)) {
        best = pos;
        best_len = open.size();
        close = &cl;
      }
    }
    if (best == std::string_view::npos) break;
    const std::size_t body_start = best + best_len;
    if (close) {
      auto end = code.find(*close, body_start);
      if (end == std::string_view::npos) {
        emit(code.substr(body_start));
        break;
      }
      emit(code.substr(body_start, end - body_start));
      i = end + close->size();
    } else {
      auto end = code.find('\n', body_start);
      if (end == std::string_view::npos) end = code.size();
      emit(code.substr(body_start, end - body_start));
      i = end;
    }
  }
  return result;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto word_char = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '-' && !cur.empty() && word_char(static_cast<unsigned char>(cur.back())) &&
               i + 1 < text.size() && word_char(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('-');
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> filter_tokens(std::span<const std::string> tokens, const FilterConfig& cfg) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  const auto& dict = cfg.dictionary();
  for (const auto& t : tokens) {
    if (cfg.stopwords().contains(t)) continue;
    if (dict && !dict->contains(t)) continue;
    out.push_back(t);
  }
  return out;
}

std::string post_text(std::string_view html, std::span<const std::string> tags, const FilterConfig& cfg) {
  auto stripped = strip_html(html);
  std::string text = std::move(stripped.prose);
  for (const auto& block : stripped.code_blocks) {
    auto comments = extract_code_comments(block, tags, cfg);
    if (comments.empty()) continue;
    text.push_back('\n');
    text += comments;
  }
  return text;
}

PreparedPost prepare_text(PostId id, std::string_view text, const FilterConfig& cfg) {
  PreparedPost post;
  post.id = id;
  for (auto& t : tokenize(text))
    if (!cfg.stopwords().contains(t)) post.train_tokens.push_back(std::move(t));
  const auto& dict = cfg.dictionary();
  for (const auto& t : post.train_tokens)
    if (!dict || dict->contains(t)) post.tokens.push_back(t);
  return post;
}

PreparedQuestion prepare_question(const ingest::CorpusQuestion& q, const FilterConfig& cfg) {
  PreparedQuestion out;
  const auto& tags = q.question.tags;
  out.post = prepare_text(q.question.id, q.question.title + "\n" + post_text(q.question.body, tags, cfg), cfg);
  for (const auto& a : q.answers) {
    PreparedAnswer pa;
    pa.post = prepare_text(a.id, post_text(a.body, tags, cfg), cfg);
    pa.author = *a.owner_user_id;
    pa.score = a.score;
    out.answers.push_back(std::move(pa));
  }
  return out;
}

PreparedCorpus prepare_corpus(const ingest::Corpus& corpus, const FilterConfig& cfg) {
  PreparedCorpus out;
  out.config = cfg;
  out.questions.reserve(corpus.questions.size());
  for (const auto& q : corpus.questions) out.questions.push_back(prepare_question(q, cfg));
  return out;
}

std::vector<std::string> prepare_query(std::string_view text, const FilterConfig& cfg) {
  return filter_tokens(tokenize(strip_html(text).prose), cfg);
}

namespace {

json post_json(const PreparedPost& p) {
  return {{"id", p.id}, {"tokens", p.tokens}, {"train_tokens", p.train_tokens}, {"empty", p.empty()}};
}

PreparedPost post_from(const json& j) {
  PreparedPost p;
  p.id = j.at("id").get<PostId>();
  p.tokens = j.at("tokens").get<std::vector<std::string>>();
  p.train_tokens = j.at("train_tokens").get<std::vector<std::string>>();
  return p;
}

}  // namespace

void save_prepared(const PreparedCorpus& corpus, std::ostream& out) {
  json rules = json::object();
  for (const auto& [tag, syntax] : corpus.config.comment_rules()) {
    json blocks = json::array();
    for (const auto& [o, c] : syntax.blocks) blocks.push_back({o, c});
    rules[tag] = {{"line", syntax.line_prefixes}, {"block", blocks}};
  }
  const auto& dict = corpus.config.dictionary();
  json meta = {{"kind", "meta"},
               {"version", 1},
               {"stopwords", corpus.config.stopwords()},
               {"dictionary", dict ? json(*dict) : json(nullptr)},
               {"comment_rules", rules},
               {"questions", corpus.questions.size()}};
  out << meta.dump() << '\n';
  for (const auto& q : corpus.questions) {
    json answers = json::array();
    for (const auto& a : q.answers) {
      json aj = post_json(a.post);
      aj["author"] = a.author;
      aj["score"] = a.score;
      answers.push_back(std::move(aj));
    }
    json rec = post_json(q.post);
    rec["kind"] = "question";
    rec["answers"] = std::move(answers);
    out << rec.dump() << '\n';
  }
}

PreparedCorpus load_prepared(std::istream& in) {
  PreparedCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      if (rec.at("kind") == "meta") {
        if (rec.at("version").get<int>() != 1) throw ParseError("unsupported prepared-corpus version");
        std::map<std::string, CommentSyntax> rules;
        for (const auto& [tag, r] : rec.at("comment_rules").items()) {
          CommentSyntax s;
          s.line_prefixes = r.at("line").get<std::vector<std::string>>();
          for (const auto& b : r.at("block")) s.blocks.emplace_back(b.at(0).get<std::string>(), b.at(1).get<std::string>());
          rules[tag] = std::move(s);
        }
        std::optional<std::set<std::string>> dict;
        if (!rec.at("dictionary").is_null()) dict = rec.at("dictionary").get<std::set<std::string>>();
        corpus.config = FilterConfig(rec.at("stopwords").get<std::set<std::string>>(), std::move(dict),
                                     std::move(rules));
        declared = rec.at("questions").get<std::size_t>();
        have_meta = true;
        continue;
      }
      if (!have_meta) throw ParseError("question record before meta record");
      PreparedQuestion q;
      q.post = post_from(rec);
      for (const auto& a : rec.at("answers")) {
        PreparedAnswer pa;
        pa.post = post_from(a);
        pa.author = a.at("author").get<UserId>();
        pa.score = a.at("score").get<long long>();
        q.answers.push_back(std::move(pa));
      }
      corpus.questions.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ParseError("prepared corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("prepared corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_meta) throw Error("empty corpus");
  if (declared != corpus.questions.size())
    throw ParseError("truncated prepared corpus: expected " + std::to_string(declared) + " questions");
  return corpus;
}

}  // namespace cqa::textprep
