#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "cqa/ingest.hpp"
#include "cqa/textprep.hpp"

using namespace cqa;
using namespace cqa::textprep;
using Strings = std::vector<std::string>;

namespace {

FilterConfig config(std::set<std::string> stop, std::optional<std::set<std::string>> dict = std::nullopt) {
  return FilterConfig(std::move(stop), std::move(dict), default_comment_rules());
}

}  // namespace

TEST_CASE("inline code is pulled out of prose") {
  const auto s = strip_html("<p>use <code>malloc</code> here</p>");
  CHECK(s.prose == "use  here");
  CHECK(s.code_blocks == Strings{"malloc"});
}

TEST_CASE("plain text passes through") {
  const auto s = strip_html("plain text");
  CHECK(s.prose == "plain text");
  CHECK(s.code_blocks.empty());
}

TEST_CASE("nested pre/code is one block") {
  const auto s = strip_html("<pre><code>x=1\n# set x</code></pre>");
  CHECK(s.code_blocks == Strings{"x=1\n# set x"});
  CHECK(s.prose.empty());
}

TEST_CASE("strip_html decodes entities and drops every tag") {
  const auto s = strip_html("<p>a &lt; b &amp;&amp; <b>bold</b></p><div class=\"x\">next<br/>line</div><!-- note -->");
  CHECK(s.prose.find("a < b && bold") != std::string::npos);
  CHECK(s.prose.find("next") != std::string::npos);
  CHECK(s.prose.find("note") == std::string::npos);
  CHECK(s.prose.find("class") == std::string::npos);
}

TEST_CASE("strip_html tolerates malformed markup") {
  CHECK_NOTHROW(strip_html("<p>open <code>never closed"));
  CHECK_NOTHROW(strip_html("<<<>>> <a href='x"));
  CHECK_NOTHROW(strip_html("</code></pre>stray"));
}

TEST_CASE("strip_html leaves no tag brackets in prose") {
  std::mt19937_64 rng(11);
  const Strings pieces{"<p>", "</p>", "<b>", "</b>", "<code>", "</code>", "<pre>", "</pre>", "word ", "x=1 ", "<br/>",
                       "<a href=\"u\">", "</a>", "&lt;", "&amp;", "\n"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string html;
    for (int i = 0; i < 30; ++i) html += pieces[rng() % pieces.size()];
    const auto s = strip_html(html);
    // every '<' or '>' left in prose came from an entity, never from a tag
    const auto decoded_lt = static_cast<std::size_t>(std::count(s.prose.begin(), s.prose.end(), '<'));
    std::size_t entity_lt = 0;
    for (std::size_t p = html.find("&lt;"); p != std::string::npos; p = html.find("&lt;", p + 1)) ++entity_lt;
    CHECK(decoded_lt <= entity_lt);
    CHECK(s.prose.find('>') == std::string::npos);
  }
}

TEST_CASE("comment mining by tag") {
  const FilterConfig cfg;
  const Strings python{"python"};
  const Strings c{"c"};
  const Strings unknown{"whitespace-language-unknown"};
  CHECK(extract_code_comments("x = 1  # increment later", python, cfg) == "increment later");
  CHECK(extract_code_comments("int a; /* counter */", c, cfg) == "counter");
  CHECK(extract_code_comments("int a; // counter", unknown, cfg).empty());
  CHECK(extract_code_comments("a // one\nb /* two\nlines */ c", c, cfg) == "one\ntwo\nlines");
  CHECK(extract_code_comments("select 1 -- pick one", Strings{"sql"}, cfg) == "pick one");
  CHECK(extract_code_comments("<a/><!-- hidden -->", Strings{"html"}, cfg) == "hidden");
}

TEST_CASE("first tag with a rule decides the syntax") {
  const FilterConfig cfg;
  const Strings tags{"linux", "python", "c"};
  CHECK(extract_code_comments("x = 1 # py\ny = 2 // c-style", tags, cfg) == "py");
}

TEST_CASE("comment rules can be loaded from text") {
  std::istringstream in("# custom\nlua line --\nlua block --[[ ]]\n");
  const auto rules = parse_comment_rules(in);
  REQUIRE(rules.contains("lua"));
  CHECK(rules.at("lua").line_prefixes == Strings{"--"});
  REQUIRE(rules.at("lua").blocks.size() == 1);
  CHECK(rules.at("lua").blocks[0] == std::pair<std::string, std::string>{"--[[", "]]"});
  std::istringstream bad("lua sideways x\n");
  CHECK_THROWS(parse_comment_rules(bad));
}

TEST_CASE("tokenizer rules") {
  CHECK(tokenize("Ping-test FAILED!") == Strings{"ping-test", "failed"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a1 b2-c3") == Strings{"a1", "b2-c3"});
  CHECK(tokenize("-lead trail- a--b x-") == Strings{"lead", "trail", "a", "b", "x"});
  for (const auto& t : tokenize("  Mixed\tCASE\nwords, with: punct.  "))
    CHECK((!t.empty() && t.find_first_of(" \t\n") == std::string::npos));
}

TEST_CASE("filter_tokens examples") {
  const auto stop_only = config({"the"});
  CHECK(filter_tokens(Strings{"the", "heap", "the"}, stop_only) == Strings{"heap"});
  const auto dict = config({}, std::set<std::string>{"heap"});
  CHECK(filter_tokens(Strings{"heap", "zebra"}, dict) == Strings{"heap"});
}

TEST_CASE("filter_tokens never grows and is idempotent") {
  std::mt19937_64 rng(5);
  const Strings vocab{"the", "a", "heap", "stack", "zebra", "queue", "of", "tree"};
  const auto cfg = config({"the", "a", "of"}, std::set<std::string>{"heap", "stack", "queue"});
  for (int trial = 0; trial < 100; ++trial) {
    Strings tokens;
    for (int i = 0; i < static_cast<int>(rng() % 20); ++i) tokens.push_back(vocab[rng() % vocab.size()]);
    const auto once = filter_tokens(tokens, cfg);
    CHECK(once.size() <= tokens.size());
    CHECK(filter_tokens(once, cfg) == once);
  }
}

TEST_CASE("dictionary and stopwords end up disjoint") {
  FilterConfig cfg({"The", "of"}, std::set<std::string>{"heap", "THE"}, {});
  CHECK(cfg.stopwords() == std::set<std::string>{"of", "the"});
  CHECK(cfg.dictionary() == std::set<std::string>{"heap"});
}

TEST_CASE("prepared question concatenates title, prose and comments") {
  ingest::CorpusQuestion q;
  q.question.id = 1;
  q.question.post_type = ingest::PostType::question;
  q.question.title = "Heap Sort";
  q.question.body = "<p>the heap is slow</p><pre><code>h = [] # build heap\n</code></pre>";
  q.question.tags = {"python"};
  ingest::RawPost a;
  a.id = 2;
  a.post_type = ingest::PostType::answer;
  a.parent_id = 1;
  a.score = 3;
  a.body = "<p>use a zebra heap</p>";
  a.owner_user_id = 9;
  q.answers.push_back(a);

  const auto cfg = config({"the", "is", "a", "use"}, std::set<std::string>{"heap", "sort", "build"});
  const auto p = prepare_question(q, cfg);
  CHECK(p.post.tokens == Strings{"heap", "sort", "heap", "build", "heap"});
  CHECK(p.post.train_tokens == Strings{"heap", "sort", "heap", "slow", "build", "heap"});
  REQUIRE(p.answers.size() == 1);
  CHECK(p.answers[0].author == 9);
  CHECK(p.answers[0].post.tokens == Strings{"heap"});
  CHECK(p.answers[0].post.train_tokens == Strings{"zebra", "heap"});
}

TEST_CASE("empty posts are kept and flagged") {
  const auto p = prepare_text(5, "the of", config({"the", "of"}));
  CHECK(p.empty());
  CHECK(p.id == 5);
}

TEST_CASE("prepared corpus round trip and determinism") {
  ingest::Corpus c;
  for (PostId id = 1; id <= 3; ++id) {
    ingest::CorpusQuestion q;
    q.question.id = id;
    q.question.title = "title " + std::to_string(id);
    q.question.body = "<p>heap stack</p><pre><code>// note\n</code></pre>";
    q.question.tags = {"java"};
    ingest::RawPost a;
    a.id = 10 + id;
    a.parent_id = id;
    a.score = static_cast<long long>(id);
    a.body = "answer text";
    a.owner_user_id = 100 + id;
    q.answers.push_back(a);
    c.questions.push_back(q);
  }
  const auto cfg = config({"the"}, std::set<std::string>{"heap", "note", "answer"});
  const auto p1 = prepare_corpus(c, cfg);
  CHECK(prepare_corpus(c, cfg) == p1);
  std::stringstream s;
  save_prepared(p1, s);
  CHECK(load_prepared(s) == p1);
}

TEST_CASE("query preparation discards code") {
  const auto cfg = config({"how"});
  CHECK(prepare_query("How <code>malloc</code> works", cfg) == Strings{"works"});
}
