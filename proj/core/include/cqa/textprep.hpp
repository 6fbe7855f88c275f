#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cqa/ingest.hpp"

namespace cqa::textprep {

struct TokenDoc {
  std::vector<std::string> tokens;  // lowercase, non-empty, no whitespace
  PostId source_post_id = 0;

  friend bool operator==(const TokenDoc&, const TokenDoc&) = default;
};

/// How comments are written in one language.
struct CommentSyntax {
  std::vector<std::string> line_prefixes;
  std::vector<std::pair<std::string, std::string>> blocks;  // (open, close)

  friend bool operator==(const CommentSyntax&, const CommentSyntax&) = default;
};

class FilterConfig {
 public:
  /// Default English stopword list and the built-in comment table, no dictionary.
  FilterConfig();
  FilterConfig(std::set<std::string> stopwords, std::optional<std::set<std::string>> dictionary,
               std::map<std::string, CommentSyntax> comment_rules);

  const std::set<std::string>& stopwords() const noexcept { return stopwords_; }
  const std::optional<std::set<std::string>>& dictionary() const noexcept { return dictionary_; }
  const std::map<std::string, CommentSyntax>& comment_rules() const noexcept { return rules_; }

  void set_stopwords(std::set<std::string> words);
  /// Words that are also stopwords are dropped from the dictionary.
  void set_dictionary(std::optional<std::set<std::string>> words);
  void set_comment_rules(std::map<std::string, CommentSyntax> rules) { rules_ = std::move(rules); }

  friend bool operator==(const FilterConfig&, const FilterConfig&) = default;

 private:
  void normalise();

  std::set<std::string> stopwords_;
  std::optional<std::set<std::string>> dictionary_;
  std::map<std::string, CommentSyntax> rules_;
};

const std::set<std::string>& default_stopwords();
const std::map<std::string, CommentSyntax>& default_comment_rules();

/// Parses a comment-rule file. Each non-comment line is either
///   `<tag> line <prefix>` or `<tag> block <open> <close>`.
/// Rules for the same tag accumulate.
std::map<std::string, CommentSyntax> parse_comment_rules(std::istream& in);

struct StrippedHtml {
  std::string prose;
  std::vector<std::string> code_blocks;
};

/// Removes markup. `<code>`/`<pre>` contents go to code_blocks (a nested
/// `<pre><code>` is one block); block-level tags become line breaks, inline
/// tags vanish; entities are decoded. Never throws.
StrippedHtml strip_html(std::string_view html);

/// Comment bodies of `code` under the syntax of the first tag that has a rule,
/// joined by newlines; empty if no tag matches.
std::string extract_code_comments(std::string_view code, std::span<const std::string> tags,
                                  const FilterConfig& cfg);

/// Lowercases and splits on anything that is not a letter, digit or a hyphen
/// between two word characters. Bytes >= 0x80 count as letters.
std::vector<std::string> tokenize(std::string_view text);

/// Drops stopwords, then keeps only dictionary members when a dictionary is set.
std::vector<std::string> filter_tokens(std::span<const std::string> tokens, const FilterConfig& cfg);

/// Prose plus mined code comments for one post body.
std::string post_text(std::string_view html, std::span<const std::string> tags, const FilterConfig& cfg);

/// Token streams derived from one post.
struct PreparedPost {
  PostId id = 0;
  std::vector<std::string> tokens;        // stopword + dictionary filtered
  std::vector<std::string> train_tokens;  // stopword filtered only

  bool empty() const noexcept { return tokens.empty(); }
  TokenDoc doc() const { return {tokens, id}; }
  friend bool operator==(const PreparedPost&, const PreparedPost&) = default;
};

struct PreparedAnswer {
  PreparedPost post;
  UserId author = 0;
  long long score = 0;

  friend bool operator==(const PreparedAnswer&, const PreparedAnswer&) = default;
};

struct PreparedQuestion {
  PreparedPost post;  // title + body
  std::vector<PreparedAnswer> answers;

  friend bool operator==(const PreparedQuestion&, const PreparedQuestion&) = default;
};

struct PreparedCorpus {
  FilterConfig config;
  std::vector<PreparedQuestion> questions;

  friend bool operator==(const PreparedCorpus&, const PreparedCorpus&) = default;
};

PreparedPost prepare_text(PostId id, std::string_view text, const FilterConfig& cfg);
PreparedQuestion prepare_question(const ingest::CorpusQuestion& q, const FilterConfig& cfg);
PreparedCorpus prepare_corpus(const ingest::Corpus& corpus, const FilterConfig& cfg);

/// Tokens of a free-text query (HTML tolerated, code discarded).
std::vector<std::string> prepare_query(std::string_view text, const FilterConfig& cfg);

/// JSON-lines: a `meta` record carrying the filter config, then one record per question.
void save_prepared(const PreparedCorpus& corpus, std::ostream& out);
PreparedCorpus load_prepared(std::istream& in);

}  // namespace cqa::textprep
