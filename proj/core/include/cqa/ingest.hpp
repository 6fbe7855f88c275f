#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cqa {

using PostId = std::int64_t;
using UserId = std::int64_t;

namespace ingest {

enum class PostType { question, answer, other };

/// One `<row/>` of a Stack Exchange Posts.xml dump.
struct RawPost {
  PostId id = 0;
  PostType post_type = PostType::other;
  std::optional<PostId> parent_id;           // answers only
  std::optional<PostId> accepted_answer_id;  // questions only
  long long score = 0;
  std::string title;
  std::string body;  // HTML, XML-entity-decoded
  std::vector<std::string> tags;
  std::optional<UserId> owner_user_id;

  friend bool operator==(const RawPost&, const RawPost&) = default;
};

struct SkipReport {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_skipped = 0;
  std::vector<std::string> samples;  // first few skip reasons
};

/// Streams RawPost records out of a Posts.xml document without buffering the file.
class PostReader {
 public:
  explicit PostReader(std::istream& in);
  ~PostReader();
  PostReader(const PostReader&) = delete;
  PostReader& operator=(const PostReader&) = delete;

  /// Next well-formed row in document order; std::nullopt at end of document.
  /// Rows lacking a usable `Id` or `Score` are skipped and recorded in skips().
  /// Throws XmlError (with byte offset) on malformed XML.
  std::optional<RawPost> next();

  const SkipReport& skips() const noexcept { return skips_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SkipReport skips_;
};

/// Convenience: drains a PostReader.
std::vector<RawPost> parse_posts(std::istream& in, SkipReport* report = nullptr);

/// Splits a dump `Tags` value ("<c++><sockets>" or "|c++|sockets|").
std::vector<std::string> parse_tags(std::string_view tags);

struct CorpusFilter {
  long long min_score = 0;  // v: retained answers score strictly above this
  int top_answers = 5;      // k_answers
};

struct CorpusQuestion {
  RawPost question;
  std::vector<RawPost> answers;  // (score desc, id asc), accepted answer possibly appended

  friend bool operator==(const CorpusQuestion&, const CorpusQuestion&) = default;
};

struct Corpus {
  CorpusFilter filter;
  std::vector<CorpusQuestion> questions;  // ascending question id
  std::set<UserId> users;                 // authors of retained answers

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.filter.min_score == b.filter.min_score &&
           a.filter.top_answers == b.filter.top_answers && a.questions == b.questions &&
           a.users == b.users;
  }
};

/// Accumulates posts from an unordered stream, then applies the quality filter.
class CorpusBuilder {
 public:
  void add(RawPost post);
  /// Throws Error("empty corpus") when no question survives.
  Corpus build(const CorpusFilter& filter) const;

 private:
  std::vector<RawPost> questions_;
  std::vector<RawPost> answers_;
};

Corpus build_corpus(std::span<const RawPost> posts, const CorpusFilter& filter);

/// Removes questions by id and recomputes the author pool.
Corpus without_questions(const Corpus& corpus, const std::set<PostId>& ids);

inline constexpr int kCorpusFormatVersion = 1;

/// JSON-lines: a `meta` record followed by one `question` record per line.
void save_corpus(const Corpus& corpus, std::ostream& out);
/// Throws Error("empty corpus") on an empty source, ParseError on version
/// mismatch or truncated/invalid records.
Corpus load_corpus(std::istream& in);

}  // namespace ingest
}  // namespace cqa
