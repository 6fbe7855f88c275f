#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cqa/domains.hpp"
#include "cqa/embeddings.hpp"
#include "cqa/error.hpp"
#include "cqa/eval.hpp"
#include "cqa/ingest.hpp"
#include "cqa/mf.hpp"

namespace cqa::pipeline {

namespace fs = std::filesystem;

enum class Stage { ingest, prep, embed, vectorize, domains, mf, index, query, eval };

inline constexpr Stage kAllStages[] = {Stage::ingest, Stage::prep,  Stage::embed, Stage::vectorize, Stage::domains,
                                       Stage::mf,     Stage::index, Stage::query, Stage::eval};

std::string_view stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

struct Paths {
  fs::path dump;             // Posts.xml
  fs::path corpus;           // filtered corpus
  fs::path prepared;         // tokenised corpus
  fs::path embeddings;       // dictionary-restricted when a dictionary is set
  fs::path embeddings_full;  // optional unrestricted table
  fs::path vectors;          // per-post document vectors
  fs::path domains;          // prefix: .centroids .assign .words
  fs::path mf;               // prefix: .w .h .meta
  fs::path index;
  fs::path queries;          // held-out queries (written by ingest when holdout > 0)
  fs::path report;           // eval report; the CSV goes next to it with ".csv" appended
  fs::path stopwords;        // optional inputs
  fs::path dictionary;
  fs::path comment_rules;
  fs::path extra_text;       // optional plain text, one sentence per line, added to embedding training
};

struct QueryConfig {
  std::string text;
  std::size_t top = 10;
  std::optional<double> lambda;  // re-blend the stored index
  bool jaccard = false;
  bool json = false;
};

struct PipelineConfig {
  Paths paths;
  std::uint64_t seed = 1;
  ingest::CorpusFilter filter;
  std::size_t holdout = 0;
  std::uint64_t holdout_seed = 6;
  embed::SgnsConfig embed;
  domains::DomainConfig domains;
  mf::NmfConfig nmf;
  double lambda = 0.5;
  QueryConfig query;
  eval::EvalConfig eval;
  bool eval_json = false;
};

/// Stage seeds are the global seed plus a fixed per-stage offset unless the
/// stage's section sets its own `seed`.
inline constexpr std::uint64_t kEmbedSeedOffset = 1;
inline constexpr std::uint64_t kDomainsSeedOffset = 2;
inline constexpr std::uint64_t kMfSeedOffset = 3;
inline constexpr std::uint64_t kEvalSeedOffset = 4;
inline constexpr std::uint64_t kHoldoutSeedOffset = 5;

/// Sectioned key = value text (`[paths]`, `[ingest]`, ...). Each override is
/// "section.key=value" and wins over the file. Unknown keys are errors.
PipelineConfig parse_config(std::istream& in, std::span<const std::string> overrides = {});
PipelineConfig load_config(const fs::path& path, std::span<const std::string> overrides = {});
PipelineConfig default_config(std::uint64_t seed = 1);

class MissingInput : public Error {
 public:
  explicit MissingInput(const fs::path& path) : Error("missing input: " + path.string()), path_(path) {}
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

struct StageIO {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
};
/// Files a stage reads and writes under `cfg`. Throws InvalidArgument when a
/// required path is unset.
StageIO stage_io(Stage s, const PipelineConfig& cfg);

/// Checks that each stage's inputs exist or are produced by an earlier stage
/// in `stages`. Throws MissingInput naming the first gap.
void validate_graph(std::span<const Stage> stages, const PipelineConfig& cfg);

/// Runs one stage, throwing on failure. Results go to files; the query and
/// eval stages also print to `out`.
void execute_stage(Stage s, const PipelineConfig& cfg, std::ostream& out, std::ostream& log);

/// Exit status: 0 on success, 2 for a missing input (path on `err`), 1 for
/// any other failure. A dry run validates and writes nothing.
int run_stages(std::span<const Stage> stages, const PipelineConfig& cfg, bool dry_run, std::ostream& out,
               std::ostream& err);

}  // namespace cqa::pipeline
