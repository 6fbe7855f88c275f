#include "cqa/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "cqa/postvec.hpp"
#include "cqa/recommend.hpp"
#include "cqa/textio.hpp"
#include "cqa/textprep.hpp"

namespace cqa::pipeline {

namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

constexpr std::pair<Stage, std::string_view> kNames[] = {
    {Stage::ingest, "ingest"}, {Stage::prep, "prep"}, {Stage::embed, "embed"},
    {Stage::vectorize, "vectorize"}, {Stage::domains, "domains"}, {Stage::mf, "mf"},
    {Stage::index, "index"}, {Stage::query, "query"}, {Stage::eval, "eval"}};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"global", {"seed"}},
      {"paths",
       {"dump", "corpus", "prepared", "embeddings", "embeddings_full", "vectors", "domains", "mf", "index", "queries",
        "report", "stopwords", "dictionary", "comment_rules", "extra_text"}},
      {"ingest", {"min_score", "top_answers", "holdout", "seed"}},
      {"embed",
       {"dim", "window", "negatives", "epochs", "learning_rate", "min_count", "subsample", "threads", "seed"}},
      {"domains",
       {"k", "k_candidates", "k_min_useful", "restarts", "max_iters", "tol", "silhouette_sample", "seed"}},
      {"mf", {"rank", "alpha", "rho", "tol", "max_iter", "seed"}},
      {"index", {"lambda"}},
      {"query", {"text", "top", "lambda", "baseline", "format"}},
      {"eval", {"folds", "lambdas", "top", "seed", "format"}}};
  return keys;
}

std::string unquote(std::string s) {
  s = textio::trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> str(const std::string& section, const std::string& key) const {
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return unquote(*v);
  }
  template <class T>
  void integer(const std::string& section, const std::string& key, T& target) const {
    if (auto v = str(section, key)) target = static_cast<T>(textio::parse_int(*v, section + "." + key));
  }
  void real(const std::string& section, const std::string& key, double& target) const {
    if (auto v = str(section, key)) target = textio::parse_double(*v, section + "." + key);
  }
  void path(const std::string& key, fs::path& target) const {
    if (auto v = str("paths", key)) target = *v;
  }
  std::optional<std::uint64_t> seed(const std::string& section) const {
    if (auto v = str(section, "seed")) return static_cast<std::uint64_t>(textio::parse_int(*v, section + ".seed"));
    return std::nullopt;
  }

 private:
  const pt::ptree& tree_;
};

std::vector<double> real_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : textio::split(s, ',')) out.push_back(textio::parse_double(textio::trim(part), what));
  return out;
}

std::vector<int> int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& part : textio::split(s, ','))
    out.push_back(static_cast<int>(textio::parse_int(textio::trim(part), what)));
  return out;
}

void check_keys(const pt::ptree& tree) {
  const auto& known = known_keys();
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw InvalidArgument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.contains(key)) throw InvalidArgument("config: unknown key " + section + "." + key);
  }
}

PipelineConfig from_tree(const pt::ptree& tree) {
  check_keys(tree);
  const Reader r(tree);
  std::uint64_t seed = 1;
  r.integer("global", "seed", seed);
  PipelineConfig c = default_config(seed);

  for (auto [key, target] : std::initializer_list<std::pair<const char*, fs::path*>>{
           {"dump", &c.paths.dump},
           {"corpus", &c.paths.corpus},
           {"prepared", &c.paths.prepared},
           {"embeddings", &c.paths.embeddings},
           {"embeddings_full", &c.paths.embeddings_full},
           {"vectors", &c.paths.vectors},
           {"domains", &c.paths.domains},
           {"mf", &c.paths.mf},
           {"index", &c.paths.index},
           {"queries", &c.paths.queries},
           {"report", &c.paths.report},
           {"stopwords", &c.paths.stopwords},
           {"dictionary", &c.paths.dictionary},
           {"comment_rules", &c.paths.comment_rules},
           {"extra_text", &c.paths.extra_text}})
    r.path(key, *target);

  r.integer("ingest", "min_score", c.filter.min_score);
  r.integer("ingest", "top_answers", c.filter.top_answers);
  r.integer("ingest", "holdout", c.holdout);
  if (auto s = r.seed("ingest")) c.holdout_seed = *s;

  r.integer("embed", "dim", c.embed.dim);
  r.integer("embed", "window", c.embed.window);
  r.integer("embed", "negatives", c.embed.negatives);
  r.integer("embed", "epochs", c.embed.epochs);
  r.real("embed", "learning_rate", c.embed.initial_learning_rate);
  r.integer("embed", "min_count", c.embed.min_count);
  r.real("embed", "subsample", c.embed.subsample_threshold);
  r.integer("embed", "threads", c.embed.threads);
  if (auto s = r.seed("embed")) c.embed.seed = *s;

  if (auto k = r.str("domains", "k")) {
    if (*k == "auto")
      c.domains.k.reset();
    else
      c.domains.k = static_cast<int>(textio::parse_int(*k, "domains.k"));
  }
  if (auto v = r.str("domains", "k_candidates")) c.domains.k_candidates = int_list(*v, "domains.k_candidates");
  r.integer("domains", "k_min_useful", c.domains.selection.k_min_useful);
  r.integer("domains", "restarts", c.domains.selection.restarts);
  r.integer("domains", "max_iters", c.domains.selection.max_iters);
  r.real("domains", "tol", c.domains.selection.tol);
  r.integer("domains", "silhouette_sample", c.domains.selection.silhouette_sample);
  if (auto s = r.seed("domains")) c.domains.seed = *s;

  r.integer("mf", "rank", c.nmf.rank);
  r.real("mf", "alpha", c.nmf.alpha);
  r.real("mf", "rho", c.nmf.rho);
  r.real("mf", "tol", c.nmf.tol);
  r.integer("mf", "max_iter", c.nmf.max_iter);
  if (auto s = r.seed("mf")) c.nmf.seed = *s;

  r.real("index", "lambda", c.lambda);

  if (auto v = r.str("query", "text")) c.query.text = *v;
  r.integer("query", "top", c.query.top);
  if (auto v = r.str("query", "lambda")) c.query.lambda = textio::parse_double(*v, "query.lambda");
  if (auto v = r.str("query", "baseline")) {
    if (*v != "none" && *v != "jaccard") throw InvalidArgument("config: query.baseline must be none or jaccard");
    c.query.jaccard = *v == "jaccard";
  }
  if (auto v = r.str("query", "format")) {
    if (*v != "text" && *v != "json") throw InvalidArgument("config: query.format must be text or json");
    c.query.json = *v == "json";
  }

  r.integer("eval", "folds", c.eval.folds);
  if (auto v = r.str("eval", "lambdas")) c.eval.lambdas = real_list(*v, "eval.lambdas");
  r.integer("eval", "top", c.eval.top);
  if (auto s = r.seed("eval")) c.eval.seed = *s;
  if (auto v = r.str("eval", "format")) {
    if (*v != "text" && *v != "json") throw InvalidArgument("config: eval.format must be text or json");
    c.eval_json = *v == "json";
  }
  c.eval.nmf = c.nmf;
  return c;
}

void apply_overrides(pt::ptree& tree, std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw InvalidArgument("config override '" + o + "' is not section.key=value");
    const auto section = textio::trim(std::string_view(o).substr(0, dot));
    const auto key = textio::trim(std::string_view(o).substr(dot + 1, eq - dot - 1));
    if (tree.find(section) == tree.not_found()) tree.push_back({section, pt::ptree()});
    tree.get_child(pt::ptree::path_type(section, '\0')).put(pt::ptree::path_type(key, '\0'), o.substr(eq + 1));
  }
}

fs::path with_suffix(const fs::path& prefix, const char* suffix) {
  auto p = prefix;
  p += suffix;
  return p;
}

fs::path csv_path(const fs::path& report) { return with_suffix(report, ".csv"); }

const fs::path& require(const fs::path& p, const char* key) {
  if (p.empty()) throw InvalidArgument(std::string("config: paths.") + key + " is not set");
  return p;
}

template <class T, class Load>
T read_file(const fs::path& path, Load&& load) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path);
  return load(in);
}

void write(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  textio::write_file_atomic(path, fill);
}

textprep::FilterConfig filter_config(const PipelineConfig& cfg) {
  textprep::FilterConfig f;
  if (!cfg.paths.stopwords.empty()) f.set_stopwords(textio::read_word_list_file(cfg.paths.stopwords));
  if (!cfg.paths.dictionary.empty()) f.set_dictionary(textio::read_word_list_file(cfg.paths.dictionary));
  if (!cfg.paths.comment_rules.empty()) {
    std::ifstream in(cfg.paths.comment_rules);
    if (!in) throw MissingInput(cfg.paths.comment_rules);
    f.set_comment_rules(textprep::parse_comment_rules(in));
  }
  return f;
}

textprep::PreparedCorpus load_prepared(const PipelineConfig& cfg) {
  return read_file<textprep::PreparedCorpus>(require(cfg.paths.prepared, "prepared"),
                                             [](std::istream& in) { return textprep::load_prepared(in); });
}

embed::EmbeddingTable load_table(const PipelineConfig& cfg) {
  return read_file<embed::EmbeddingTable>(require(cfg.paths.embeddings, "embeddings"),
                                          [](std::istream& in) { return embed::load_embeddings(in); });
}

void run_ingest(const PipelineConfig& cfg, std::ostream& log) {
  ingest::SkipReport skips;
  auto corpus = read_file<ingest::Corpus>(require(cfg.paths.dump, "dump"), [&](std::istream& in) {
    ingest::CorpusBuilder builder;
    ingest::PostReader reader(in);
    while (auto post = reader.next()) builder.add(std::move(*post));
    skips = reader.skips();
    return builder.build(cfg.filter);
  });
  log << "ingest: read " << skips.rows_read << " rows, skipped " << skips.rows_skipped << '\n';
  if (cfg.holdout > 0) {
    auto held = eval::hold_out(corpus, cfg.holdout, cfg.holdout_seed);
    write(require(cfg.paths.queries, "queries"), [&](std::ostream& out) { eval::save_queries(held.queries, out); });
    corpus = std::move(held.corpus);
  }
  log << "ingest: " << corpus.questions.size() << " questions, " << corpus.users.size() << " answerers\n";
  write(require(cfg.paths.corpus, "corpus"), [&](std::ostream& out) { ingest::save_corpus(corpus, out); });
}

void run_prep(const PipelineConfig& cfg, std::ostream& log) {
  const auto corpus = read_file<ingest::Corpus>(require(cfg.paths.corpus, "corpus"),
                                                [](std::istream& in) { return ingest::load_corpus(in); });
  const auto prepared = textprep::prepare_corpus(corpus, filter_config(cfg));
  log << "prep: " << prepared.questions.size() << " questions\n";
  write(require(cfg.paths.prepared, "prepared"), [&](std::ostream& out) { textprep::save_prepared(prepared, out); });
}

void run_embed(const PipelineConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& q : prepared.questions) {
    sentences.push_back(q.post.train_tokens);
    for (const auto& a : q.answers) sentences.push_back(a.post.train_tokens);
  }
  if (!cfg.paths.extra_text.empty()) {
    std::ifstream in(cfg.paths.extra_text);
    if (!in) throw MissingInput(cfg.paths.extra_text);
    auto stop_only = prepared.config;
    stop_only.set_dictionary(std::nullopt);
    std::size_t added = 0;
    for (std::string line; std::getline(in, line);) {
      auto tokens = textprep::filter_tokens(textprep::tokenize(line), stop_only);
      if (tokens.empty()) continue;
      sentences.push_back(std::move(tokens));
      ++added;
    }
    log << "embed: " << added << " extra training sentences\n";
  }
  embed::TrainingReport report;
  const auto full = embed::train_sgns(sentences, cfg.embed, &report);
  log << "embed: vocabulary " << report.vocab_size << ", pairs " << report.pairs << '\n';
  if (!cfg.paths.embeddings_full.empty())
    write(cfg.paths.embeddings_full, [&](std::ostream& out) { embed::save_embeddings(full, out); });
  const auto& dict = prepared.config.dictionary();
  const auto table = dict ? embed::restrict_vocabulary(full, *dict) : full;
  if (dict) log << "embed: " << table.size() << " dictionary words kept\n";
  write(require(cfg.paths.embeddings, "embeddings"), [&](std::ostream& out) { embed::save_embeddings(table, out); });
}

void run_vectorize(const PipelineConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  const auto table = load_table(cfg);
  const auto vectors = postvec::vectorize_corpus(prepared, table);
  log << "vectorize: " << vectors.keys.size() << " non-zero post vectors\n";
  write(require(cfg.paths.vectors, "vectors"), [&](std::ostream& out) { textio::write_vector_table(out, vectors); });
}

void run_domains(const PipelineConfig& cfg, std::ostream& log) {
  const auto table = load_table(cfg);
  const auto vectors = read_file<textio::VectorTable>(require(cfg.paths.vectors, "vectors"),
                                                      [](std::istream& in) { return textio::read_vector_table(in); });
  auto dcfg = cfg.domains;
  if (!dcfg.k) {
    std::size_t usable = 0;
    for (std::size_t i = 0; i < table.size(); ++i) usable += norm2(table.row(i)) > 0.0;
    std::erase_if(dcfg.k_candidates, [&](int k) { return k < 2 || static_cast<std::size_t>(k) > usable; });
    if (dcfg.k_candidates.empty())
      throw InvalidArgument("domains: no k candidate fits " + std::to_string(usable) + " word vectors");
  }
  const auto questions = domains::question_vectors(vectors);
  const auto built = domains::build_domains(table, questions, dcfg);
  if (built.selection) {
    for (const auto& [k, s] : built.selection->candidates) log << "domains: k=" << k << " silhouette " << s << '\n';
  }
  log << "domains: k=" << built.model.k << ", " << built.model.question_assignment.size() << " questions assigned\n";
  const auto prefix = require(cfg.paths.domains, "domains");
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  domains::save_domain_model(built.model, prefix);
}

void run_mf(const PipelineConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  const auto votes = mf::build_vote_matrix(prepared);
  const auto ncfg = mf::clamp_rank(cfg.nmf, votes);
  if (ncfg.rank != cfg.nmf.rank) log << "mf: rank lowered to " << ncfg.rank << '\n';
  const auto f = mf::factorize(votes, ncfg);
  log << "mf: " << votes.rows() << "x" << votes.cols() << ", " << f.loss_trace.size() - 1 << " iterations, J="
      << textio::format_double(f.loss_trace.back()) << '\n';
  const auto prefix = require(cfg.paths.mf, "mf");
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  mf::save_factorization(f, prefix);
}

domains::DomainModel load_domains(const PipelineConfig& cfg) {
  const auto& prefix = require(cfg.paths.domains, "domains");
  for (const auto& p : {domains::centroids_path(prefix), domains::assignment_path(prefix), domains::words_path(prefix)})
    if (!fs::exists(p)) throw MissingInput(p);
  return domains::load_domain_model(prefix);
}

void run_index(const PipelineConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  const auto table = load_table(cfg);
  const auto model = load_domains(cfg);
  const auto& prefix = require(cfg.paths.mf, "mf");
  for (const auto* s : {".w", ".h", ".meta"})
    if (!fs::exists(with_suffix(prefix, s))) throw MissingInput(with_suffix(prefix, s));
  const auto f = mf::load_factorization(prefix);
  const auto index = recommend::build_index(prepared, table, model, f, cfg.lambda);
  log << "index: " << index.size() << " questions in " << index.domain_count() << " domains\n";
  write(require(cfg.paths.index, "index"), [&](std::ostream& out) { recommend::save_index(index, out); });
}

void run_query(const PipelineConfig& cfg, std::ostream& out) {
  if (cfg.query.text.empty()) throw InvalidArgument("query: no query text");
  auto index = read_file<recommend::ExpertIndex>(require(cfg.paths.index, "index"),
                                                 [](std::istream& in) { return recommend::load_index(in); });
  if (cfg.query.lambda) index = index.with_lambda(*cfg.query.lambda);
  recommend::Recommendation rec;
  if (cfg.query.jaccard) {
    rec = recommend::jaccard_recommend(cfg.query.text, index, cfg.query.top);
  } else {
    rec = recommend::recommend_experts(cfg.query.text, index, load_table(cfg), cfg.query.top);
  }
  if (cfg.query.json) {
    json experts = json::array();
    for (const auto& e : rec.experts)
      experts.push_back({{"user_id", e.user_id},
                         {"score", e.score},
                         {"question_id", e.evidence.question_id},
                         {"similarity", e.evidence.similarity},
                         {"answer_ids", e.evidence.answer_ids}});
    out << json{{"query", cfg.query.text}, {"domain", rec.domain}, {"experts", experts}}.dump() << '\n';
    return;
  }
  out << "domain " << rec.domain << '\n';
  for (std::size_t i = 0; i < rec.experts.size(); ++i) {
    const auto& e = rec.experts[i];
    out << i + 1 << ". user " << e.user_id << "  score " << textio::format_double(e.score) << "  question "
        << e.evidence.question_id << "  similarity " << textio::format_double(e.evidence.similarity) << '\n';
  }
}

void run_eval(const PipelineConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  const auto table = load_table(cfg);
  const auto model = load_domains(cfg);
  const auto queries = read_file<std::vector<eval::EvalQuery>>(
      require(cfg.paths.queries, "queries"), [](std::istream& in) { return eval::load_queries(in); });
  const auto report = eval::run_evaluation(prepared, table, model, queries, cfg.eval);
  const auto& path = require(cfg.paths.report, "report");
  write(path, [&](std::ostream& o) { eval::write_report_json(report, o); });
  write(csv_path(path), [&](std::ostream& o) { eval::write_report_csv(report, o); });
  log << "eval: " << report.total_queries << " queries, " << report.unreachable << " unreachable\n";
  if (cfg.eval_json) {
    eval::write_report_json(report, out);
    return;
  }
  for (std::size_t li = 0; li < cfg.eval.lambdas.size(); ++li) {
    out << "lambda " << textio::format_double(cfg.eval.lambdas[li]) << '\n';
    for (const auto* name : {"embedding_accuracy", "embedding_ndcg", "jaccard_accuracy", "jaccard_ndcg"}) {
      const auto& s = report.aggregate.at({li, name});
      out << "  " << name << ':';
      for (std::size_t n = 0; n < std::min<std::size_t>(5, s.mean.size()); ++n)
        out << "  @" << n + 1 << ' ' << textio::format_double(std::round(s.mean[n] * 1e4) / 1e4);
      out << '\n';
    }
  }
}

}  // namespace

std::string_view stage_name(Stage s) {
  for (const auto& [stage, name] : kNames)
    if (stage == s) return name;
  return "unknown";
}

std::optional<Stage> stage_from_name(std::string_view name) {
  for (const auto& [stage, n] : kNames)
    if (n == name) return stage;
  return std::nullopt;
}

PipelineConfig default_config(std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  c.embed.seed = seed + kEmbedSeedOffset;
  c.domains.seed = seed + kDomainsSeedOffset;
  c.domains.k_candidates = {50, 100, 150, 200, 250, 300};
  c.nmf.seed = seed + kMfSeedOffset;
  c.eval.seed = seed + kEvalSeedOffset;
  c.eval.nmf = c.nmf;
  c.holdout_seed = seed + kHoldoutSeedOffset;
  return c;
}

PipelineConfig parse_config(std::istream& in, std::span<const std::string> overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  apply_overrides(tree, overrides);
  return from_tree(tree);
}

PipelineConfig load_config(const fs::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw MissingInput(path);
  return parse_config(in, overrides);
}

StageIO stage_io(Stage s, const PipelineConfig& cfg) {
  const auto& p = cfg.paths;
  StageIO io;
  auto optional_input = [&](const fs::path& path) {
    if (!path.empty()) io.inputs.push_back(path);
  };
  auto domain_files = [&] {
    const auto& prefix = require(p.domains, "domains");
    return std::vector<fs::path>{domains::centroids_path(prefix), domains::assignment_path(prefix),
                                 domains::words_path(prefix)};
  };
  auto mf_files = [&] {
    const auto& prefix = require(p.mf, "mf");
    return std::vector<fs::path>{with_suffix(prefix, ".w"), with_suffix(prefix, ".h"), with_suffix(prefix, ".meta")};
  };
  switch (s) {
    case Stage::ingest:
      io.inputs = {require(p.dump, "dump")};
      io.outputs = {require(p.corpus, "corpus")};
      if (cfg.holdout > 0) io.outputs.push_back(require(p.queries, "queries"));
      break;
    case Stage::prep:
      io.inputs = {require(p.corpus, "corpus")};
      optional_input(p.stopwords);
      optional_input(p.dictionary);
      optional_input(p.comment_rules);
      io.outputs = {require(p.prepared, "prepared")};
      break;
    case Stage::embed:
      io.inputs = {require(p.prepared, "prepared")};
      optional_input(p.extra_text);
      io.outputs = {require(p.embeddings, "embeddings")};
      if (!p.embeddings_full.empty()) io.outputs.push_back(p.embeddings_full);
      break;
    case Stage::vectorize:
      io.inputs = {require(p.prepared, "prepared"), require(p.embeddings, "embeddings")};
      io.outputs = {require(p.vectors, "vectors")};
      break;
    case Stage::domains:
      io.inputs = {require(p.embeddings, "embeddings"), require(p.vectors, "vectors")};
      io.outputs = domain_files();
      break;
    case Stage::mf:
      io.inputs = {require(p.prepared, "prepared")};
      io.outputs = mf_files();
      break;
    case Stage::index: {
      io.inputs = {require(p.prepared, "prepared"), require(p.embeddings, "embeddings")};
      for (auto& f : domain_files()) io.inputs.push_back(f);
      for (auto& f : mf_files()) io.inputs.push_back(f);
      io.outputs = {require(p.index, "index")};
      break;
    }
    case Stage::query:
      io.inputs = {require(p.index, "index")};
      if (!cfg.query.jaccard) io.inputs.push_back(require(p.embeddings, "embeddings"));
      break;
    case Stage::eval:
      io.inputs = {require(p.prepared, "prepared"), require(p.embeddings, "embeddings")};
      for (auto& f : domain_files()) io.inputs.push_back(f);
      io.inputs.push_back(require(p.queries, "queries"));
      io.outputs = {require(p.report, "report"), csv_path(p.report)};
      break;
  }
  return io;
}

void validate_graph(std::span<const Stage> stages, const PipelineConfig& cfg) {
  std::set<fs::path> produced;
  for (auto s : stages) {
    const auto io = stage_io(s, cfg);
    for (const auto& in : io.inputs)
      if (!produced.contains(in.lexically_normal()) && !fs::exists(in)) throw MissingInput(in);
    for (const auto& out : io.outputs) produced.insert(out.lexically_normal());
  }
}

void execute_stage(Stage s, const PipelineConfig& cfg, std::ostream& out, std::ostream& log) {
  switch (s) {
    case Stage::ingest: return run_ingest(cfg, log);
    case Stage::prep: return run_prep(cfg, log);
    case Stage::embed: return run_embed(cfg, log);
    case Stage::vectorize: return run_vectorize(cfg, log);
    case Stage::domains: return run_domains(cfg, log);
    case Stage::mf: return run_mf(cfg, log);
    case Stage::index: return run_index(cfg, log);
    case Stage::query: return run_query(cfg, out);
    case Stage::eval: return run_eval(cfg, out, log);
  }
}

int run_stages(std::span<const Stage> stages, const PipelineConfig& cfg, bool dry_run, std::ostream& out,
               std::ostream& err) {
  try {
    validate_graph(stages, cfg);
    if (dry_run) {
      for (auto s : stages) {
        const auto io = stage_io(s, cfg);
        out << stage_name(s) << ':';
        for (const auto& o : io.outputs) out << ' ' << o.string();
        out << '\n';
      }
      return 0;
    }
    for (auto s : stages) execute_stage(s, cfg, out, err);
    return 0;
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cqa::pipeline
