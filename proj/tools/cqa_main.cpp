// cqa: command-line front end for the expert recommendation pipeline.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqa/embeddings.hpp"
#include "cqa/pipeline.hpp"
#include "cqa/synth.hpp"
#include "cqa/textio.hpp"

namespace fs = std::filesystem;
using namespace cqa;
using pipeline::PipelineConfig;
using pipeline::Stage;

namespace {

int run_one(Stage stage, const PipelineConfig& cfg) {
  const Stage stages[] = {stage};
  return pipeline::run_stages(stages, cfg, false, std::cout, std::cerr);
}

std::vector<double> parse_lambdas(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : textio::split(s, ',')) out.push_back(textio::parse_double(textio::trim(part), "lambda"));
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : textio::split(s, ','))
    out.push_back(static_cast<int>(textio::parse_int(textio::trim(part), "k candidate")));
  return out;
}

void write_synth(const fs::path& dir, const synth::SynthConfig& cfg) {
  const auto corpus = synth::generate(cfg);
  fs::create_directories(dir);
  textio::write_file_atomic(dir / "Posts.xml", [&](std::ostream& out) { synth::write_posts_xml(corpus.posts, out); });
  textio::write_file_atomic(dir / "queries.jsonl", [&](std::ostream& out) { eval::save_queries(corpus.queries, out); });
  textio::write_file_atomic(dir / "dictionary.txt", [&](std::ostream& out) {
    for (const auto& w : corpus.dictionary) out << w << '\n';
  });
  textio::write_file_atomic(dir / "pipeline.ini", [&](std::ostream& out) {
    out << "[global]\nseed = " << cfg.seed << "\n\n"
        << "[paths]\ndump = Posts.xml\ncorpus = work/corpus.jsonl\nprepared = work/prepared.jsonl\n"
        << "dictionary = dictionary.txt\nembeddings = work/embeddings.txt\nembeddings_full = work/embeddings_full.txt\n"
        << "vectors = work/vectors.txt\ndomains = work/domains\nmf = work/mf\nindex = work/index.jsonl\n"
        << "queries = queries.jsonl\nreport = work/report.json\n\n"
        << "[embed]\ndim = 32\nepochs = 15\nmin_count = 2\nwindow = 5\nsubsample = 0\n\n"
        << "[domains]\nk = " << cfg.domains << "\n\n"
        << "[mf]\nrank = 8\n\n"
        << "[index]\nlambda = 0\n\n"
        << "[eval]\nfolds = 3\nlambdas = 0,0.5,1\ntop = 10\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expert recommendation for community question answering"};
  app.set_version_flag("--version", std::string("cqa ") + CQA_VERSION);
  app.require_subcommand(1);

  PipelineConfig cfg = pipeline::default_config();
  int status = 0;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Filter a Posts.xml dump into a corpus file");
  ingest->add_option("--posts", cfg.paths.dump, "Posts.xml path")->required();
  ingest->add_option("--out", cfg.paths.corpus, "corpus output")->required();
  ingest->add_option("--min-score", cfg.filter.min_score, "keep answers scoring above this");
  ingest->add_option("--top-answers", cfg.filter.top_answers, "answers kept per question");
  ingest->add_option("--holdout", cfg.holdout, "questions to set aside as evaluation queries");
  ingest->add_option("--queries", cfg.paths.queries, "held-out query output");
  ingest->add_option("--seed", cfg.holdout_seed, "hold-out seed");
  ingest->callback([&] { status = run_one(Stage::ingest, cfg); });

  // prep
  auto* prep = app.add_subcommand("prep", "Tokenise and filter a corpus");
  prep->add_option("--corpus", cfg.paths.corpus, "corpus file")->required();
  prep->add_option("--out", cfg.paths.prepared, "prepared corpus output")->required();
  prep->add_option("--stopwords", cfg.paths.stopwords, "stopword list");
  prep->add_option("--dictionary", cfg.paths.dictionary, "dictionary word list");
  prep->add_option("--comment-rules", cfg.paths.comment_rules, "comment syntax table");
  prep->callback([&] { status = run_one(Stage::prep, cfg); });

  // embed
  auto* embed = app.add_subcommand("embed", "Word embeddings");
  embed->require_subcommand(1);
  auto* train = embed->add_subcommand("train", "Train skip-gram embeddings on a prepared corpus");
  train->add_option("--corpus", cfg.paths.prepared, "prepared corpus")->required();
  train->add_option("--out", cfg.paths.embeddings, "embedding output")->required();
  train->add_option("--full-out", cfg.paths.embeddings_full, "unrestricted table when a dictionary is set");
  train->add_option("--extra-text", cfg.paths.extra_text, "plain-text sentences added to training");
  train->add_option("--dim", cfg.embed.dim);
  train->add_option("--window", cfg.embed.window);
  train->add_option("--negatives", cfg.embed.negatives);
  train->add_option("--epochs", cfg.embed.epochs);
  train->add_option("--lr", cfg.embed.initial_learning_rate);
  train->add_option("--min-count", cfg.embed.min_count);
  train->add_option("--subsample", cfg.embed.subsample_threshold);
  train->add_option("--threads", cfg.embed.threads);
  train->add_option("--seed", cfg.embed.seed);
  train->callback([&] { status = run_one(Stage::embed, cfg); });

  fs::path filter_in, filter_dict, filter_out;
  auto* filter = embed->add_subcommand("filter", "Restrict an embedding table to a dictionary");
  filter->add_option("--in", filter_in)->required();
  filter->add_option("--dictionary", filter_dict)->required();
  filter->add_option("--out", filter_out)->required();
  filter->callback([&] {
    try {
      std::ifstream in(filter_in);
      if (!in) throw pipeline::MissingInput(filter_in);
      const auto table = embed::restrict_vocabulary(embed::load_embeddings(in), textio::read_word_list_file(filter_dict));
      textio::write_file_atomic(filter_out, [&](std::ostream& out) { embed::save_embeddings(table, out); });
    } catch (const pipeline::MissingInput& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
    }
  });

  // vectorize
  auto* vectorize = app.add_subcommand("vectorize", "Summarise posts as document vectors");
  vectorize->add_option("--corpus", cfg.paths.prepared, "prepared corpus")->required();
  vectorize->add_option("--embeddings", cfg.paths.embeddings)->required();
  vectorize->add_option("--out", cfg.paths.vectors)->required();
  vectorize->callback([&] { status = run_one(Stage::vectorize, cfg); });

  // domains
  std::string k_text = "auto", k_candidates;
  auto* domains = app.add_subcommand("domains", "Knowledge domains");
  domains->require_subcommand(1);
  auto* dbuild = domains->add_subcommand("build", "Cluster word vectors and assign questions");
  dbuild->add_option("--embeddings", cfg.paths.embeddings)->required();
  dbuild->add_option("--corpus-vectors", cfg.paths.vectors)->required();
  dbuild->add_option("--out", cfg.paths.domains, "output prefix")->required();
  dbuild->add_option("--k", k_text, "cluster count or auto");
  dbuild->add_option("--k-candidates", k_candidates, "comma-separated candidates for auto");
  dbuild->add_option("--k-min-useful", cfg.domains.selection.k_min_useful);
  dbuild->add_option("--restarts", cfg.domains.selection.restarts);
  dbuild->add_option("--seed", cfg.domains.seed);
  dbuild->callback([&] {
    try {
      if (k_text == "auto")
        cfg.domains.k.reset();
      else
        cfg.domains.k = static_cast<int>(textio::parse_int(k_text, "--k"));
      if (!k_candidates.empty()) cfg.domains.k_candidates = parse_ints(k_candidates);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
      return;
    }
    status = run_one(Stage::domains, cfg);
  });

  // mf
  auto* mf = app.add_subcommand("mf", "Factorize the question x user vote matrix");
  mf->add_option("--corpus", cfg.paths.prepared, "prepared corpus")->required();
  mf->add_option("--out", cfg.paths.mf, "output prefix")->required();
  mf->add_option("--rank", cfg.nmf.rank);
  mf->add_option("--alpha", cfg.nmf.alpha);
  mf->add_option("--rho", cfg.nmf.rho);
  mf->add_option("--tol", cfg.nmf.tol);
  mf->add_option("--max-iter", cfg.nmf.max_iter);
  mf->add_option("--seed", cfg.nmf.seed);
  mf->callback([&] { status = run_one(Stage::mf, cfg); });

  // index
  auto* index = app.add_subcommand("index", "Expert index");
  index->require_subcommand(1);
  auto* ibuild = index->add_subcommand("build", "Join corpus, vectors, domains and factors");
  ibuild->add_option("--corpus", cfg.paths.prepared, "prepared corpus")->required();
  ibuild->add_option("--embeddings", cfg.paths.embeddings)->required();
  ibuild->add_option("--domains", cfg.paths.domains, "domain model prefix")->required();
  ibuild->add_option("--mf", cfg.paths.mf, "factorization prefix")->required();
  ibuild->add_option("--out", cfg.paths.index)->required();
  ibuild->add_option("--lambda", cfg.lambda);
  ibuild->callback([&] { status = run_one(Stage::index, cfg); });

  // query
  std::string baseline, format = "text";
  double query_lambda = -1.0;
  auto* query = app.add_subcommand("query", "Recommend experts for a question");
  query->add_option("--index", cfg.paths.index)->required();
  query->add_option("--embeddings", cfg.paths.embeddings);
  query->add_option("-q,--query", cfg.query.text, "question text")->required();
  query->add_option("--top", cfg.query.top, "experts to return");
  query->add_option("--lambda", query_lambda, "re-blend the stored scores");
  query->add_option("--baseline", baseline)->check(CLI::IsMember({"jaccard"}));
  query->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
  query->callback([&] {
    cfg.query.jaccard = baseline == "jaccard";
    cfg.query.json = format == "json";
    if (query_lambda >= 0.0) cfg.query.lambda = query_lambda;
    if (!cfg.query.jaccard && cfg.paths.embeddings.empty()) {
      std::cerr << "error: --embeddings is required unless --baseline jaccard\n";
      status = 1;
      return;
    }
    status = run_one(Stage::query, cfg);
  });

  // eval
  std::string eval_lambdas = "0,0.5,1", eval_format = "text";
  auto* eval = app.add_subcommand("eval", "k-fold evaluation of both recommenders");
  eval->add_option("--corpus", cfg.paths.prepared, "prepared corpus")->required();
  eval->add_option("--queries", cfg.paths.queries)->required();
  eval->add_option("--embeddings", cfg.paths.embeddings)->required();
  eval->add_option("--domains", cfg.paths.domains, "domain model prefix")->required();
  eval->add_option("--report", cfg.paths.report)->required();
  eval->add_option("--folds", cfg.eval.folds);
  eval->add_option("--lambda", eval_lambdas, "comma-separated grid");
  eval->add_option("--top", cfg.eval.top);
  eval->add_option("--seed", cfg.eval.seed);
  eval->add_option("--rank", cfg.nmf.rank);
  eval->add_option("--alpha", cfg.nmf.alpha);
  eval->add_option("--rho", cfg.nmf.rho);
  eval->add_option("--format", eval_format)->check(CLI::IsMember({"text", "json"}));
  eval->callback([&] {
    try {
      cfg.eval.lambdas = parse_lambdas(eval_lambdas);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
      return;
    }
    cfg.eval.nmf = cfg.nmf;
    cfg.eval_json = eval_format == "json";
    status = run_one(Stage::eval, cfg);
  });

  // synth
  synth::SynthConfig scfg;
  fs::path synth_dir;
  auto* syn = app.add_subcommand("synth", "Write a planted-expert corpus with queries and a pipeline config");
  syn->add_option("--out-dir", synth_dir)->required();
  syn->add_option("--domains", scfg.domains);
  syn->add_option("--questions", scfg.questions);
  syn->add_option("--queries", scfg.queries);
  syn->add_option("--words", scfg.words_per_domain, "canonical words per domain");
  syn->add_option("--synonym-rate", scfg.synonym_rate, "chance a query word becomes its synonym");
  syn->add_option("--seed", scfg.seed);
  syn->callback([&] {
    try {
      write_synth(synth_dir, scfg);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
    }
  });

  // pipeline
  fs::path config_path;
  std::vector<std::string> stage_names, overrides;
  bool dry_run = false;
  auto* pipe = app.add_subcommand("pipeline", "Run stages from a config file");
  pipe->require_subcommand(1);
  auto* run = pipe->add_subcommand("run", "Run the configured stages in order");
  run->add_option("--config", config_path)->required();
  run->add_option("--stage", stage_names, "stage to run (repeatable); default: every configured stage");
  run->add_option("--set", overrides, "override section.key=value");
  run->add_flag("--dry-run", dry_run, "validate inputs and outputs without running");
  run->callback([&] {
    try {
      // Relative paths in the config resolve against the config's directory.
      const auto base = fs::absolute(config_path).parent_path();
      auto pc = pipeline::load_config(config_path, overrides);
      for (auto* p : {&pc.paths.dump, &pc.paths.corpus, &pc.paths.prepared, &pc.paths.embeddings,
                      &pc.paths.embeddings_full, &pc.paths.vectors, &pc.paths.domains, &pc.paths.mf, &pc.paths.index,
                      &pc.paths.queries, &pc.paths.report, &pc.paths.stopwords, &pc.paths.dictionary,
                      &pc.paths.comment_rules, &pc.paths.extra_text})
        if (!p->empty() && p->is_relative()) *p = base / *p;

      std::vector<Stage> stages;
      for (const auto& name : stage_names) {
        auto s = pipeline::stage_from_name(name);
        if (!s) throw InvalidArgument("unknown stage '" + name + "'");
        stages.push_back(*s);
      }
      if (stages.empty()) {
        stages = {Stage::ingest, Stage::prep, Stage::embed, Stage::vectorize, Stage::domains, Stage::mf, Stage::index};
        if (!pc.query.text.empty()) stages.push_back(Stage::query);
        if (!pc.paths.report.empty() && !pc.paths.queries.empty()) stages.push_back(Stage::eval);
      }
      status = pipeline::run_stages(stages, pc, dry_run, std::cout, std::cerr);
    } catch (const pipeline::MissingInput& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return status;
}
