// Command-line front end.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "corpusforge/corpusforge.hpp"

namespace cf = corpusforge;
using nlohmann::json;

namespace {

std::vector<std::string> read_text_lines(const cf::fs::path& p) { return cf::read_lines(p); }

std::vector<cf::SentencePair> read_pairs(const cf::fs::path& p) {
  std::vector<cf::SentencePair> out;
  cf::LineReader reader(p);
  std::string line;
  while (reader.next(line)) {
    try {
      out.push_back(cf::parse_tsv(line));
    } catch (const cf::FormatError& e) {
      throw cf::FormatError(p.string() + ": " + e.what(), reader.lines_read());
    }
  }
  return out;
}

void write_pairs(const cf::fs::path& p, const std::vector<cf::SentencePair>& pairs) {
  cf::AtomicFileWriter w(p);
  for (const auto& pair : pairs) w.write_line(cf::format_tsv(pair));
  w.commit();
}

cf::filters::FilterRegistry load_registry(const std::optional<std::string>& dir) {
  if (!dir) return {};
  auto d = cf::filters::discover_filters(*dir);
  for (const auto& msg : d.diagnostics) std::cerr << "warning: skipped filter descriptor " << msg << "\n";
  return std::move(d.registry);
}

cf::filters::FilterPipeline pipeline_for(const cf::fs::path& tsv, const std::optional<std::string>& explicit_path) {
  const cf::fs::path p = explicit_path ? cf::fs::path(*explicit_path) : cf::layout::pipeline_path(tsv);
  if (!cf::fs::exists(p)) {
    if (explicit_path) throw cf::IoError("pipeline file not found: " + p.string());
    return {cf::layout::dataset_name(tsv), {}};
  }
  return cf::filters::load_pipeline(p);
}

cf::filters::FilterReport clean_one(const cf::filters::FilterRegistry& reg, const cf::fs::path& tsv,
                                    const cf::filters::FilterPipeline& pipeline, const cf::fs::path& out, std::size_t workers,
                                    std::size_t chunk) {
  cf::filters::BatchOptions opts;
  opts.workers = workers;
  opts.chunk_lines = chunk;
  if (!out.parent_path().empty()) cf::fs::create_directories(out.parent_path());
  return cf::filters::apply_pipeline_batch(reg, pipeline, tsv, out, opts);
}

cf::fs::path default_clean_output(const cf::fs::path& tsv) {
  return tsv.parent_path() / "filtered" / (cf::layout::dataset_name(tsv) + ".tsv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpusforge: parallel-corpus tailoring, curriculum feeding and robustness evaluation"};
  app.require_subcommand(1);

  // fetch
  auto* fetch = app.add_subcommand("fetch", "download catalog datasets for a language pair");
  std::string catalog_path, langs, dest;
  std::vector<std::string> only;
  std::size_t fetch_workers = 4;
  fetch->add_option("--catalog", catalog_path, "catalog file (JSON Lines)")->required();
  fetch->add_option("--langs", langs, "language pair, e.g. fr-en")->required();
  fetch->add_option("--dest", dest, "destination directory")->required();
  fetch->add_option("--only", only, "restrict to these dataset names");
  fetch->add_option("--workers", fetch_workers, "parallel downloads")->check(CLI::PositiveNumber);

  // label
  auto* label_cmd = app.add_subcommand("label", "set the label of a local dataset");
  std::string label_tsv, label_value;
  label_cmd->add_option("dataset", label_tsv, "dataset TSV")->required();
  label_cmd->add_option("label", label_value, "label text")->required();

  // filters
  auto* filters_cmd = app.add_subcommand("filters", "list available filters as JSON");
  std::optional<std::string> filters_dir;
  filters_cmd->add_option("--filters-dir", filters_dir, "directory of external filter descriptors");

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "print the pipeline document stored next to a dataset");
  std::string pipeline_tsv;
  pipeline_cmd->add_option("--dataset", pipeline_tsv, "dataset TSV")->required();

  // clean
  auto* clean = app.add_subcommand("clean", "run a dataset's pipeline over the whole file");
  std::string clean_tsv;
  std::optional<std::string> clean_out, clean_pipeline;
  std::size_t workers = 1, chunk = 100000;
  clean->add_option("--dataset", clean_tsv, "dataset TSV")->required();
  clean->add_option("--pipeline", clean_pipeline, "pipeline file (default: <dataset>.filters.json)");
  clean->add_option("--output", clean_out, "output TSV (default: <dir>/filtered/<name>.tsv)");
  clean->add_option("--workers", workers, "parallel chunks")->check(CLI::PositiveNumber);
  clean->add_option("--chunk", chunk, "lines per chunk")->check(CLI::PositiveNumber);
  clean->add_option("--filters-dir", filters_dir, "directory of external filter descriptors");

  // clean-all
  auto* clean_all = app.add_subcommand("clean-all", "clean every dataset in a directory that has a pipeline");
  std::string clean_dir;
  clean_all->add_option("--dir", clean_dir, "dataset directory")->required();
  clean_all->add_option("--workers", workers, "parallel chunks")->check(CLI::PositiveNumber);
  clean_all->add_option("--chunk", chunk, "lines per chunk")->check(CLI::PositiveNumber);
  clean_all->add_option("--filters-dir", filters_dir, "directory of external filter descriptors");

  // dedupe
  auto* dedupe = app.add_subcommand("dedupe", "remove duplicate pairs across datasets, keeping the split");
  std::string dedupe_out;
  std::vector<std::string> dedupe_inputs;
  dedupe->add_option("out-dir", dedupe_out, "output directory")->required();
  dedupe->add_option("inputs", dedupe_inputs, "input TSVs, in priority order")->required();

  // sample
  auto* sample = app.add_subcommand("sample", "print a preview sample of a dataset");
  std::string sample_tsv;
  cf::filters::SampleOptions sample_opts;
  sample->add_option("dataset", sample_tsv, "dataset TSV")->required();
  sample->add_option("--n", sample_opts.size, "sample size");
  sample->add_option("--head", sample_opts.head, "lines from the start");
  sample->add_option("--tail", sample_opts.tail, "lines from the end");
  sample->add_option("--seed", sample_opts.seed, "seed for the middle lines");

  // train-feed
  auto* feed = app.add_subcommand("train-feed", "stream the configured curriculum");
  std::string feed_config;
  std::optional<std::string> feed_resume, feed_output, feed_state;
  std::uint64_t feed_limit = 0;
  feed->add_option("--config", feed_config, "curriculum configuration (YAML)")->required();
  feed->add_option("--resume", feed_resume, "continue from this state snapshot");
  feed->add_option("--output", feed_output, "output file, or - for stdout");
  feed->add_option("--state-file", feed_state, "where snapshots are written");
  feed->add_option("--limit", feed_limit, "stop after this many lines");

  // testset
  auto* testset = app.add_subcommand("testset", "build a robustness variant of a test set");
  std::string ts_base, ts_kind, ts_out;
  std::optional<std::string> ts_scores;
  std::uint64_t ts_seed = 0;
  std::size_t ts_k = 1500;
  testset->add_option("--base", ts_base, "base test set TSV")->required();
  testset->add_option("--kind", ts_kind, "plain, title_case, all_caps, typo4, emoji, unicode_noise or url")->required();
  testset->add_option("--seed", ts_seed, "seed");
  testset->add_option("--out", ts_out, "output TSV")->required();
  testset->add_option("--scores", ts_scores, "url kind: one quality score per base line");
  testset->add_option("--k", ts_k, "url kind: number of pairs to keep");

  // score
  auto* score = app.add_subcommand("score", "compute an evaluation metric");
  std::string sc_metric, sc_hyp, sc_ref;
  std::optional<std::string> sc_alphabet;
  score->add_option("--metric", sc_metric, "url, chrf or chrf-oov")->required()->check(CLI::IsMember({"url", "chrf", "chrf-oov"}));
  score->add_option("--hyp", sc_hyp, "hypotheses, one per line")->required();
  score->add_option("--ref", sc_ref, "references, one per line")->required();
  score->add_option("--alphabet", sc_alphabet, "chrf-oov: file whose characters form the known alphabet");

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  cf::service::ServiceConfig svc;
  std::string svc_data;
  std::optional<std::string> svc_catalog;
  serve->add_option("--data-dir", svc_data, "dataset directory")->required();
  serve->add_option("--filters-dir", filters_dir, "directory of external filter descriptors");
  serve->add_option("--catalog", svc_catalog, "catalog file for search/download");
  serve->add_option("--host", svc.host, "listen address");
  serve->add_option("--port", svc.port, "listen port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fetch) {
      const auto dash = langs.find('-');
      if (dash == std::string::npos) throw cf::ConfigError("--langs must look like src-trg");
      const auto cat = cf::catalog::load_catalog(catalog_path);
      auto wanted = cf::catalog::search_datasets(cat, langs.substr(0, dash), langs.substr(dash + 1));
      if (!only.empty()) {
        std::vector<cf::catalog::DatasetDescriptor> filtered;
        for (const auto& name : only) {
          auto it = std::find_if(wanted.begin(), wanted.end(), [&](const auto& d) { return d.name == name; });
          if (it == wanted.end()) throw cf::ConfigError("catalog has no " + langs + " dataset named '" + name + "'");
          filtered.push_back(*it);
        }
        wanted = std::move(filtered);
      }
      cf::fs::create_directories(dest);
      int failures = 0;
      for (const auto& o : cf::catalog::download_all(wanted, dest, fetch_workers)) {
        if (!o.error.empty()) {
          ++failures;
          std::cerr << o.name << ": FAILED: " << o.error << "\n";
          continue;
        }
        std::cout << o.name << "\t" << o.dataset->line_count << "\t" << o.dataset->path.string() << "\n";
        for (const auto& w : o.dataset->warnings) std::cerr << o.name << ": warning: " << w << "\n";
      }
      return failures ? 1 : 0;
    }

    if (*label_cmd) {
      const auto d = cf::catalog::set_label(cf::catalog::open_local(label_tsv), label_value);
      std::cout << cf::layout::dataset_name(d.path) << "\t" << *d.label << "\n";
      return 0;
    }

    if (*filters_cmd) {
      const auto reg = load_registry(filters_dir);
      json list = json::array();
      for (const auto& f : reg.all()) list.push_back(cf::filters::to_json(f));
      std::cout << list.dump(2) << "\n";
      return 0;
    }

    if (*pipeline_cmd) {
      std::cout << cf::filters::to_json(pipeline_for(pipeline_tsv, std::nullopt)).dump(2) << "\n";
      return 0;
    }

    if (*clean) {
      const auto reg = load_registry(filters_dir);
      const cf::fs::path tsv = clean_tsv;
      const auto out = clean_out ? cf::fs::path(*clean_out) : default_clean_output(tsv);
      const auto report = clean_one(reg, tsv, pipeline_for(tsv, clean_pipeline), out, workers, chunk);
      std::cout << cf::filters::to_json(report).dump(2) << "\n";
      return 0;
    }

    if (*clean_all) {
      const auto reg = load_registry(filters_dir);
      json reports = json::array();
      for (const auto& tsv : cf::layout::list_datasets(clean_dir)) {
        if (!cf::fs::exists(cf::layout::pipeline_path(tsv))) {
          std::cerr << cf::layout::dataset_name(tsv) << ": no pipeline, skipped\n";
          continue;
        }
        reports.push_back(cf::filters::to_json(
            clean_one(reg, tsv, pipeline_for(tsv, std::nullopt), default_clean_output(tsv), workers, chunk)));
      }
      std::cout << reports.dump(2) << "\n";
      return 0;
    }

    if (*dedupe) {
      std::vector<cf::fs::path> inputs(dedupe_inputs.begin(), dedupe_inputs.end());
      std::cout << cf::filters::to_json(cf::filters::dedupe(inputs, dedupe_out)).dump(2) << "\n";
      return 0;
    }

    if (*sample) {
      for (const auto& l : cf::filters::sample_dataset(sample_tsv, sample_opts).lines()) std::cout << l << "\n";
      return 0;
    }

    if (*feed) {
      auto cfg = cf::scheduler::load_config(feed_config);
      std::optional<std::string> output = feed_output ? feed_output : cfg.output;
      const bool to_stdout = !output || *output == "-";
      cf::scheduler::Scheduler sched(cfg);
      std::optional<cf::scheduler::CurriculumState> resume;
      if (feed_resume) {
        resume = cf::scheduler::load_state(*feed_resume);
        sched.restore(*resume);
      }
      cf::scheduler::RunOptions opts;
      opts.limit = feed_limit;
      if (feed_state)
        opts.state_file = *feed_state;
      else if (feed_resume)
        opts.state_file = *feed_resume;
      else if (!to_stdout)
        opts.state_file = *output + ".state";
      else
        opts.state_file = "train-feed.state.json";

      cf::scheduler::CurriculumState final_state;
      if (!to_stdout) {
        std::ofstream out(*output, std::ios::binary | (resume ? std::ios::app : std::ios::trunc));
        if (!out) throw cf::IoError("cannot open " + *output);
        final_state = cf::scheduler::run(sched, out, opts);
      } else if (cfg.trainer && !feed_output) {
        cf::ChildSink sink(cf::shell_command(*cfg.trainer));
        cf::ChildSinkBuf buf(sink);
        std::ostream out(&buf);
        final_state = cf::scheduler::run(sched, out, opts);
        out.flush();
        const auto result = sink.finish();
        if (!result.ok()) throw cf::Error("trainer " + result.describe());
      } else {
        std::ios::sync_with_stdio(false);
        final_state = cf::scheduler::run(sched, std::cout, opts);
      }
      std::cerr << "emitted " << final_state.lines_emitted << " lines"
                << (final_state.completed ? " (curriculum complete)" : "") << "; state in " << opts.state_file->string()
                << "\n";
      return 0;
    }

    if (*testset) {
      const auto base = read_pairs(ts_base);
      std::vector<cf::SentencePair> out;
      if (ts_kind == "url") {
        if (!ts_scores) throw cf::ConfigError("--kind url needs --scores");
        const auto score_lines = read_text_lines(*ts_scores);
        if (score_lines.size() != base.size())
          throw cf::FormatError("scores file has " + std::to_string(score_lines.size()) + " lines, base has " +
                                std::to_string(base.size()));
        std::vector<cf::eval::ScoredPair> scored;
        for (std::size_t i = 0; i < base.size(); ++i) {
          try {
            scored.push_back({base[i], std::stod(score_lines[i])});
          } catch (const std::exception&) {
            throw cf::FormatError("score is not a number", i + 1);
          }
        }
        auto built = cf::eval::build_url_testset(scored, ts_k);
        for (const auto& r : built.rejected) std::cerr << "line " << r.index + 1 << ": rejected: " << r.reason << "\n";
        out = std::move(built.pairs);
      } else {
        out = cf::eval::make_variant(base, cf::eval::parse_variant_kind(ts_kind), ts_seed);
      }
      write_pairs(ts_out, out);
      std::cerr << "wrote " << out.size() << " pairs to " << ts_out << "\n";
      return 0;
    }

    if (*score) {
      const auto hyps = read_text_lines(sc_hyp);
      const auto refs = read_text_lines(sc_ref);
      double value = 0;
      if (sc_metric == "url") {
        value = cf::eval::url_exact_match(hyps, refs);
      } else if (sc_metric == "chrf") {
        value = cf::eval::corpus_chrf(hyps, refs);
      } else {
        std::set<char32_t> alphabet;
        if (sc_alphabet) alphabet = cf::eval::alphabet_from_text(cf::read_file(*sc_alphabet));
        value = cf::eval::chrf_oov_only(hyps, refs, alphabet);
      }
      std::printf("%s\t%.6f\n", sc_metric.c_str(), value);
      return 0;
    }

    if (*serve) {
      svc.data_dir = svc_data;
      if (filters_dir) svc.filters_dir = *filters_dir;
      if (svc_catalog) svc.catalog = *svc_catalog;
      cf::service::Service service(svc);
      const int port = service.bind();
      std::cerr << "listening on http://" << svc.host << ":" << port << "\n";
      service.listen();
      return 0;
    }
  } catch (const cf::PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.stderr_text().empty()) std::cerr << "--- stderr of '" << e.step() << "' ---\n" << e.stderr_text() << "\n";
    return 1;
  } catch (const cf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
