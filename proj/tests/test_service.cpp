#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

#include "support.hpp"

using namespace corpusforge;
using namespace corpusforge::service;

namespace {

struct Reply {
  int status = 0;
  json body;
};

class Api {
 public:
  explicit Api(std::function<void(ServiceConfig&)> tweak = {}) {
    data_ = data_root_.path();
    filters_ = filter_root_.path();
    cftest::write_external_filters(filters_);
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.data_dir = data_;
    cfg.filters_dir = filters_;
    cfg.clean_chunk_lines = 7;
    if (tweak) tweak(cfg);
    service_ = std::make_unique<Service>(cfg);
    port_ = service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(60, 0);
  }

  Reply get(const std::string& path) { return wrap(client_->Get(path)); }
  Reply put(const std::string& path, const json& body) { return wrap(client_->Put(path, body.dump(), "application/json")); }
  Reply post(const std::string& path, const json& body) { return wrap(client_->Post(path, body.dump(), "application/json")); }
  Reply post_raw(const std::string& path, const std::string& body) { return wrap(client_->Post(path, body, "application/json")); }

  json wait_job(const std::string& id) {
    for (int i = 0; i < 600; ++i) {
      auto r = get("/api/jobs/" + id);
      if (r.body["status"] == "succeeded" || r.body["status"] == "failed") return r.body;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ADD_FAILURE() << "job " << id << " did not finish";
    return {};
  }

  const fs::path& data() const { return data_; }
  const fs::path& filters() const { return filters_; }
  Service& service() { return *service_; }

 private:
  static Reply wrap(const httplib::Result& r) {
    if (!r) return {-1, nullptr};
    Reply out{r->status, nullptr};
    out.body = json::parse(r->body, nullptr, false);
    return out;
  }

  TempDir data_root_, filter_root_;
  fs::path data_, filters_;
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

bool is_error(const Reply& r, int status, const std::string& code) {
  return r.status == status && r.body.is_object() && r.body.contains("error") && r.body["error"]["code"] == code &&
         r.body["error"]["message"].is_string() && r.body.size() == 1;
}

}  // namespace

TEST(Service, EmptyDataDirListsNothing) {
  Api api;
  const auto r = api.get("/api/datasets");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["datasets"], json::array());
  EXPECT_EQ(r.body["version"], 1);
}

TEST(Service, StartupErrors) {
  EXPECT_THROW(Service({"127.0.0.1", 0, "/nonexistent-dir"}), ConfigError);
  Api api;
  ServiceConfig clash;
  clash.port = api.service().port();
  clash.data_dir = api.data();
  Service second(clash);
  EXPECT_THROW(second.bind(), IoError);
}

TEST(Service, ListsDatasetsAndSetsLabels) {
  Api api;
  cftest::make_dataset(api.data(), "beta", 5);
  cftest::make_dataset(api.data(), "alpha", 3);
  auto r = api.get("/api/datasets");
  ASSERT_EQ(r.body["datasets"].size(), 2u);
  EXPECT_EQ(r.body["datasets"][0]["name"], "alpha");
  EXPECT_EQ(r.body["datasets"][0]["line_count"], 3);
  EXPECT_TRUE(r.body["datasets"][0]["label"].is_null());

  r = api.put("/api/datasets/alpha/label", {{"label", "clean"}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["label"], "clean");
  EXPECT_EQ(catalog::open_local(api.data() / "alpha.tsv").label, "clean");
  EXPECT_EQ(api.get("/api/datasets").body["datasets"][0]["label"], "clean");

  EXPECT_TRUE(is_error(api.put("/api/datasets/alpha/label", {{"label", 3}}), 400, "invalid_request"));
  EXPECT_TRUE(is_error(api.put("/api/datasets/ghost/label", {{"label", "x"}}), 404, "dataset_not_found"));
}

TEST(Service, SampleMatchesLibraryAndRejectsMissing) {
  Api api;
  const auto tsv = cftest::make_dataset(api.data(), "big", 500);
  const auto r = api.get("/api/datasets/big/sample?seed=4");
  ASSERT_EQ(r.status, 200);
  filters::SampleOptions o;
  o.seed = 4;
  const auto s = filters::sample_dataset(tsv, o);
  EXPECT_EQ(r.body["head"], json(s.head));
  EXPECT_EQ(r.body["middle"], json(s.middle));
  EXPECT_EQ(r.body["tail"], json(s.tail));
  EXPECT_EQ(r.body["total_lines"], 500);
  EXPECT_TRUE(is_error(api.get("/api/datasets/missing/sample"), 404, "dataset_not_found"));
  EXPECT_TRUE(is_error(api.get("/api/datasets/big/sample?seed=-1"), 400, "invalid_request"));
  EXPECT_TRUE(is_error(api.get("/api/datasets/bad%20name/sample"), 400, "invalid_name"));
  EXPECT_TRUE(is_error(api.get("/api/nothing/here"), 404, "not_found"));
}

TEST(Service, FiltersEndpointListsBuiltinsAndExternals) {
  Api api;
  cftest::write_text(api.filters() / "zz_broken.json", "{not json");
  const auto r = api.get("/api/filters");
  ASSERT_EQ(r.status, 200);
  std::set<std::string> names;
  for (const auto& f : r.body["filters"]) {
    names.insert(f["name"].get<std::string>());
    EXPECT_TRUE(f.contains("parameters"));
    EXPECT_TRUE(f.contains("scope"));
  }
  EXPECT_TRUE(names.count("max_length"));
  EXPECT_TRUE(names.count("drop_digits"));
  EXPECT_TRUE(names.count("head_n"));
  EXPECT_EQ(r.body["diagnostics"].size(), 1u);
}

TEST(Service, PipelineRoundTripsThroughTheFile) {
  Api api;
  const auto tsv = cftest::make_dataset(api.data(), "d", 10);
  auto r = api.get("/api/datasets/d/pipeline");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["steps"], json::array());

  const json doc{{"version", 1}, {"dataset", "d"},
                 {"steps", {{{"filter", "max_length"}, {"arguments", {{"max_length", 20}}}}, {{"filter", "drop_digits"}, {"arguments", json::object()}}}}};
  r = api.put("/api/datasets/d/pipeline", doc);
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(json::parse(read_file(layout::pipeline_path(tsv))), doc);
  EXPECT_EQ(api.get("/api/datasets/d/pipeline").body, doc);
  EXPECT_TRUE(api.get("/api/datasets").body["datasets"][0]["has_pipeline"].get<bool>());

  EXPECT_TRUE(is_error(api.put("/api/datasets/d/pipeline", {{"steps", {{{"filter", "nope"}}}}}), 400, "invalid_pipeline"));
  EXPECT_TRUE(is_error(api.put("/api/datasets/d/pipeline", {{"dataset", "other"}, {"steps", json::array()}}), 400,
                       "invalid_pipeline"));
  EXPECT_TRUE(is_error(api.put("/api/datasets/d/pipeline", {{"steps", {{{"filter", "head_n"}}}}}), 400, "invalid_pipeline"));
  // a rejected save leaves the file alone
  EXPECT_EQ(json::parse(read_file(layout::pipeline_path(tsv))), doc);
}

TEST(Service, PreviewEqualsDirectPipelineRun) {
  Api api;
  std::vector<std::string> lines;
  cftest::Gen g(6);
  for (int i = 0; i < 4000; ++i) lines.push_back(format_tsv(g.pair(false)));
  const auto tsv = api.data() / "mixed.tsv";
  cftest::write_lines(tsv, lines);
  const json pipeline{{"steps",
                       {{{"filter", "normalize_whitespace"}},
                        {{"filter", "max_length"}, {"arguments", {{"max_length", 40}}}},
                        {{"filter", "drop_digits"}},
                        {{"filter", "lower_src"}}}}};
  const auto r = api.post("/api/datasets/mixed/preview", {{"pipeline", pipeline}, {"seed", 3}});
  ASSERT_EQ(r.status, 200) << r.body.dump();

  filters::SampleOptions o;
  o.seed = 3;
  const auto sample = filters::sample_dataset(tsv, o).lines();
  auto doc = pipeline;
  doc["dataset"] = "mixed";
  const auto direct = filters::run_pipeline(filters::discover_filters(api.filters()).registry, filters::pipeline_from_json(doc), sample);
  EXPECT_EQ(r.body["stage_outputs"], json(direct));
  ASSERT_EQ(r.body["stage_outputs"].size(), 5u);
  EXPECT_EQ(r.body["stage_outputs"][0].size(), 3000u);  // never more than the sample
  // drop-only steps never grow the stream
  EXPECT_GE(r.body["stage_outputs"][1].size(), r.body["stage_outputs"][2].size());
  EXPECT_GE(r.body["stage_outputs"][2].size(), r.body["stage_outputs"][3].size());
  EXPECT_EQ(r.body["steps"], json({"normalize_whitespace", "max_length", "drop_digits", "lower_src"}));
}

TEST(Service, PreviewUsesSavedPipelineByDefault) {
  Api api;
  cftest::make_dataset(api.data(), "d", 30);
  api.put("/api/datasets/d/pipeline", {{"steps", {{{"filter", "head_n"}, {"arguments", {{"n", 4}}}}}}});
  const auto r = api.post("/api/datasets/d/preview", json::object());
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["stage_outputs"][1].size(), 4u);
}

TEST(Service, PreviewErrors) {
  Api api([](ServiceConfig& c) { c.preview_timeout = std::chrono::milliseconds(800); });
  cftest::make_dataset(api.data(), "d", 30);
  const auto failed = api.post("/api/datasets/d/preview", {{"pipeline", {{"steps", {{{"filter", "broken"}}}}}}});
  ASSERT_TRUE(is_error(failed, 422, "filter_failed")) << failed.body.dump();
  EXPECT_NE(failed.body["error"]["detail"]["stderr"].get<std::string>().find("model file missing"), std::string::npos);
  EXPECT_EQ(failed.body["error"]["detail"]["step"], "broken");

  const auto start = std::chrono::steady_clock::now();
  EXPECT_TRUE(is_error(api.post("/api/datasets/d/preview", {{"pipeline", {{"steps", {{{"filter", "slow"}}}}}}}), 504,
                       "preview_timeout"));
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));

  EXPECT_TRUE(is_error(api.post_raw("/api/datasets/d/preview", "{oops"), 400, "bad_request"));
  EXPECT_TRUE(is_error(api.post("/api/datasets/x/preview", json::object()), 404, "dataset_not_found"));
  EXPECT_TRUE(is_error(api.post("/api/datasets/d/preview", {{"pipeline", {{"steps", 5}}}}), 400, "invalid_pipeline"));
}

TEST(Service, ScriptLangidPreviewDropsPlantedRowsAndSaveMatchesFile) {
  Api api;
  std::vector<std::string> lines;
  std::set<std::string> planted;
  for (int i = 0; i < 200; ++i) {
    if (i % 10 == 5) {
      lines.push_back("Привет мир номер " + std::to_string(i) + "\thello world " + std::to_string(i));
      planted.insert(lines.back());
    } else {
      lines.push_back("bonjour le monde " + std::to_string(i) + "\thello world " + std::to_string(i));
    }
  }
  const auto tsv = api.data() / "web.tsv";
  cftest::write_lines(tsv, lines);
  const json pipeline{{"dataset", "web"},
                      {"version", 1},
                      {"steps", {{{"filter", "script_heuristic_langid"},
                                  {"arguments", {{"src_script", "Latin"}, {"trg_script", "Latin"}, {"threshold", 0.5}}}}}}};
  const auto r = api.post("/api/datasets/web/preview", {{"pipeline", pipeline}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto after = r.body["stage_outputs"][1].get<std::vector<std::string>>();
  EXPECT_EQ(after.size(), 180u);
  for (const auto& l : after) EXPECT_FALSE(planted.count(l)) << l;

  ASSERT_EQ(api.put("/api/datasets/web/pipeline", pipeline).status, 200);
  EXPECT_EQ(filters::to_json(filters::load_pipeline(layout::pipeline_path(tsv))), pipeline);
}

TEST(Service, CleanJobsRunInBackgroundAndReport) {
  Api api;
  std::vector<std::string> lines;
  for (int i = 0; i < 50; ++i) lines.push_back(i % 3 ? "word " + std::to_string(i) + "\tx" : "plain\ty");
  cftest::write_lines(api.data() / "a.tsv", lines);
  cftest::make_dataset(api.data(), "b", 20);
  api.put("/api/datasets/a/pipeline", {{"steps", {{{"filter", "drop_digits"}}}}});

  auto r = api.post("/api/jobs/clean", {{"datasets", {"a", "b"}}, {"workers", 3}});
  ASSERT_EQ(r.status, 202) << r.body.dump();
  const auto job = api.wait_job(r.body["job_id"]);
  ASSERT_EQ(job["status"], "succeeded") << job.dump();
  const auto& reports = job["result"]["reports"];
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0]["input_lines"], 50);
  EXPECT_EQ(reports[0]["output_lines"], 17);
  EXPECT_EQ(reports[1]["output_lines"], 20);
  EXPECT_EQ(read_lines(api.data() / "filtered" / "a.tsv").size(), 17u);
  EXPECT_TRUE(api.get("/api/datasets").body["datasets"][0]["cleaned"].get<bool>());

  EXPECT_TRUE(is_error(api.get("/api/jobs/job-999"), 404, "job_not_found"));
  EXPECT_TRUE(is_error(api.post("/api/jobs/clean", json::object()), 400, "invalid_request"));
  EXPECT_TRUE(is_error(api.post("/api/jobs/clean", {{"datasets", {"a"}}, {"workers", 0}}), 400, "invalid_request"));
  EXPECT_TRUE(is_error(api.post("/api/jobs/clean", {{"datasets", {"zzz"}}}), 404, "dataset_not_found"));
}

TEST(Service, FailingCleanJobReportsError) {
  Api api;
  cftest::make_dataset(api.data(), "a", 20);
  api.put("/api/datasets/a/pipeline", {{"steps", {{{"filter", "broken"}}}}});
  const auto r = api.post("/api/jobs/clean", {{"datasets", {"a"}}});
  ASSERT_EQ(r.status, 202);
  const auto job = api.wait_job(r.body["job_id"]);
  EXPECT_EQ(job["status"], "failed");
  EXPECT_NE(job["error"].get<std::string>().find("broken"), std::string::npos) << job.dump();
  EXPECT_FALSE(fs::exists(api.data() / "filtered" / "a.tsv"));
}

TEST(Service, CatalogNeedsConfiguration) {
  Api api;
  EXPECT_TRUE(is_error(api.get("/api/catalog/search?src=fr&trg=en"), 503, "catalog_unavailable"));
  EXPECT_TRUE(is_error(api.post("/api/catalog/download", {{"names", {"a"}}}), 503, "catalog_unavailable"));
}

TEST(Service, CatalogSearchAndDownload) {
  TempDir remote;
  cftest::write_text(remote.path() / "news.tsv", "bonjour\thello\nmerci\tthanks\n");
  const auto url = "file://" + (remote.path() / "news.tsv").string();
  const auto catalog_file = remote.path() / "catalog.jsonl";
  cftest::write_text(catalog_file,
                     json{{"name", "news"}, {"src_lang", "fr"}, {"trg_lang", "en"}, {"url_tsv", url}, {"declared_lines", 2}}.dump() +
                         "\n" +
                         json{{"name", "gone"}, {"src_lang", "fr"}, {"trg_lang", "en"}, {"url_tsv", "file:///nonexistent.tsv"}}.dump() +
                         "\n" + json{{"name", "other"}, {"src_lang", "de"}, {"trg_lang", "en"}, {"url_tsv", url}}.dump() + "\n");
  Api api([&](ServiceConfig& c) { c.catalog = catalog_file; });

  auto r = api.get("/api/catalog/search?src=fr&trg=en");
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["datasets"].size(), 2u);
  EXPECT_EQ(r.body["datasets"][0]["name"], "news");
  EXPECT_FALSE(r.body["datasets"][0]["downloaded"].get<bool>());

  r = api.post("/api/catalog/download", {{"names", {"news", "gone"}}});
  ASSERT_EQ(r.status, 202);
  const auto job = api.wait_job(r.body["job_id"]);
  ASSERT_EQ(job["status"], "succeeded");
  const auto& d = job["result"]["downloads"];
  EXPECT_TRUE(d[0]["ok"].get<bool>());
  EXPECT_EQ(d[0]["line_count"], 2);
  EXPECT_FALSE(d[1]["ok"].get<bool>());
  EXPECT_TRUE(d[1]["error"].is_string());

  EXPECT_TRUE(api.get("/api/catalog/search?src=fr&trg=en").body["datasets"][0]["downloaded"].get<bool>());
  const auto listed = api.get("/api/datasets").body["datasets"];
  ASSERT_EQ(listed.size(), 1u);
  EXPECT_EQ(listed[0]["provenance"]["src_lang"], "fr");

  EXPECT_TRUE(is_error(api.post("/api/catalog/download", {{"names", {"nope"}}}), 404, "dataset_not_found"));
  EXPECT_TRUE(is_error(api.post("/api/catalog/download", {{"names", json::array()}}), 400, "invalid_request"));
}

TEST(Service, ConcurrentPipelineWritesStayValid) {
  Api api;
  const auto tsv = cftest::make_dataset(api.data(), "d", 5);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 6; ++t)
    threads.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", api.service().port());
      for (int i = 0; i < 5; ++i) {
        const json doc{{"steps", {{{"filter", "max_length"}, {"arguments", {{"max_length", 10 + t}}}}}}};
        auto r = c.Put("/api/datasets/d/pipeline", doc.dump(), "application/json");
        if (r && r->status == 200) ++ok;
      }
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 30);
  const auto saved = filters::load_pipeline(layout::pipeline_path(tsv));
  ASSERT_EQ(saved.steps.size(), 1u);
  EXPECT_EQ(saved.steps[0].filter, "max_length");
}
