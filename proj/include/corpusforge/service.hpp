#pragma once

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "corpusforge/catalog.hpp"
#include "corpusforge/dataset_layout.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/filters/batch.hpp"
#include "corpusforge/filters/pipeline.hpp"
#include "corpusforge/filters/sample.hpp"

// JSON-over-HTTP facade for the data-tailoring UI. Every failing request gets one
// body of the form {"error": {"code", "message", "detail"}}.
namespace corpusforge::service {

using nlohmann::json;

struct ApiError : Error {
  int status;
  std::string code;
  json detail;

  ApiError(int status_, std::string code_, const std::string& message, json detail_ = nullptr)
      : Error(message), status(status_), code(std::move(code_)), detail(std::move(detail_)) {}
};

inline json error_body(const std::string& code, const std::string& message, const json& detail = nullptr) {
  return json{{"error", {{"code", code}, {"message", message}, {"detail", detail}}}};
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  fs::path data_dir;
  std::optional<fs::path> filters_dir;
  std::optional<fs::path> catalog;
  std::chrono::milliseconds preview_timeout{30000};
  std::size_t preview_size = 3000;  // hard cap on lines piped to filters per preview
  std::size_t clean_chunk_lines = 100000;
};

/// Background jobs with polling. Jobs get a cancel flag that is raised on shutdown.
class JobManager {
 public:
  enum class Status { Queued, Running, Succeeded, Failed };

  struct Job {
    std::string id;
    std::string kind;
    Status status = Status::Queued;
    json result;
    std::string error;
  };

  using Work = std::function<json(const std::atomic<bool>& cancel)>;

  JobManager() = default;
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;
  ~JobManager() { shutdown(); }

  std::string submit(std::string kind, Work work) {
    std::lock_guard lock(mu_);
    const std::string id = "job-" + std::to_string(++counter_);
    jobs_[id] = Job{id, std::move(kind), Status::Queued, nullptr, {}};
    threads_.emplace_back([this, id, work = std::move(work)] {
      set_status(id, Status::Running);
      try {
        json r = work(cancel_);
        std::lock_guard l(mu_);
        jobs_[id].result = std::move(r);
        jobs_[id].status = Status::Succeeded;
      } catch (const std::exception& e) {
        std::lock_guard l(mu_);
        jobs_[id].error = e.what();
        jobs_[id].status = Status::Failed;
      }
    });
    return id;
  }

  std::optional<Job> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
  }

  /// Cancels running jobs and waits for every worker thread.
  void shutdown() {
    cancel_ = true;
    std::vector<std::thread> threads;
    {
      std::lock_guard lock(mu_);
      threads.swap(threads_);
    }
    for (auto& t : threads)
      if (t.joinable()) t.join();
  }

  static std::string_view to_string(Status s) {
    switch (s) {
      case Status::Queued: return "queued";
      case Status::Running: return "running";
      case Status::Succeeded: return "succeeded";
      case Status::Failed: return "failed";
    }
    return "?";
  }

 private:
  void set_status(const std::string& id, Status s) {
    std::lock_guard lock(mu_);
    jobs_[id].status = s;
  }

  mutable std::mutex mu_;
  std::map<std::string, Job> jobs_;
  std::vector<std::thread> threads_;
  std::uint64_t counter_ = 0;
  std::atomic<bool> cancel_{false};
};

inline json to_json(const JobManager::Job& j) {
  json out{{"job_id", j.id}, {"kind", j.kind}, {"status", JobManager::to_string(j.status)}};
  if (j.status == JobManager::Status::Succeeded) out["result"] = j.result;
  if (j.status == JobManager::Status::Failed) out["error"] = j.error;
  return out;
}

class Service {
 public:
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    if (!fs::is_directory(cfg_.data_dir)) throw ConfigError("data directory does not exist: " + cfg_.data_dir.string());
    if (cfg_.filters_dir && !fs::is_directory(*cfg_.filters_dir))
      throw ConfigError("filter directory does not exist: " + cfg_.filters_dir->string());
    if (cfg_.preview_size == 0 || cfg_.preview_size > 3000) cfg_.preview_size = 3000;
    // httplib's default adds SO_REUSEPORT, which would let a second server share a busy port
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service() { stop(); }

  /// Binds the listening socket; throws if the port is taken. Returns the port.
  int bind() {
    if (cfg_.port == 0) {
      port_ = server_.bind_to_any_port(cfg_.host);
      if (port_ < 0) throw IoError("cannot bind " + cfg_.host);
    } else {
      if (!server_.bind_to_port(cfg_.host, cfg_.port))
        throw IoError("cannot listen on " + cfg_.host + ":" + std::to_string(cfg_.port) + " (port in use?)");
      port_ = cfg_.port;
    }
    return port_;
  }

  /// Serves on the calling thread until stop().
  void listen() {
    if (port_ < 0) bind();
    server_.listen_after_bind();
  }

  /// Serves on a background thread; returns once the server accepts connections.
  int start() {
    const int p = bind();
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return p;
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    server_.stop();
    if (thread_.joinable()) thread_.join();
    jobs_.shutdown();
  }

  int port() const noexcept { return port_; }
  JobManager& jobs() noexcept { return jobs_; }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Runs `fn` and maps every exception to an ApiError body.
  static Handler wrap(Handler fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ApiError& e) {
        send(res, e.status, error_body(e.code, e.what(), e.detail));
      } catch (const json::exception& e) {
        send(res, 400, error_body("bad_request", std::string("invalid JSON: ") + e.what()));
      } catch (const PipelineError& e) {
        send(res, 422, error_body("filter_failed", e.what(), {{"step", e.step()}, {"stderr", e.stderr_text()}}));
      } catch (const FormatError& e) {
        send(res, 422, error_body("invalid_input", e.what()));
      } catch (const ConfigError& e) {
        send(res, 400, error_body("invalid_request", e.what()));
      } catch (const std::exception& e) {
        send(res, 500, error_body("internal_error", e.what()));
      }
    };
  }

  static json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw ApiError(400, "bad_request", std::string("request body is not valid JSON: ") + e.what());
    }
  }

  fs::path require_dataset(const std::string& name) const {
    if (!layout::valid_dataset_name(name)) throw ApiError(400, "invalid_name", "invalid dataset name '" + name + "'");
    auto p = layout::find_dataset(cfg_.data_dir, name);
    if (p.empty()) throw ApiError(404, "dataset_not_found", "no dataset named '" + name + "'", {{"dataset", name}});
    return p;
  }

  filters::Discovery registry() const {
    if (!cfg_.filters_dir) return {};
    return filters::discover_filters(*cfg_.filters_dir);
  }

  std::mutex& pipeline_lock(const std::string& name) {
    std::lock_guard lock(locks_mu_);
    auto& m = pipeline_locks_[name];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  filters::FilterPipeline read_pipeline(const fs::path& tsv, const std::string& name) {
    std::lock_guard lock(pipeline_lock(name));
    const auto p = layout::pipeline_path(tsv);
    if (!fs::exists(p)) return {name, {}};
    return filters::load_pipeline(p);
  }

  catalog::Catalog load_catalog() const {
    if (!cfg_.catalog) throw ApiError(503, "catalog_unavailable", "the service was started without a catalog");
    return catalog::load_catalog(*cfg_.catalog);
  }

  json dataset_summary(const fs::path& tsv) const {
    const auto d = catalog::open_local(tsv);
    const auto name = layout::dataset_name(tsv);
    json j{{"name", name},
           {"file", tsv.filename().string()},
           {"line_count", d.line_count},
           {"label", d.label ? json(*d.label) : json(nullptr)},
           {"has_pipeline", fs::exists(layout::pipeline_path(tsv))},
           {"cleaned", fs::exists(cfg_.data_dir / "filtered" / (name + ".tsv"))}};
    if (!d.descriptor.src_lang.empty()) j["provenance"] = catalog::to_json(d.descriptor);
    return j;
  }

  void routes() {
    server_.Get("/api/datasets", wrap([this](const httplib::Request&, httplib::Response& res) {
                  json list = json::array();
                  for (const auto& tsv : layout::list_datasets(cfg_.data_dir)) list.push_back(dataset_summary(tsv));
                  send(res, 200, {{"version", 1}, {"datasets", list}});
                }));

    server_.Put(R"(/api/datasets/([^/]+)/label)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string name = req.matches[1];
                  const auto tsv = require_dataset(name);
                  const json body = body_json(req);
                  if (!body.contains("label") || !body["label"].is_string())
                    throw ApiError(400, "invalid_request", "body must be {\"label\": string}");
                  catalog::set_label(catalog::open_local(tsv), body["label"].get<std::string>());
                  send(res, 200, dataset_summary(tsv));
                }));

    server_.Get(R"(/api/datasets/([^/]+)/sample)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string name = req.matches[1];
                  const auto tsv = require_dataset(name);
                  filters::SampleOptions opts;
                  opts.seed = query_u64(req, "seed", 0);
                  const auto s = filters::sample_dataset(tsv, opts);
                  send(res, 200,
                       {{"dataset", name},
                        {"seed", opts.seed},
                        {"total_lines", s.total_lines},
                        {"head", s.head},
                        {"middle", s.middle},
                        {"tail", s.tail},
                        {"middle_indices", s.middle_indices}});
                }));

    server_.Get("/api/filters", wrap([this](const httplib::Request&, httplib::Response& res) {
                  const auto d = registry();
                  json list = json::array();
                  for (const auto& f : d.registry.all()) list.push_back(filters::to_json(f));
                  send(res, 200, {{"version", 1}, {"filters", list}, {"diagnostics", d.diagnostics}});
                }));

    server_.Get(R"(/api/datasets/([^/]+)/pipeline)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string name = req.matches[1];
                  const auto tsv = require_dataset(name);
                  send(res, 200, filters::to_json(read_pipeline(tsv, name)));
                }));

    server_.Put(R"(/api/datasets/([^/]+)/pipeline)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string name = req.matches[1];
                  const auto tsv = require_dataset(name);
                  auto pipeline = parse_pipeline_body(body_json(req), name);
                  std::lock_guard lock(pipeline_lock(name));
                  filters::save_pipeline(layout::pipeline_path(tsv), pipeline);
                  send(res, 200, filters::to_json(pipeline));
                }));

    server_.Post(R"(/api/datasets/([^/]+)/preview)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                   const std::string name = req.matches[1];
                   const auto tsv = require_dataset(name);
                   const json body = body_json(req);
                   filters::FilterPipeline pipeline = body.contains("pipeline") ? parse_pipeline_body(body["pipeline"], name)
                                                                                : read_pipeline(tsv, name);
                   filters::SampleOptions opts;
                   opts.size = cfg_.preview_size;
                   opts.head = std::min<std::size_t>(opts.head, opts.size);
                   opts.tail = std::min<std::size_t>(opts.tail, opts.size - opts.head);
                   if (body.contains("seed")) opts.seed = body["seed"].get<std::uint64_t>();
                   const auto sample = filters::sample_dataset(tsv, opts).lines();
                   const auto reg = registry();
                   RunLimits limits;
                   limits.deadline = std::chrono::steady_clock::now() + cfg_.preview_timeout;
                   std::vector<std::vector<std::string>> stages;
                   try {
                     stages = filters::run_pipeline(reg.registry, pipeline, sample, limits);
                   } catch (const PipelineError& e) {
                     if (std::chrono::steady_clock::now() >= *limits.deadline)
                       throw ApiError(504, "preview_timeout",
                                      "preview did not finish within " + std::to_string(cfg_.preview_timeout.count()) + " ms",
                                      {{"step", e.step()}});
                     throw;
                   }
                   json steps = json::array();
                   for (const auto& s : pipeline.steps) steps.push_back(s.filter);
                   send(res, 200,
                        {{"dataset", name},
                         {"seed", opts.seed},
                         {"pipeline", filters::to_json(pipeline)},
                         {"steps", steps},
                         {"stage_outputs", stages}});
                 }));

    server_.Post("/api/jobs/clean", wrap([this](const httplib::Request& req, httplib::Response& res) {
                   const json body = body_json(req);
                   if (!body.contains("datasets") || !body["datasets"].is_array() || body["datasets"].empty())
                     throw ApiError(400, "invalid_request", "body must list 'datasets'");
                   std::vector<std::pair<std::string, fs::path>> targets;
                   for (const auto& n : body["datasets"]) {
                     if (!n.is_string()) throw ApiError(400, "invalid_request", "dataset names are strings");
                     targets.emplace_back(n.get<std::string>(), require_dataset(n.get<std::string>()));
                   }
                   std::size_t workers = 1;
                   if (body.contains("workers")) {
                     if (!body["workers"].is_number_integer() || body["workers"].get<int>() < 1)
                       throw ApiError(400, "invalid_request", "'workers' must be a positive integer");
                     workers = body["workers"].get<std::size_t>();
                   }
                   // validate every pipeline up front so mistakes surface synchronously
                   const auto reg = registry();
                   std::vector<filters::FilterPipeline> pipelines;
                   for (const auto& [name, tsv] : targets) {
                     pipelines.push_back(read_pipeline(tsv, name));
                     filters::CompiledPipeline check(reg.registry, pipelines.back());
                   }
                   const auto out_dir = cfg_.data_dir / "filtered";
                   const auto chunk = cfg_.clean_chunk_lines;
                   const auto id = jobs_.submit("clean", [=](const std::atomic<bool>& cancel) {
                     json reports = json::array();
                     for (std::size_t i = 0; i < targets.size(); ++i) {
                       filters::BatchOptions opts;
                       opts.workers = workers;
                       opts.chunk_lines = chunk;
                       opts.cancel = &cancel;
                       fs::create_directories(out_dir);
                       reports.push_back(filters::to_json(filters::apply_pipeline_batch(
                           reg.registry, pipelines[i], targets[i].second, out_dir / (targets[i].first + ".tsv"), opts)));
                     }
                     return json{{"reports", reports}};
                   });
                   send(res, 202, {{"job_id", id}});
                 }));

    server_.Get(R"(/api/jobs/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto job = jobs_.get(id);
                  if (!job) throw ApiError(404, "job_not_found", "no job '" + id + "'");
                  send(res, 200, to_json(*job));
                }));

    server_.Get("/api/catalog/search", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const auto cat = load_catalog();
                  const auto src = req.has_param("src") ? req.get_param_value("src") : "";
                  const auto trg = req.has_param("trg") ? req.get_param_value("trg") : "";
                  json list = json::array();
                  for (const auto& d : catalog::search_datasets(cat, src, trg)) {
                    json j = catalog::to_json(d);
                    j["downloaded"] = !layout::find_dataset(cfg_.data_dir, d.name).empty();
                    list.push_back(j);
                  }
                  send(res, 200, {{"version", 1}, {"datasets", list}});
                }));

    server_.Post("/api/catalog/download", wrap([this](const httplib::Request& req, httplib::Response& res) {
                   const auto cat = load_catalog();
                   const json body = body_json(req);
                   if (!body.contains("names") || !body["names"].is_array() || body["names"].empty())
                     throw ApiError(400, "invalid_request", "body must list 'names'");
                   std::vector<catalog::DatasetDescriptor> wanted;
                   for (const auto& n : body["names"]) {
                     const auto name = n.is_string() ? n.get<std::string>() : n.dump();
                     const auto* d = cat.find(name);
                     if (!d) throw ApiError(404, "dataset_not_found", "catalog has no dataset '" + name + "'", {{"dataset", name}});
                     wanted.push_back(*d);
                   }
                   const auto dest = cfg_.data_dir;
                   const auto id = jobs_.submit("download", [=](const std::atomic<bool>&) {
                     json outcomes = json::array();
                     for (const auto& o : catalog::download_all(wanted, dest)) {
                       json j{{"name", o.name}, {"ok", o.error.empty()}};
                       if (o.dataset) {
                         j["line_count"] = o.dataset->line_count;
                         j["warnings"] = o.dataset->warnings;
                       }
                       if (!o.error.empty()) j["error"] = o.error;
                       outcomes.push_back(j);
                     }
                     return json{{"downloads", outcomes}};
                   });
                   send(res, 202, {{"job_id", id}});
                 }));

    server_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404)
        send(res, 404, error_body("not_found", "no route for " + req.method + " " + req.path));
      else
        send(res, res.status, error_body("http_error", "request failed with status " + std::to_string(res.status)));
    });
  }

  static std::uint64_t query_u64(const httplib::Request& req, const char* key, std::uint64_t fallback) {
    if (!req.has_param(key)) return fallback;
    const auto v = req.get_param_value(key);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ApiError(400, "invalid_request", std::string("query parameter '") + key + "' must be a non-negative integer");
    return out;
  }

  filters::FilterPipeline parse_pipeline_body(const json& body, const std::string& name) const {
    json doc = body;
    if (doc.is_object() && !doc.contains("dataset")) doc["dataset"] = name;
    filters::FilterPipeline p;
    try {
      p = filters::pipeline_from_json(doc);
    } catch (const std::exception& e) {
      throw ApiError(400, "invalid_pipeline", e.what());
    }
    if (p.dataset != name)
      throw ApiError(400, "invalid_pipeline", "pipeline belongs to '" + p.dataset + "', not '" + name + "'");
    try {
      filters::CompiledPipeline check(registry().registry, p);
    } catch (const ConfigError& e) {
      throw ApiError(400, "invalid_pipeline", e.what());
    }
    return p;
  }

  ServiceConfig cfg_;
  httplib::Server server_;
  JobManager jobs_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<bool> stopped_{false};
  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> pipeline_locks_;
};

}  // namespace corpusforge::service
