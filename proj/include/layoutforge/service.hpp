#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "features.hpp"
#include "io.hpp"
#include "layout.hpp"
#include "model.hpp"
#include "optimizer.hpp"
#include "penalties.hpp"
#include "tasks.hpp"

// After Eigen: <resolv.h> defines a _res macro that collides with Eigen internals.
#include <httplib.h>

namespace layoutforge {

struct ServiceConfig {
  std::filesystem::path jobs_dir = "jobs";
  std::size_t max_queued = 16;  // submissions beyond this many waiting jobs get 409
  int default_steps = 500;
};

enum class JobState { queued, running, done, failed };

inline std::string to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "?";
}

struct OptimizeRequest {
  Layout layout;
  TaskSequence sequence;
  PenaltyConfig penalties;
  int steps = 500;
};

// Request body: {layout, sequence, constraints?, steps?, size_floors?}.
// `constraints` is either a list of constraints or a full penalty config.
inline OptimizeRequest parse_optimize_request(const nlohmann::json& j, int default_steps) {
  if (!j.is_object()) throw SchemaError("request body must be an object");
  OptimizeRequest r;
  if (!j.contains("layout") || !j.contains("sequence")) throw SchemaError("layout and sequence are required");
  r.layout = layout_from_json(j.at("layout"));
  r.sequence = sequence_from_json(j.at("sequence"));
  if (j.contains("constraints")) {
    const auto& c = j.at("constraints");
    r.penalties = penalty_config_from_json(c.is_array() ? nlohmann::json{{"constraints", c}} : c);
  }
  r.steps = j.value("steps", default_steps);
  if (r.steps < 0) throw SchemaError("steps must be >= 0");
  if (j.value("size_floors", false)) {
    auto floors = size_floor_constraints(r.layout);
    r.penalties.constraints.insert(r.penalties.constraints.end(), floors.begin(), floors.end());
  }
  return r;
}

class Service {
 public:
  struct Job {
    std::string id;
    JobState state = JobState::queued;
    OptimizeRequest request;
    OptimizationTrace trace;
    std::optional<std::string> error;
  };

  Service(ModelParams params, EmbeddingTable table, ServiceConfig cfg = {})
      : params_(std::move(params)), table_(std::move(table)), cfg_(std::move(cfg)), worker_([this] { run(); }) {}

  ~Service() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Throws the same errors as the synchronous checks of POST /optimize.
  std::string submit(OptimizeRequest req) {
    if (!is_feasible(req.layout)) throw PreconditionViolation("initial layout is not feasible");
    predict_sequence(req.layout, req.sequence, params_, table_);  // surfaces unknown labels now
    penalty_values(req.layout, req.penalties);                    // and unknown constraint targets
    std::lock_guard lock(mu_);
    if (queue_.size() >= cfg_.max_queued) throw QueueFull();
    auto job = std::make_shared<Job>();
    job->id = "job-" + std::to_string(++counter_);
    job->request = std::move(req);
    jobs_[job->id] = job;
    queue_.push_back(job);
    cv_.notify_all();
    return job->id;
  }

  // Snapshot of the job as served by GET /jobs/{id}.
  std::optional<nlohmann::json> job_status(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    const Job& j = *it->second;
    nlohmann::json out = {{"id", j.id},
                          {"state", to_string(j.state)},
                          {"steps", j.request.steps},
                          {"recorded_steps", j.trace.steps.size()},
                          {"progress", j.trace.steps.empty() ? 0 : j.trace.steps.back().step},
                          {"summary", trace_summary(j.trace)}};
    out["error"] = j.error ? nlohmann::json(*j.error) : nlohmann::json(nullptr);
    return out;
  }

  std::optional<std::string> step_css(const std::string& id, int n) const {
    std::lock_guard lock(mu_);
    const StepRecord* s = find_step(id, n);
    if (s == nullptr) return std::nullopt;
    return s->css;
  }

  std::optional<nlohmann::json> step_layout(const std::string& id, int n) const {
    std::lock_guard lock(mu_);
    const StepRecord* s = find_step(id, n);
    if (s == nullptr) return std::nullopt;
    return to_json(s->layout);
  }

  std::optional<nlohmann::json> best_layout(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second->state != JobState::done) return std::nullopt;
    const StepRecord* b = it->second->trace.best();
    if (b == nullptr) return std::nullopt;
    return to_json(b->layout);
  }

  nlohmann::json predict(const nlohmann::json& body) const {
    if (!body.is_object() || !body.contains("layout") || !body.contains("sequence"))
      throw SchemaError("layout and sequence are required");
    const Layout layout = layout_from_json(body.at("layout"));
    const TaskSequence seq = sequence_from_json(body.at("sequence"));
    PenaltyConfig pen;
    if (body.contains("constraints")) {
      const auto& c = body.at("constraints");
      pen = penalty_config_from_json(c.is_array() ? nlohmann::json{{"constraints", c}} : c);
    }
    const PredictionResult r = predict_sequence(layout, seq, params_, table_);
    const PenaltyValues p = penalty_values(layout, pen);
    return {{"per_task", r.per_task},
            {"total", r.total},
            {"feasible", is_feasible(layout)},
            {"penalty_values", {{"overlap", p.overlap}, {"boundary", p.boundary}, {"constraints", p.constraints}}}};
  }

  void mount(httplib::Server& srv) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    srv.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, predict(nlohmann::json::parse(req.body))); });
    });
    srv.Post("/optimize", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = submit(parse_optimize_request(nlohmann::json::parse(req.body), cfg_.default_steps));
        send_json(res, 202, {{"job_id", id}});
      });
    });
    srv.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = job_status(req.matches[1]);
      s ? send_json(res, 200, *s) : not_found(res, "unknown job");
    });
    srv.Get(R"(/jobs/([^/]+)/steps/(\d+)/css)", [this](const httplib::Request& req, httplib::Response& res) {
      auto css = step_css(req.matches[1], std::stoi(req.matches[2]));
      if (css) {
        res.set_content(*css, "text/css");
      } else {
        not_found(res, "unknown job or step");
      }
    });
    srv.Get(R"(/jobs/([^/]+)/steps/(\d+)/layout)", [this](const httplib::Request& req, httplib::Response& res) {
      auto l = step_layout(req.matches[1], std::stoi(req.matches[2]));
      l ? send_json(res, 200, *l) : not_found(res, "unknown job or step");
    });
    srv.Get(R"(/jobs/([^/]+)/best)", [this](const httplib::Request& req, httplib::Response& res) {
      auto l = best_layout(req.matches[1]);
      l ? send_json(res, 200, *l) : not_found(res, "job unknown, unfinished or without a feasible step");
    });
  }

  struct QueueFull : Error {
    QueueFull() : Error("optimization queue is full") {}
  };

 private:
  const StepRecord* find_step(const std::string& id, int n) const {
    auto it = jobs_.find(id);
    if (it == jobs_.end() || n < 0) return nullptr;
    const auto& steps = it->second->trace.steps;
    return static_cast<std::size_t>(n) < steps.size() ? &steps[static_cast<std::size_t>(n)] : nullptr;
  }

  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void not_found(httplib::Response& res, const std::string& msg) { send_json(res, 404, {{"error", msg}}); }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const nlohmann::json::exception& ex) {
      send_json(res, 400, {{"error", ex.what()}});
    } catch (const SchemaError& ex) {
      send_json(res, 400, {{"error", ex.what()}});
    } catch (const EmptyLayout& ex) {
      send_json(res, 400, {{"error", ex.what()}});
    } catch (const QueueFull& ex) {
      send_json(res, 409, {{"error", ex.what()}});
    } catch (const UnknownLabel& ex) {
      send_json(res, 422, {{"error", ex.what()}});
    } catch (const UnknownConstraintTarget& ex) {
      send_json(res, 422, {{"error", ex.what()}});
    } catch (const PreconditionViolation& ex) {
      send_json(res, 422, {{"error", ex.what()}});
    } catch (const std::exception& ex) {
      send_json(res, 500, {{"error", ex.what()}});
    }
  }

  void run() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        job = queue_.front();
        queue_.pop_front();
        job->state = JobState::running;
      }
      const std::filesystem::path dir = cfg_.jobs_dir / job->id;
      try {
        OptimizerConfig oc;
        oc.steps = job->request.steps;
        const OptimizationTrace t =
            optimize(job->request.layout, job->request.sequence, params_, table_, oc, job->request.penalties,
                     [&](const StepRecord& s) {
                       write_step(dir, s);
                       std::lock_guard lock(mu_);
                       job->trace.steps.push_back(s);
                     });
        write_json(dir / "summary.json", trace_summary(t));
        std::lock_guard lock(mu_);
        job->trace.best_step = t.best_step;
        job->trace.error = t.error;
        job->error = t.error;
        job->state = t.error ? JobState::failed : JobState::done;
      } catch (const std::exception& ex) {
        std::lock_guard lock(mu_);
        job->error = ex.what();
        job->state = JobState::failed;
      }
    }
  }

  ModelParams params_;
  EmbeddingTable table_;
  ServiceConfig cfg_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::uint64_t counter_ = 0;
  bool stopping_ = false;
  std::thread worker_;  // last: starts after everything above is constructed
};

}  // namespace layoutforge
