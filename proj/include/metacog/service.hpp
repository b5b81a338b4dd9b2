#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "httplib.h"
#include "metacog/agent_sim.hpp"
#include "metacog/config.hpp"
#include "metacog/monitor.hpp"

namespace metacog {

// Live-mode service: runs monitored tasks with a LIVE resolver and exposes
// the pending-handoff queue to a human operator over HTTP.
//
//   POST /runs                       start a run (body: task JSON, optional)
//   GET  /runs/{id}                  status and record
//   GET  /handoffs?status=pending    queue listing (pending|resolved|all)
//   GET  /handoffs/{id}              full packet
//   POST /handoffs/{id}/resolution   {"outcome": "success"|"failure", "note": ...}
//   GET  /events                     newline-delimited JSON queue changes
class HandoffService {
public:
    explicit HandoffService(ExperimentConfig config) : config_(std::move(config)) {
        config_.validate();
        config_.resolver.kind = ResolverKind::Live;
        install_routes();
    }

    ~HandoffService() { stop(); }

    HandoffService(const HandoffService&) = delete;
    HandoffService& operator=(const HandoffService&) = delete;

    // Returns the bound port, or -1.
    int bind(const std::string& host, int port) {
        if (port == 0) return server_.bind_to_any_port(host);
        return server_.bind_to_port(host, port) ? port : -1;
    }

    bool listen() { return server_.listen_after_bind(); }

    void stop() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        events_cv_.notify_all();
        server_.stop();
    }

    void wait_until_ready() const { server_.wait_until_ready(); }

    // Operations used by the routes; exposed for in-process callers.

    json start_run(const json& body) {
        std::unique_lock lock(mutex_);
        const auto n = ++run_counter_;
        const auto run_id = detail::padded_id("live", n);
        const auto seed = derive_seed(config_.seed, n);
        lock.unlock();

        TaskSpec task;
        if (body.is_null() || body.empty()) {
            auto w = config_.workload;
            w.n_tasks = 1;
            task = generate_workload(w, seed).front();
            task.task_id = "task-" + run_id;
            if (task.script.loop_call)
                task.script.loop_call = canonicalize_tool_call(task.script.loop_call->tool_name,
                                                               {{"task", task.task_id}, {"cursor", "next"}});
        } else {
            task = task_from_json(body.contains("task") ? body["task"] : body, "task-" + run_id);
        }

        auto outcome = monitored_run(task, config_.sim, config_.triggers, seed, config_.resolver,
                                     config_.sim.max_steps, run_id);
        lock.lock();
        LiveRun run{std::move(outcome), {}};
        if (run.outcome.packet) {
            run.handoff_id = run.outcome.packet->handoff_id;
            handoffs_[run.handoff_id] = Handoff{*run.outcome.packet, run_id, n};
            if (run.outcome.pending)
                publish_locked(json{{"type", "handoff_pending"},
                                    {"handoff_id", run.handoff_id},
                                    {"run_id", run_id},
                                    {"task_id", task.task_id},
                                    {"trigger", run.outcome.record.trigger}});
        }
        auto view = run_view(run_id, run);
        runs_.emplace(run_id, std::move(run));
        return view;
    }

    std::optional<json> get_run(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        auto it = runs_.find(run_id);
        if (it == runs_.end()) return std::nullopt;
        return run_view(run_id, it->second);
    }

    json list_handoffs(std::string_view filter) const {
        std::lock_guard lock(mutex_);
        std::vector<const Handoff*> rows;
        for (const auto& [id, h] : handoffs_) {
            const bool pending = h.packet.status == HandoffStatus::Pending;
            if (filter == "all" || (filter == "pending" && pending) || (filter == "resolved" && !pending))
                rows.push_back(&h);
        }
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->order < b->order; });
        json list = json::array();
        for (const auto* h : rows) list.push_back(queue_entry(*h));
        return json{{"handoffs", std::move(list)}};
    }

    std::optional<json> get_handoff(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = handoffs_.find(id);
        if (it == handoffs_.end()) return std::nullopt;
        return to_json(it->second.packet);
    }

    enum class ResolveStatus { Ok, NotFound, Conflict };

    struct ResolveResult {
        ResolveStatus status;
        json body;
    };

    // Exactly once: the PENDING check and the transition share one lock.
    ResolveResult resolve_handoff(const std::string& id, bool success, std::optional<std::string> note) {
        std::lock_guard lock(mutex_);
        auto it = handoffs_.find(id);
        if (it == handoffs_.end()) return {ResolveStatus::NotFound, error_body("unknown handoff " + id)};
        auto& h = it->second;
        if (h.packet.status != HandoffStatus::Pending)
            return {ResolveStatus::Conflict, json{{"error", "handoff already resolved"},
                                                  {"handoff_id", id},
                                                  {"status", to_string(h.packet.status)}}};
        h.packet = apply_resolution(h.packet, success, std::move(note));
        auto& run = runs_.at(h.run_id);
        run.outcome = complete_parked_run(std::move(run.outcome), h.packet);
        publish_locked(json{{"type", "handoff_resolved"},
                            {"handoff_id", id},
                            {"run_id", h.run_id},
                            {"status", to_string(h.packet.status)}});
        return {ResolveStatus::Ok, json{{"handoff_id", id},
                                        {"status", to_string(h.packet.status)},
                                        {"record", to_json(run.outcome.record)}}};
    }

    std::vector<std::string> events_since(std::size_t index) const {
        std::lock_guard lock(mutex_);
        if (index >= events_.size()) return {};
        return {events_.begin() + static_cast<std::ptrdiff_t>(index), events_.end()};
    }

private:
    struct LiveRun {
        MonitoredOutcome outcome;
        std::string handoff_id;
    };

    struct Handoff {
        HandoffPacket packet;
        std::string run_id;
        std::uint64_t order = 0;
    };

    static json error_body(const std::string& message) { return json{{"error", message}}; }

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump() + "\n", "application/json");
    }

    json run_view(const std::string& run_id, const LiveRun& run) const {
        json j{{"run_id", run_id},
               {"task_id", run.outcome.record.task_id},
               {"status", run.outcome.pending ? "pending_handoff" : "completed"}};
        j["handoff_id"] = run.handoff_id.empty() ? json(nullptr) : json(run.handoff_id);
        j["record"] = run.outcome.pending ? json(nullptr) : to_json(run.outcome.record);
        return j;
    }

    static json queue_entry(const Handoff& h) {
        return json{{"handoff_id", h.packet.handoff_id},
                    {"run_id", h.run_id},
                    {"task_id", h.packet.bundle.task_state_at_failure.task.task_id},
                    {"trigger", to_string(h.packet.firing.trigger)},
                    {"status", to_string(h.packet.status)},
                    {"sequence", h.order}};
    }

    void publish_locked(json event) {
        event["seq"] = events_.size() + 1;
        events_.push_back(event.dump());
        events_cv_.notify_all();
    }

    void install_routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        server_.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            if (!req.body.empty()) {
                body = json::parse(req.body, nullptr, false);
                if (body.is_discarded()) return send(res, 400, error_body("request body is not valid JSON"));
            }
            try {
                send(res, 201, start_run(body));
            } catch (const error& e) {
                send(res, 422, error_body(e.what()));
            }
        });

        server_.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            auto run = get_run(req.matches[1]);
            if (!run) return send(res, 404, error_body("unknown run " + std::string(req.matches[1])));
            send(res, 200, *run);
        });

        server_.Get("/handoffs", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string filter = req.has_param("status") ? req.get_param_value("status") : "pending";
            if (filter != "pending" && filter != "resolved" && filter != "all")
                return send(res, 422, error_body("status must be pending, resolved or all"));
            send(res, 200, list_handoffs(filter));
        });

        server_.Get(R"(/handoffs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            auto packet = get_handoff(req.matches[1]);
            if (!packet) return send(res, 404, error_body("unknown handoff " + std::string(req.matches[1])));
            send(res, 200, *packet);
        });

        server_.Post(R"(/handoffs/([^/]+)/resolution)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!get_handoff(id)) return send(res, 404, error_body("unknown handoff " + id));
            auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("outcome") || !body["outcome"].is_string())
                return send(res, 422, error_body("body must be {\"outcome\": \"success\"|\"failure\", \"note\": ...}"));
            const auto outcome = body["outcome"].get<std::string>();
            if (outcome != "success" && outcome != "failure")
                return send(res, 422, error_body("outcome must be \"success\" or \"failure\""));
            std::optional<std::string> note;
            if (body.contains("note") && body["note"].is_string()) note = body["note"].get<std::string>();
            auto result = resolve_handoff(id, outcome == "success", std::move(note));
            switch (result.status) {
            case ResolveStatus::Ok: return send(res, 200, result.body);
            case ResolveStatus::NotFound: return send(res, 404, result.body);
            case ResolveStatus::Conflict: return send(res, 409, result.body);
            }
        });

        server_.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
            std::size_t next = 0;
            if (req.has_param("since")) next = parse_int<std::size_t>(req.get_param_value("since")).value_or(0);
            res.set_chunked_content_provider("application/x-ndjson", [this, next](std::size_t, httplib::DataSink& sink) mutable {
                std::unique_lock lock(mutex_);
                events_cv_.wait_for(lock, std::chrono::milliseconds(250),
                                    [&] { return stopping_ || events_.size() > next; });
                if (stopping_) {
                    lock.unlock();
                    sink.done();
                    return true;
                }
                std::string chunk;
                for (; next < events_.size(); ++next) chunk += events_[next] + "\n";
                lock.unlock();
                if (!sink.is_writable()) return false;
                if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
                return true;
            });
        });
    }

    ExperimentConfig config_;
    httplib::Server server_;

    mutable std::mutex mutex_;
    std::condition_variable events_cv_;
    bool stopping_ = false;
    std::uint64_t run_counter_ = 0;
    std::map<std::string, LiveRun> runs_;
    std::map<std::string, Handoff> handoffs_;
    std::vector<std::string> events_;
};

} // namespace metacog
