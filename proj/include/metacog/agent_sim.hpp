#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "metacog/core_types.hpp"
#include "metacog/random.hpp"

namespace metacog {

struct SimConfig {
    double step_cost = 1.0e-6;
    int retry_limit = 5;
    double monitor_overhead_per_event = 11.3e-6;
    double handoff_processing = 5.0e-6;
    int max_steps = 100;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;

    void validate() const {
        if (!(step_cost > 0)) throw config_error("step_cost must be > 0");
        if (!(monitor_overhead_per_event >= 0)) throw config_error("monitor_overhead_per_event must be >= 0");
        if (!(handoff_processing >= 0)) throw config_error("handoff_processing must be >= 0");
        if (retry_limit < 1) throw config_error("retry_limit must be >= 1");
        if (max_steps < 1) throw config_error("max_steps must be >= 1");
    }
};

struct ComplexityRates {
    double high_stakes = 0.0;
    double ambiguous = 0.0;
    double multi_system = 0.0;  // systems_touched drawn from [3,5] instead of [0,2]

    friend bool operator==(const ComplexityRates&, const ComplexityRates&) = default;
};

struct WorkloadConfig {
    int n_tasks = 500;
    std::map<ScriptKind, double> mix{{ScriptKind::Clean, 0.64},
                                     {ScriptKind::Flaky, 0.12},
                                     {ScriptKind::Fatal, 0.14},
                                     {ScriptKind::Loop, 0.06},
                                     {ScriptKind::Hang, 0.04}};
    int fail_count_min = 3;
    int fail_count_max = 5;
    double hang_duration = 7.0;
    // FATAL tasks model work beyond the agent's capability, so they carry
    // their own attribute rates.
    ComplexityRates routine_rates{};
    ComplexityRates fatal_rates{0.5, 0.5, 0.5};

    friend bool operator==(const WorkloadConfig&, const WorkloadConfig&) = default;

    void validate() const {
        if (n_tasks < 1) throw config_error("n_tasks must be >= 1");
        double sum = 0;
        for (auto& [kind, p] : mix) {
            if (!(p >= 0 && p <= 1))
                throw config_error("mix." + std::string(to_string(kind)) + " must be in [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw config_error("mix proportions must sum to 1 (got " + format_exact(sum) + ")");
        if (fail_count_min < 1 || fail_count_max < fail_count_min)
            throw config_error("fail_count range must satisfy 1 <= fail_count_min <= fail_count_max");
        if (!(hang_duration > 0)) throw config_error("hang_duration must be > 0");
        for (auto* r : {&routine_rates, &fatal_rates})
            for (double p : {r->high_stakes, r->ambiguous, r->multi_system})
                if (!(p >= 0 && p <= 1)) throw config_error("complexity rates must be in [0,1]");
    }
};

// Largest-remainder apportionment; remainder ties go to the earlier kind.
inline std::map<ScriptKind, int> apportion(const std::map<ScriptKind, double>& mix, int n) {
    std::map<ScriptKind, int> counts;
    std::vector<std::pair<double, ScriptKind>> remainders;
    int assigned = 0;
    for (auto kind : all_script_kinds) {
        auto it = mix.find(kind);
        const double exact = (it == mix.end() ? 0.0 : it->second) * n;
        const int base = static_cast<int>(std::floor(exact));
        counts[kind] = base;
        assigned += base;
        remainders.emplace_back(exact - base, kind);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n && i < remainders.size(); ++i, ++assigned) ++counts[remainders[i].second];
    return counts;
}

namespace detail {

inline constexpr std::array<const char*, 5> tool_catalog{"crm.lookup_customer", "erp.create_invoice",
                                                         "web.scrape_listing", "db.query_orders",
                                                         "mail.send_summary"};

inline constexpr std::array<const char*, 5> request_catalog{
    "Find the customer record for the latest support ticket",
    "Create an invoice for last month's consulting hours",
    "Collect current prices for the listed products",
    "Summarize open orders older than thirty days",
    "Email the weekly pipeline summary to the sales team"};

inline std::string padded_id(const char* prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, n);
    return buf;
}

inline std::size_t catalog_index(const std::string& task_id) { return fnv1a(task_id) % tool_catalog.size(); }

} // namespace detail

inline std::vector<TaskSpec> generate_workload(const WorkloadConfig& config, std::int64_t seed) {
    config.validate();
    Rng rng(seed);

    std::vector<ScriptKind> kinds;
    kinds.reserve(config.n_tasks);
    for (auto [kind, count] : apportion(config.mix, config.n_tasks)) kinds.insert(kinds.end(), count, kind);
    rng.shuffle(kinds.begin(), kinds.end());

    std::vector<TaskSpec> tasks;
    tasks.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        TaskSpec t;
        t.task_id = detail::padded_id("task", i + 1);
        const auto which = detail::catalog_index(t.task_id);
        t.initial_request = detail::request_catalog[which];
        t.script.kind = kinds[i];
        switch (kinds[i]) {
        case ScriptKind::Flaky:
        case ScriptKind::Fatal:
            t.script.fail_count = static_cast<int>(rng.uniform_int(config.fail_count_min, config.fail_count_max));
            break;
        case ScriptKind::Hang: t.script.hang_duration = config.hang_duration; break;
        case ScriptKind::Loop:
            t.script.loop_call = canonicalize_tool_call(detail::tool_catalog[which],
                                                        {{"task", t.task_id}, {"cursor", "next"}});
            break;
        case ScriptKind::Clean: break;
        }
        const auto& rates = kinds[i] == ScriptKind::Fatal ? config.fatal_rates : config.routine_rates;
        t.high_stakes = rng.bernoulli(rates.high_stakes);
        t.ambiguous = rng.bernoulli(rates.ambiguous);
        t.systems_touched = static_cast<int>(rng.bernoulli(rates.multi_system) ? rng.uniform_int(3, 5)
                                                                                : rng.uniform_int(0, 2));
        tasks.push_back(std::move(t));
    }
    return tasks;
}

// Stepping handle over one scripted run. Single-threaded; distinct handles
// are independent.
class RunHandle {
public:
    RunHandle(TaskSpec task, SimConfig config, std::int64_t seed, bool monitored)
        : task_(std::move(task)), config_(config), seed_(seed), monitored_(monitored), rng_(seed) {
        task_.validate();
        config_.validate();
        const auto which = detail::catalog_index(task_.task_id);
        base_tool_ = detail::tool_catalog[which];
    }

    const TaskSpec& task() const { return task_; }
    std::int64_t seed() const { return seed_; }
    bool monitored() const { return monitored_; }
    bool terminal() const { return next_ == Next::Done; }
    double clock() const { return clock_; }
    std::int64_t events_emitted() const { return seq_; }

    ActionEvent step() {
        if (next_ == Next::Done) throw state_error("step: run for " + task_.task_id + " is already terminal");
        ActionEvent ev;
        double extra = 0.0;
        switch (next_) {
        case Next::Plan:
            ev.kind = EventKind::Plan;
            ev.payload = "Plan: \"" + task_.initial_request + "\" via " + primary_call().tool_name;
            next_ = Next::Call;
            break;
        case Next::Call:
            ++attempts_;
            ev.kind = EventKind::ToolCall;
            ev.call = call_for_attempt(attempts_);
            ev.payload = "attempt " + std::to_string(attempts_);
            next_ = Next::Result;
            break;
        case Next::Result: {
            ev.kind = EventKind::ToolResult;
            ev.call = call_for_attempt(attempts_);
            if (task_.script.kind == ScriptKind::Hang) extra = task_.script.hang_duration;
            if (attempt_fails(attempts_)) {
                ++failures_;
                ev.error = true;
                ev.payload = failure_payload();
                next_ = after_failure();
            } else {
                ev.payload = "ok: " + std::to_string(rng_.uniform_int(1, 250)) + " records";
                next_ = Next::Success;
            }
            break;
        }
        case Next::Retry:
            ++retries_;
            ev.kind = EventKind::Retry;
            ev.payload = "retry " + std::to_string(retries_) + " after failed attempt " + std::to_string(attempts_);
            next_ = Next::Call;
            break;
        case Next::Success:
            ev.kind = EventKind::Success;
            ev.payload = "completed after " + std::to_string(attempts_) + " tool call(s)";
            next_ = Next::Done;
            break;
        case Next::Failure:
            ev.kind = EventKind::Failure;
            ev.payload = "gave up after " + std::to_string(failures_) + " failed tool result(s)";
            next_ = Next::Done;
            break;
        case Next::Done: break;
        }
        clock_ += config_.step_cost + extra + (monitored_ ? config_.monitor_overhead_per_event : 0.0);
        ev.seq = ++seq_;
        ev.timestamp = clock_;
        return ev;
    }

private:
    enum class Next { Plan, Call, Result, Retry, Success, Failure, Done };

    ToolCall primary_call() const {
        if (task_.script.loop_call) return *task_.script.loop_call;
        return canonicalize_tool_call(base_tool_, {{"task", task_.task_id}});
    }

    // FLAKY retries adjust their parameters; LOOP and FATAL hammer the same call.
    ToolCall call_for_attempt(int attempt) const {
        if (task_.script.kind == ScriptKind::Flaky && attempt > 1)
            return canonicalize_tool_call(base_tool_, {{"task", task_.task_id}, {"attempt", std::to_string(attempt)}});
        return primary_call();
    }

    bool attempt_fails(int attempt) const {
        switch (task_.script.kind) {
        case ScriptKind::Clean: return false;
        case ScriptKind::Flaky: return attempt <= task_.script.fail_count;
        case ScriptKind::Loop:
        case ScriptKind::Hang:
        case ScriptKind::Fatal: return true;
        }
        return true;
    }

    Next after_failure() const {
        switch (task_.script.kind) {
        case ScriptKind::Loop: return Next::Retry;
        case ScriptKind::Hang: return Next::Failure;
        case ScriptKind::Fatal:
            if (failures_ >= task_.script.fail_count) return Next::Failure;
            [[fallthrough]];
        default: return retries_ < config_.retry_limit ? Next::Retry : Next::Failure;
        }
    }

    std::string failure_payload() {
        if (task_.script.kind == ScriptKind::Hang)
            return "error: timeout after " + format_fixed(task_.script.hang_duration, 6) + " s";
        static constexpr std::array<const char*, 4> reasons{"HTTP 503 service unavailable", "HTTP 429 rate limited",
                                                            "schema mismatch in response", "empty result set"};
        return std::string("error: ") + reasons[static_cast<std::size_t>(rng_.uniform_int(0, reasons.size() - 1))];
    }

    TaskSpec task_;
    SimConfig config_;
    std::int64_t seed_;
    bool monitored_;
    Rng rng_;
    std::string base_tool_;
    Next next_ = Next::Plan;
    std::int64_t seq_ = 0;
    double clock_ = 0.0;
    int attempts_ = 0;
    int failures_ = 0;
    int retries_ = 0;
};

inline RunHandle start_run(const TaskSpec& task, const SimConfig& config, std::int64_t seed, bool monitored = false) {
    return RunHandle(task, config, seed, monitored);
}

inline DeclarativeState initial_state(const TaskSpec& task) {
    DeclarativeState s;
    s.task = task;
    return s;
}

struct RunResult {
    DeclarativeState state;
    RunRecord record;
};

// Baseline condition: run until terminal or cut off by max_steps (a cut-off
// run is recorded as a failure).
inline RunResult run_to_completion(const TaskSpec& task, const SimConfig& config, std::int64_t seed, int max_steps,
                                   std::string run_id = {}) {
    if (max_steps < 1) throw config_error("max_steps must be >= 1");
    auto handle = start_run(task, config, seed);
    auto state = initial_state(task);
    while (!handle.terminal() && handle.events_emitted() < max_steps) state.apply(handle.step());

    RunRecord r;
    r.run_id = run_id.empty() ? task.task_id : std::move(run_id);
    r.task_id = task.task_id;
    r.condition = Condition::Baseline;
    r.seed = seed;
    r.success = state.terminal() && state.history.back().kind == EventKind::Success ? 1 : 0;
    r.failures = state.failures_so_far;
    r.retries = state.retries_so_far;
    r.duration_s = state.elapsed;
    return {std::move(state), std::move(r)};
}

namespace detail {

inline std::string sanitize_field(std::string s) {
    for (char& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return s;
}

} // namespace detail

// seq<TAB>timestamp<TAB>kind<TAB>tool<TAB>payload, one event per line.
inline std::string render_trace(const std::vector<ActionEvent>& history) {
    std::string out;
    for (const auto& ev : history) {
        out += std::to_string(ev.seq);
        out += '\t';
        out += format_fixed(ev.timestamp, 9);
        out += '\t';
        out += to_string(ev.kind);
        out += '\t';
        if (ev.call) out += detail::sanitize_field(ev.call->render());
        out += '\t';
        out += detail::sanitize_field(ev.payload);
        out += '\n';
    }
    return out;
}

inline void write_trace_file(const std::filesystem::path& dir, const std::string& run_id,
                             const std::vector<ActionEvent>& history) {
    const auto path = dir / ("trace_" + run_id + ".tsv");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path.string());
    out << render_trace(history);
    if (!out) throw io_error("write failed: " + path.string());
}

} // namespace metacog
