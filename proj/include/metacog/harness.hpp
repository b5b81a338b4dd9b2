#pragma once

#include <filesystem>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "metacog/agent_sim.hpp"
#include "metacog/config.hpp"
#include "metacog/csv.hpp"
#include "metacog/metrics.hpp"
#include "metacog/monitor.hpp"

namespace metacog {

struct ExperimentOutput {
    std::filesystem::path directory;
    std::vector<RunRecord> baseline_records;
    std::vector<RunRecord> monitored_records;
    std::vector<HandoffPacket> handoffs;
    MetricsTable baseline;
    MetricsTable monitored;
    HandoffDistribution distribution;
    ComparisonReport comparison;
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

// Index-addressed results, so output order is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const auto w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += w) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// Records carry exactly what the CSV will hold, so in-process metrics match
// a later `analyze` of the written files.
inline void quantize_duration(RunRecord& r) { r.duration_s = *parse_double(format_fixed(r.duration_s, 9)); }

inline void prepare_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe, std::ios::trunc);
        if (!out) throw io_error("output directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

inline void reset_subdir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
}

} // namespace detail

inline std::filesystem::path experiment_directory(const ExperimentConfig& config,
                                                  const std::optional<std::filesystem::path>& out_root = {}) {
    return out_root.value_or(std::filesystem::path(config.dir)) / config.name;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& config,
                                       const std::optional<std::filesystem::path>& out_root = {},
                                       const ProgressFn& progress = {}) {
    config.validate();
    if (config.resolver.kind != ResolverKind::Simulated)
        throw config_error("run_experiment requires [resolver] mode = simulated; live resolution runs via serve");

    ExperimentOutput out;
    out.directory = experiment_directory(config, out_root);
    detail::prepare_directory(out.directory);
    auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };

    const auto baseline_tasks = generate_workload(config.workload, config.seed);
    std::vector<TaskSpec> monitored_tasks;
    if (config.independent_workloads) {
        auto w = config.workload;
        w.n_tasks = config.monitored_task_count();
        monitored_tasks = generate_workload(w, derive_seed(config.seed, 0x4D4F4E49544F52ULL));
    } else if (config.monitored_task_count() != config.workload.n_tasks) {
        auto w = config.workload;
        w.n_tasks = config.monitored_task_count();
        monitored_tasks = generate_workload(w, config.seed);
    } else {
        monitored_tasks = baseline_tasks;
    }

    say("baseline: " + std::to_string(baseline_tasks.size()) + " runs");
    std::vector<RunResult> baseline(baseline_tasks.size());
    detail::parallel_for(baseline_tasks.size(), config.workers, [&](std::size_t i) {
        baseline[i] = run_to_completion(baseline_tasks[i], config.sim, derive_seed(config.seed, i), config.sim.max_steps,
                                        detail::padded_id("base", i + 1));
    });

    say("monitored: " + std::to_string(monitored_tasks.size()) + " runs");
    std::vector<MonitoredOutcome> monitored(monitored_tasks.size());
    detail::parallel_for(monitored_tasks.size(), config.workers, [&](std::size_t i) {
        monitored[i] = monitored_run(monitored_tasks[i], config.sim, config.triggers, derive_seed(config.seed, i),
                                     config.resolver, config.sim.max_steps, detail::padded_id("mon", i + 1));
    });

    for (auto& r : baseline) {
        detail::quantize_duration(r.record);
        out.baseline_records.push_back(r.record);
    }
    for (auto& m : monitored) {
        detail::quantize_duration(m.record);
        out.monitored_records.push_back(m.record);
        if (m.packet) out.handoffs.push_back(*m.packet);
    }

    out.baseline = compute_metrics(out.baseline_records);
    out.monitored = compute_metrics(out.monitored_records);
    out.distribution = handoff_distribution(out.monitored_records);
    out.comparison = compare(out.baseline, out.monitored);

    const auto& dir = out.directory;
    write_csv(out.baseline_records, dir / "runs_without_monitor.csv");
    write_csv(out.monitored_records, dir / "runs_with_monitor.csv");
    detail::reset_subdir(dir / "handoffs");
    for (const auto& p : out.handoffs) write_text_file(dir / "handoffs" / (p.handoff_id + ".json"), to_json(p).dump(2) + "\n");
    if (config.write_traces) {
        detail::reset_subdir(dir / "traces");
        for (const auto& r : baseline) write_trace_file(dir / "traces", r.record.run_id, r.state.history);
        for (const auto& m : monitored) write_trace_file(dir / "traces", m.record.run_id, m.state.history);
    }
    write_text_file(dir / "report.txt", render_report(out.comparison, out.distribution));
    write_text_file(dir / "report.json", report_json(out.comparison, out.distribution).dump(2) + "\n");
    write_text_file(dir / "config.ini", serialize_config(config));
    say("wrote " + dir.string());
    return out;
}

} // namespace metacog
