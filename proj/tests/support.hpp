#pragma once

// Test-only oracles, fixtures and generators. Nothing here calls into the
// code paths it is used to check.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "metacog/core_types.hpp"

namespace metacog::support {

inline std::filesystem::path fixture_dir() { return METACOG_FIXTURE_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("metacog_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string padded(const char* prefix, int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%06d", prefix, n);
    return buf;
}

// Reference baseline aggregates: 512 runs, 388 successes, 9.997e-6 s per run.
inline std::vector<RunRecord> baseline_fixture() {
    std::vector<RunRecord> out;
    for (int i = 0; i < 512; ++i) {
        const bool ok = i < 388;
        out.push_back(RunRecord{padded("base", i + 1), padded("task", i + 1), Condition::Baseline, i + 1, ok ? 1 : 0,
                                ok ? 0 : 3, ok ? 0 : 2, 0, "", 9997 / 1e9});
    }
    return out;
}

// Reference monitored aggregates: 517 runs, 432 successes, 0.0638 s total,
// three handoffs at failures {4,5,5} of which one succeeded.
inline std::vector<RunRecord> monitored_fixture() {
    const std::int64_t total_ns = 63'800'000;
    const std::int64_t base_ns = total_ns / 517;
    const std::int64_t extra = total_ns - base_ns * 517;
    std::vector<RunRecord> out;
    for (int i = 0; i < 517; ++i) {
        RunRecord r{padded("mon", i + 1), padded("task", i + 1), Condition::Monitored, i + 1, 0, 0, 0, 0, "",
                    static_cast<double>(base_ns + (i < extra ? 1 : 0)) / 1e9};
        if (i < 3) {
            r.handoff = 1;
            r.trigger = "REPETITION";
            r.success = i == 0 ? 1 : 0;
            r.failures = i == 0 ? 4 : 5;
            r.retries = r.failures - 1;
        } else if (i - 3 < 431) {
            r.success = 1;
        } else {
            r.failures = 3;
            r.retries = 2;
        }
        out.push_back(r);
    }
    return out;
}

// Brute-force repetition oracle: pairwise comparison, no maps.
inline bool repetition_oracle(const std::vector<ActionEvent>& history, int threshold) {
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].kind != EventKind::ToolCall || !history[i].call) continue;
        int count = 0;
        for (const auto& other : history)
            if (other.kind == EventKind::ToolCall && other.call && other.call->tool_name == history[i].call->tool_name &&
                other.call->args_digest == history[i].call->args_digest)
                ++count;
        if (count > threshold) return true;
    }
    return false;
}

// Direct evaluation of the latency rule.
inline bool latency_oracle(const std::vector<ActionEvent>& history, double elapsed, double threshold) {
    if (elapsed > threshold) return true;
    std::ptrdiff_t call = -1;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(history.size()) - 1; i >= 0; --i)
        if (history[static_cast<std::size_t>(i)].kind == EventKind::ToolCall) {
            call = i;
            break;
        }
    if (call < 0) return false;
    double end = elapsed;
    for (auto j = static_cast<std::size_t>(call) + 1; j < history.size(); ++j)
        if (history[j].kind == EventKind::ToolResult) {
            end = history[j].timestamp;
            break;
        }
    return end - history[static_cast<std::size_t>(call)].timestamp > threshold;
}

inline bool complexity_oracle(int systems, bool high_stakes, bool ambiguous, int max_systems, bool flags_trip) {
    if (systems > max_systems) return true;
    return flags_trip && (high_stakes || ambiguous);
}

// Random well-formed history over at most `distinct` tool calls.
inline std::vector<ActionEvent> random_history(std::mt19937_64& rng, int max_len, int distinct) {
    std::uniform_int_distribution<int> len_d(0, max_len);
    std::uniform_int_distribution<int> kind_d(0, 3);
    std::uniform_int_distribution<int> call_d(0, distinct - 1);
    std::uniform_real_distribution<double> dt(0.0, 2.0);
    std::vector<ActionEvent> h;
    const int len = len_d(rng);
    double t = 0;
    for (int i = 0; i < len; ++i) {
        ActionEvent e;
        e.seq = i + 1;
        t += dt(rng);
        e.timestamp = t;
        switch (kind_d(rng)) {
        case 0: e.kind = EventKind::Plan; break;
        case 1:
        case 2: {
            e.kind = EventKind::ToolCall;
            const int c = call_d(rng);
            e.call = ToolCall{"tool" + std::to_string(c % 2), "k=" + std::to_string(c)};
            break;
        }
        default:
            e.kind = EventKind::ToolResult;
            e.error = (rng() & 1) != 0;
            break;
        }
        h.push_back(e);
    }
    return h;
}

inline std::vector<RunRecord> random_records(std::mt19937_64& rng, int max_n, bool allow_mixed_ids = true) {
    std::uniform_int_distribution<int> n_d(0, max_n);
    const int n = n_d(rng);
    const auto cond = (rng() & 1) ? Condition::Baseline : Condition::Monitored;
    std::vector<RunRecord> out;
    for (int i = 0; i < n; ++i) {
        RunRecord r;
        r.run_id = padded(allow_mixed_ids ? "r" : "run", i + 1);
        r.task_id = padded("task", static_cast<int>(rng() % 1000));
        r.condition = cond;
        r.seed = static_cast<std::int64_t>(rng() >> 1);
        r.success = static_cast<int>(rng() % 2);
        r.failures = static_cast<int>(rng() % 8);
        r.retries = static_cast<int>(rng() % 8);
        if (cond == Condition::Monitored && rng() % 3 == 0) {
            r.handoff = 1;
            static const char* names[] = {"REPETITION", "COMPLEXITY", "LATENCY"};
            r.trigger = names[rng() % 3];
        }
        r.duration_s = static_cast<double>(rng() % 100'000'000'000ULL) / 1e9;
        out.push_back(r);
    }
    return out;
}

} // namespace metacog::support
