#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "metacog/core_types.hpp"

namespace metacog {

class TriggerSet {
public:
    constexpr TriggerSet() = default;

    static constexpr TriggerSet all() {
        TriggerSet s;
        s.bits_ = 0b111;
        return s;
    }
    static constexpr TriggerSet none() { return {}; }

    constexpr bool contains(TriggerKind k) const { return bits_ & bit(k); }
    constexpr TriggerSet& insert(TriggerKind k) {
        bits_ |= bit(k);
        return *this;
    }
    constexpr TriggerSet& erase(TriggerKind k) {
        bits_ &= ~bit(k);
        return *this;
    }
    constexpr bool empty() const { return bits_ == 0; }

    friend constexpr bool operator==(TriggerSet, TriggerSet) = default;

private:
    static constexpr unsigned bit(TriggerKind k) { return 1u << static_cast<unsigned>(k); }
    unsigned bits_ = 0;
};

struct TriggerConfig {
    int repetition_threshold = 3;
    double latency_threshold = 5.0;
    int complexity_max_systems = 2;
    bool complexity_flags_trip = true;
    TriggerSet enabled = TriggerSet::all();

    friend bool operator==(const TriggerConfig&, const TriggerConfig&) = default;

    void validate() const {
        if (repetition_threshold < 1) throw config_error("repetition_threshold must be >= 1");
        if (!(latency_threshold > 0)) throw config_error("latency_threshold must be > 0");
        if (complexity_max_systems < 1) throw config_error("complexity_max_systems must be >= 1");
    }
};

// Fires when some canonical ToolCall has been issued more than N times
// anywhere in the history (adjacency not required, so A-B-A-B oscillation
// counts). Reports the first call to cross the threshold.
inline std::optional<TriggerFiring> check_repetition(const DeclarativeState& state, const TriggerConfig& config) {
    std::map<ToolCall, int> counts;
    const ActionEvent* crossing = nullptr;
    for (const auto& ev : state.history) {
        if (ev.kind != EventKind::ToolCall || !ev.call) continue;
        if (++counts[*ev.call] > config.repetition_threshold && !crossing) crossing = &ev;
    }
    if (!crossing) return std::nullopt;
    const int count = counts[*crossing->call];
    return TriggerFiring{TriggerKind::Repetition, crossing->seq,
                         crossing->call->render() + " invoked " + std::to_string(count) + " times (threshold " +
                             std::to_string(config.repetition_threshold) + ")"};
}

// Per-call bound is checked before the whole-run bound so a single slow call
// is reported as such even when it also pushes the run over the limit.
inline std::optional<TriggerFiring> check_latency(const DeclarativeState& state, const TriggerConfig& config) {
    const std::int64_t at_seq = state.history.empty() ? 0 : state.history.back().seq;
    const double limit = config.latency_threshold;

    const ActionEvent* last_call = nullptr;
    const ActionEvent* its_result = nullptr;
    for (const auto& ev : state.history) {
        if (ev.kind == EventKind::ToolCall) {
            last_call = &ev;
            its_result = nullptr;
        } else if (ev.kind == EventKind::ToolResult && last_call && !its_result) {
            its_result = &ev;
        }
    }
    if (last_call) {
        const double end = its_result ? its_result->timestamp : state.elapsed;
        const double gap = end - last_call->timestamp;
        if (gap > limit) {
            std::string what = last_call->call ? last_call->call->render() : std::string("tool call");
            return TriggerFiring{TriggerKind::Latency, at_seq,
                                 what + (its_result ? " took " : " unresolved for ") + format_fixed(gap, 6) +
                                     " s, exceeding the per-call limit of " + format_fixed(limit, 6) + " s by " +
                                     format_fixed(gap - limit, 6) + " s"};
        }
    }
    if (state.elapsed > limit) {
        return TriggerFiring{TriggerKind::Latency, at_seq,
                             "run elapsed " + format_fixed(state.elapsed, 6) + " s, exceeding the run limit of " +
                                 format_fixed(limit, 6) + " s by " + format_fixed(state.elapsed - limit, 6) + " s"};
    }
    return std::nullopt;
}

inline std::optional<TriggerFiring> check_complexity(const TaskSpec& task, const TriggerConfig& config) {
    std::string tripped;
    auto add = [&](const std::string& s) { tripped += (tripped.empty() ? "" : "; ") + s; };
    if (task.systems_touched > config.complexity_max_systems)
        add("systems_touched=" + std::to_string(task.systems_touched) + " exceeds " +
            std::to_string(config.complexity_max_systems));
    if (config.complexity_flags_trip) {
        if (task.high_stakes) add("high_stakes");
        if (task.ambiguous) add("ambiguous");
    }
    if (tripped.empty()) return std::nullopt;
    return TriggerFiring{TriggerKind::Complexity, 0, "task " + task.task_id + " tripped: " + tripped};
}

// Repetition then latency; used by the monitor after each agent event.
inline std::optional<TriggerFiring> evaluate_runtime(const DeclarativeState& state, const TriggerConfig& config) {
    if (config.enabled.contains(TriggerKind::Repetition))
        if (auto f = check_repetition(state, config)) return f;
    if (config.enabled.contains(TriggerKind::Latency))
        if (auto f = check_latency(state, config)) return f;
    return std::nullopt;
}

// Precedence COMPLEXITY -> REPETITION -> LATENCY among enabled triggers.
inline std::optional<TriggerFiring> evaluate(const DeclarativeState& state, const TriggerConfig& config) {
    if (config.enabled.contains(TriggerKind::Complexity))
        if (auto f = check_complexity(state.task, config)) return f;
    return evaluate_runtime(state, config);
}

} // namespace metacog
