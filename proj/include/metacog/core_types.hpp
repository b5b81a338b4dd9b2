#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace metacog {

// Error classes. Validation-type errors map to CLI exit 1, io_error to exit 2.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_input_error : error {
    using error::error;
};
struct config_error : error {
    using error::error;
};
struct state_error : error {
    using error::error;
};
struct validation_error : error {
    using error::error;
};
struct schema_error : validation_error {
    using validation_error::validation_error;
};
struct io_error : error {
    using error::error;
};

// Locale-independent fixed-point rendering.
inline std::string format_fixed(double value, int decimals) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    if (ec != std::errc{}) throw invalid_input_error("format_fixed: value out of range");
    return std::string(buf, end);
}

// Shortest representation that parses back to the same double.
inline std::string format_exact(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw invalid_input_error("format_exact: value out of range");
    return std::string(buf, end);
}

inline std::optional<double> parse_double(std::string_view text) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

template <class Int>
std::optional<Int> parse_int(std::string_view text) {
    Int value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

// ---------------------------------------------------------------------------
// Tool calls

struct ToolCall {
    std::string tool_name;
    std::string args_digest;

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
    friend auto operator<=>(const ToolCall&, const ToolCall&) = default;

    std::string render() const { return tool_name + "(" + args_digest + ")"; }
};

using ToolArgs = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline void append_escaped(std::string& out, std::string_view text) {
    static constexpr char hex[] = "0123456789ABCDEF";
    for (unsigned char c : text) {
        if (c == '%' || c == '&' || c == '=' || c < 0x20 || c == 0x7F) {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        } else {
            out += static_cast<char>(c);
        }
    }
}

} // namespace detail

// Keys sorted bytewise, each pair rendered as key=value with '%', '&', '='
// and control bytes percent-encoded, pairs joined by '&'. The escaping makes
// the encoding injective, so digest equality is exactly argument-set equality.
inline ToolCall canonicalize_tool_call(std::string_view tool_name, ToolArgs args) {
    if (tool_name.empty()) throw invalid_input_error("canonicalize_tool_call: empty tool_name");
    std::sort(args.begin(), args.end());
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i].first == args[i - 1].first)
            throw invalid_input_error("canonicalize_tool_call: duplicate argument key '" + args[i].first + "'");
    }
    std::string digest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) digest += '&';
        detail::append_escaped(digest, args[i].first);
        digest += '=';
        detail::append_escaped(digest, args[i].second);
    }
    return ToolCall{std::string(tool_name), std::move(digest)};
}

// ---------------------------------------------------------------------------
// Tasks and scripts

enum class ScriptKind { Clean, Flaky, Loop, Hang, Fatal };

inline constexpr ScriptKind all_script_kinds[] = {ScriptKind::Clean, ScriptKind::Flaky, ScriptKind::Loop,
                                                  ScriptKind::Hang, ScriptKind::Fatal};

inline std::string_view to_string(ScriptKind k) {
    switch (k) {
    case ScriptKind::Clean: return "CLEAN";
    case ScriptKind::Flaky: return "FLAKY";
    case ScriptKind::Loop: return "LOOP";
    case ScriptKind::Hang: return "HANG";
    case ScriptKind::Fatal: return "FATAL";
    }
    return "?";
}

inline std::optional<ScriptKind> script_kind_from_string(std::string_view s) {
    std::string upper(s);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto k : all_script_kinds)
        if (upper == to_string(k)) return k;
    return std::nullopt;
}

struct FailureScript {
    ScriptKind kind = ScriptKind::Clean;
    int fail_count = 0;          // FLAKY and FATAL only
    double hang_duration = 0.0;  // HANG only, virtual seconds
    std::optional<ToolCall> loop_call;

    friend bool operator==(const FailureScript&, const FailureScript&) = default;

    void validate() const {
        if (fail_count < 0) throw invalid_input_error("FailureScript: fail_count must be >= 0");
        if (kind == ScriptKind::Fatal && fail_count < 1)
            throw invalid_input_error("FailureScript: FATAL requires fail_count >= 1");
        if (kind == ScriptKind::Hang && !(hang_duration > 0))
            throw invalid_input_error("FailureScript: HANG requires hang_duration > 0");
        if (loop_call.has_value() != (kind == ScriptKind::Loop))
            throw invalid_input_error("FailureScript: loop_call present iff kind is LOOP");
    }
};

struct TaskSpec {
    std::string task_id;
    std::string initial_request;
    FailureScript script;
    int systems_touched = 0;
    bool high_stakes = false;
    bool ambiguous = false;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

    void validate() const {
        if (task_id.empty()) throw invalid_input_error("TaskSpec: empty task_id");
        if (systems_touched < 0) throw invalid_input_error("TaskSpec " + task_id + ": systems_touched must be >= 0");
        script.validate();
    }
};

// ---------------------------------------------------------------------------
// Events and the declarative meta-model

enum class EventKind { Plan, ToolCall, ToolResult, Retry, PartialOutput, Success, Failure };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Plan: return "PLAN";
    case EventKind::ToolCall: return "TOOL_CALL";
    case EventKind::ToolResult: return "TOOL_RESULT";
    case EventKind::Retry: return "RETRY";
    case EventKind::PartialOutput: return "PARTIAL_OUTPUT";
    case EventKind::Success: return "SUCCESS";
    case EventKind::Failure: return "FAILURE";
    }
    return "?";
}

inline bool is_terminal(EventKind k) { return k == EventKind::Success || k == EventKind::Failure; }

struct ActionEvent {
    std::int64_t seq = 0;
    double timestamp = 0.0;
    EventKind kind = EventKind::Plan;
    std::optional<ToolCall> call;
    std::string payload;
    bool error = false;  // TOOL_RESULT only: the call failed

    friend bool operator==(const ActionEvent&, const ActionEvent&) = default;

    bool is_failed_result() const { return kind == EventKind::ToolResult && error; }

    // Human-readable single line for conversation logs.
    std::string describe() const {
        std::string out = "#" + std::to_string(seq) + " t=" + format_fixed(timestamp, 9) + "s " + std::string(to_string(kind));
        if (call) out += " " + call->render();
        if (!payload.empty()) out += " :: " + payload;
        return out;
    }

    // One line of the trace file / trace: seq, timestamp, kind, tool, payload.
    std::string render(char sep = '\t') const {
        std::string out = std::to_string(seq);
        out += sep;
        out += format_fixed(timestamp, 9);
        out += sep;
        out += to_string(kind);
        out += sep;
        if (call) out += call->render();
        out += sep;
        out += payload;
        return out;
    }
};

struct DeclarativeState {
    TaskSpec task;
    std::string current_plan;
    std::vector<ActionEvent> history;
    int failures_so_far = 0;
    int retries_so_far = 0;
    double elapsed = 0.0;

    friend bool operator==(const DeclarativeState&, const DeclarativeState&) = default;

    const ActionEvent* last_event() const { return history.empty() ? nullptr : &history.back(); }

    const ToolCall* last_tool_call() const {
        for (auto it = history.rbegin(); it != history.rend(); ++it)
            if (it->kind == EventKind::ToolCall && it->call) return &*it->call;
        return nullptr;
    }

    bool terminal() const { return !history.empty() && is_terminal(history.back().kind); }

    void apply(ActionEvent event) {
        if (!history.empty()) {
            if (event.seq <= history.back().seq) throw state_error("DeclarativeState: event seq not increasing");
            if (event.timestamp < history.back().timestamp)
                throw state_error("DeclarativeState: event timestamp decreasing");
        }
        if (event.timestamp < 0) throw state_error("DeclarativeState: negative timestamp");
        if (event.kind == EventKind::Plan) current_plan = event.payload;
        if (event.is_failed_result()) ++failures_so_far;
        if (event.kind == EventKind::Retry) ++retries_so_far;
        elapsed = event.timestamp;
        history.push_back(std::move(event));
    }
};

// ---------------------------------------------------------------------------
// Triggers

enum class TriggerKind { Repetition, Complexity, Latency };

inline constexpr TriggerKind all_trigger_kinds[] = {TriggerKind::Repetition, TriggerKind::Complexity,
                                                    TriggerKind::Latency};

inline std::string_view to_string(TriggerKind k) {
    switch (k) {
    case TriggerKind::Repetition: return "REPETITION";
    case TriggerKind::Complexity: return "COMPLEXITY";
    case TriggerKind::Latency: return "LATENCY";
    }
    return "?";
}

inline std::optional<TriggerKind> trigger_kind_from_string(std::string_view s) {
    std::string upper(s);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto k : all_trigger_kinds)
        if (upper == to_string(k)) return k;
    return std::nullopt;
}

struct TriggerFiring {
    TriggerKind trigger = TriggerKind::Repetition;
    std::int64_t fired_at_seq = 0;
    std::string evidence;

    friend bool operator==(const TriggerFiring&, const TriggerFiring&) = default;
};

// ---------------------------------------------------------------------------
// Experiment records

enum class Condition { Baseline, Monitored };

inline std::string_view to_string(Condition c) { return c == Condition::Baseline ? "BASELINE" : "MONITORED"; }

inline std::optional<Condition> condition_from_string(std::string_view s) {
    if (s == "BASELINE") return Condition::Baseline;
    if (s == "MONITORED") return Condition::Monitored;
    return std::nullopt;
}

struct RunRecord {
    std::string run_id;
    std::string task_id;
    Condition condition = Condition::Baseline;
    std::int64_t seed = 0;
    int success = 0;
    int failures = 0;
    int retries = 0;
    int handoff = 0;
    std::string trigger;
    double duration_s = 0.0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;

    // Throws validation_error naming the run and the violated rule.
    void validate() const {
        auto fail = [&](const std::string& rule) { throw validation_error("run " + run_id + ": " + rule); };
        if (run_id.empty()) throw validation_error("run record with empty run_id");
        if (success != 0 && success != 1) fail("success must be 0 or 1");
        if (handoff != 0 && handoff != 1) fail("handoff must be 0 or 1");
        if (failures < 0) fail("failures must be >= 0");
        if (retries < 0) fail("retries must be >= 0");
        if (!(duration_s >= 0)) fail("duration_s must be >= 0");
        if (condition == Condition::Baseline && handoff != 0) fail("BASELINE run with handoff=1");
        if (condition == Condition::Baseline && !trigger.empty()) fail("BASELINE run with non-empty trigger");
        if (handoff == 1 && trigger.empty()) fail("handoff=1 requires a trigger");
        if (!trigger.empty() && !trigger_kind_from_string(trigger)) fail("unknown trigger '" + trigger + "'");
    }
};

} // namespace metacog
