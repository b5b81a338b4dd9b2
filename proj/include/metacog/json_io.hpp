#pragma once

#include <string>

#include "json.hpp"
#include "metacog/core_types.hpp"

namespace metacog {

using json = nlohmann::ordered_json;

inline json to_json(const ToolCall& c) { return json{{"tool_name", c.tool_name}, {"args_digest", c.args_digest}}; }

inline json to_json(const FailureScript& s) {
    json j{{"kind", to_string(s.kind)}, {"fail_count", s.fail_count}, {"hang_duration", s.hang_duration}};
    j["loop_call"] = s.loop_call ? to_json(*s.loop_call) : json(nullptr);
    return j;
}

inline json to_json(const TaskSpec& t) {
    return json{{"task_id", t.task_id},
                {"initial_request", t.initial_request},
                {"script", to_json(t.script)},
                {"systems_touched", t.systems_touched},
                {"high_stakes", t.high_stakes},
                {"ambiguous", t.ambiguous}};
}

inline json to_json(const ActionEvent& e) {
    json j{{"seq", e.seq}, {"timestamp", e.timestamp}, {"kind", to_string(e.kind)}};
    j["call"] = e.call ? to_json(*e.call) : json(nullptr);
    j["payload"] = e.payload;
    j["error"] = e.error;
    return j;
}

inline json to_json(const DeclarativeState& s) {
    json history = json::array();
    for (const auto& e : s.history) history.push_back(to_json(e));
    return json{{"task", to_json(s.task)},
                {"current_plan", s.current_plan},
                {"history", std::move(history)},
                {"failures_so_far", s.failures_so_far},
                {"retries_so_far", s.retries_so_far},
                {"elapsed", s.elapsed}};
}

inline json to_json(const TriggerFiring& f) {
    return json{{"trigger", to_string(f.trigger)}, {"fired_at_seq", f.fired_at_seq}, {"evidence", f.evidence}};
}

inline json to_json(const RunRecord& r) {
    return json{{"run_id", r.run_id},       {"task_id", r.task_id},   {"condition", to_string(r.condition)},
                {"seed", r.seed},           {"success", r.success},   {"failures", r.failures},
                {"retries", r.retries},     {"handoff", r.handoff},   {"trigger", r.trigger},
                {"duration_s", r.duration_s}};
}

inline ToolCall tool_call_from_json(const json& j) {
    return ToolCall{j.at("tool_name").get<std::string>(), j.at("args_digest").get<std::string>()};
}

// Lenient task parser for request bodies: only script.kind is required.
inline TaskSpec task_from_json(const json& j, const std::string& default_id) {
    try {
        TaskSpec t;
        t.task_id = j.value("task_id", default_id);
        t.initial_request = j.value("initial_request", std::string("Complete the requested workflow"));
        t.systems_touched = j.value("systems_touched", 0);
        t.high_stakes = j.value("high_stakes", false);
        t.ambiguous = j.value("ambiguous", false);
        const json& s = j.at("script");
        auto kind = script_kind_from_string(s.at("kind").get<std::string>());
        if (!kind) throw invalid_input_error("unknown script kind '" + s.at("kind").get<std::string>() + "'");
        t.script.kind = *kind;
        t.script.fail_count = s.value("fail_count", *kind == ScriptKind::Fatal || *kind == ScriptKind::Flaky ? 3 : 0);
        t.script.hang_duration = s.value("hang_duration", *kind == ScriptKind::Hang ? 7.0 : 0.0);
        if (*kind == ScriptKind::Loop) {
            if (s.contains("loop_call") && !s["loop_call"].is_null())
                t.script.loop_call = tool_call_from_json(s["loop_call"]);
            else
                t.script.loop_call = canonicalize_tool_call("web.scrape_listing", {{"task", t.task_id}, {"cursor", "next"}});
        }
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw invalid_input_error(std::string("malformed task: ") + e.what());
    }
}

} // namespace metacog
