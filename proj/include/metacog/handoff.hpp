#pragma once

#include <optional>
#include <string>
#include <vector>

#include "metacog/core_types.hpp"
#include "metacog/json_io.hpp"
#include "metacog/random.hpp"

namespace metacog {

struct ContextBundle {
    std::vector<std::string> conversation_log;
    std::string initial_request;
    std::vector<std::string> partial_outputs;
    DeclarativeState task_state_at_failure;

    friend bool operator==(const ContextBundle&, const ContextBundle&) = default;
};

struct ThoughtProcessSummary {
    std::string attempting;
    std::string went_wrong;
    std::string trigger_explanation;
    std::string handoff_reason;

    friend bool operator==(const ThoughtProcessSummary&, const ThoughtProcessSummary&) = default;
};

enum class HandoffStatus { Pending, ResolvedSuccess, ResolvedFailure };

inline std::string_view to_string(HandoffStatus s) {
    switch (s) {
    case HandoffStatus::Pending: return "PENDING";
    case HandoffStatus::ResolvedSuccess: return "RESOLVED_SUCCESS";
    case HandoffStatus::ResolvedFailure: return "RESOLVED_FAILURE";
    }
    return "?";
}

struct HandoffPacket {
    std::string handoff_id;
    std::string run_id;
    TriggerFiring firing;
    ContextBundle bundle;
    ThoughtProcessSummary summary;
    HandoffStatus status = HandoffStatus::Pending;
    std::optional<std::string> resolver_note;

    friend bool operator==(const HandoffPacket&, const HandoffPacket&) = default;
};

enum class ResolverKind { Simulated, Live };

struct HandoffResolver {
    ResolverKind kind = ResolverKind::Simulated;
    double p_resolve = 1.0 / 3.0;
    std::int64_t rng_seed = 0;

    friend bool operator==(const HandoffResolver&, const HandoffResolver&) = default;

    void validate() const {
        if (!(p_resolve >= 0 && p_resolve <= 1)) throw config_error("p_resolve must be in [0,1]");
    }
};

inline ContextBundle build_context_bundle(const DeclarativeState& state) {
    ContextBundle b;
    b.conversation_log.reserve(state.history.size());
    for (const auto& ev : state.history) {
        b.conversation_log.push_back(ev.describe());
        if (ev.kind == EventKind::PartialOutput || ev.kind == EventKind::ToolResult)
            b.partial_outputs.push_back(ev.payload);
    }
    b.initial_request = state.task.initial_request;
    b.task_state_at_failure = state;
    return b;
}

inline std::string handoff_reason_template(TriggerKind kind) {
    switch (kind) {
    case TriggerKind::Repetition:
        return "The agent is stuck repeating the same tool call without making progress, so a human should take "
               "over before more resources are consumed.";
    case TriggerKind::Complexity:
        return "The task needs judgment beyond what the agent is configured to handle, so a human should own it "
               "before the agent produces a flawed or unrecoverable result.";
    case TriggerKind::Latency:
        return "Execution time exceeded the configured limit, which points to a hang or bottleneck, so a human "
               "should decide how to proceed.";
    }
    return {};
}

// Deterministic template expansion over the meta-model and the firing.
inline ThoughtProcessSummary summarize(const DeclarativeState& state, const TriggerFiring& firing) {
    ThoughtProcessSummary s;

    if (state.current_plan.empty()) {
        s.attempting = "No step had been executed yet. The request was: \"" + state.task.initial_request + "\".";
    } else {
        s.attempting = "Following the plan " + state.current_plan + ".";
        if (const auto* call = state.last_tool_call()) s.attempting += " Last tool call: " + call->render() + ".";
    }

    const std::string progress = " Observed so far: " + std::to_string(state.history.size()) + " event(s), " +
                                 std::to_string(state.failures_so_far) + " failed tool result(s), " +
                                 std::to_string(state.retries_so_far) + " retry(ies), " +
                                 format_fixed(state.elapsed, 9) + " s elapsed.";
    switch (firing.trigger) {
    case TriggerKind::Repetition: s.went_wrong = "The agent kept re-issuing an identical call: " + firing.evidence + "."; break;
    case TriggerKind::Complexity: s.went_wrong = "The task is outside the agent's safe envelope: " + firing.evidence + "."; break;
    case TriggerKind::Latency: s.went_wrong = "Execution ran too long: " + firing.evidence + "."; break;
    }
    s.went_wrong += progress;

    s.trigger_explanation = std::string(to_string(firing.trigger)) + " trigger fired at event " +
                            std::to_string(firing.fired_at_seq) + ": " + firing.evidence;
    s.handoff_reason = handoff_reason_template(firing.trigger);
    return s;
}

inline HandoffPacket make_handoff_packet(const std::string& run_id, const DeclarativeState& state,
                                         const TriggerFiring& firing) {
    HandoffPacket p;
    p.handoff_id = "H-" + run_id;
    p.run_id = run_id;
    p.firing = firing;
    p.bundle = build_context_bundle(state);
    p.summary = summarize(state, firing);
    return p;
}

// PENDING -> RESOLVED_*; anything else is a state error.
inline HandoffPacket apply_resolution(HandoffPacket packet, bool success, std::optional<std::string> note) {
    if (packet.status != HandoffStatus::Pending)
        throw state_error("handoff " + packet.handoff_id + " already " + std::string(to_string(packet.status)));
    packet.status = success ? HandoffStatus::ResolvedSuccess : HandoffStatus::ResolvedFailure;
    packet.resolver_note = std::move(note);
    return packet;
}

// Simulated draws are a pure function of (resolver seed, handoff id), so the
// outcome does not depend on which worker resolves first.
inline double simulated_draw(const HandoffResolver& resolver, const std::string& handoff_id) {
    return unit_interval(splitmix64(splitmix64(static_cast<std::uint64_t>(resolver.rng_seed)) ^ fnv1a(handoff_id)));
}

inline HandoffPacket resolve(HandoffPacket packet, const HandoffResolver& resolver) {
    if (packet.status != HandoffStatus::Pending)
        throw state_error("handoff " + packet.handoff_id + " already " + std::string(to_string(packet.status)));
    if (resolver.kind == ResolverKind::Live) return packet;
    const bool ok = simulated_draw(resolver, packet.handoff_id) < resolver.p_resolve;
    return apply_resolution(std::move(packet), ok,
                            ok ? "simulated operator completed the task"
                               : "simulated operator could not salvage the task");
}

inline json to_json(const ContextBundle& b) {
    return json{{"conversation_log", b.conversation_log},
                {"initial_request", b.initial_request},
                {"partial_outputs", b.partial_outputs},
                {"task_state_at_failure", to_json(b.task_state_at_failure)}};
}

inline json to_json(const ThoughtProcessSummary& s) {
    return json{{"attempting", s.attempting},
                {"went_wrong", s.went_wrong},
                {"trigger_explanation", s.trigger_explanation},
                {"handoff_reason", s.handoff_reason}};
}

inline json to_json(const HandoffPacket& p) {
    json j{{"handoff_id", p.handoff_id},
           {"run_id", p.run_id},
           {"task_id", p.bundle.task_state_at_failure.task.task_id},
           {"trigger", to_string(p.firing.trigger)},
           {"firing", to_json(p.firing)},
           {"bundle", to_json(p.bundle)},
           {"summary", to_json(p.summary)},
           {"status", to_string(p.status)}};
    j["resolver_note"] = p.resolver_note ? json(*p.resolver_note) : json(nullptr);
    return j;
}

} // namespace metacog
