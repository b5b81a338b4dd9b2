#pragma once

#include <optional>
#include <string>

#include "metacog/agent_sim.hpp"
#include "metacog/handoff.hpp"
#include "metacog/triggers.hpp"

namespace metacog {

enum class DecisionKind { Continue, Handoff };

struct MonitorDecision {
    DecisionKind kind = DecisionKind::Continue;
    std::optional<TriggerFiring> firing;

    static MonitorDecision proceed() { return {}; }
    static MonitorDecision handoff(TriggerFiring f) { return {DecisionKind::Handoff, std::move(f)}; }
};

// The supervising layer for one run: owns the agent handle, keeps the
// declarative meta-model current and consults the triggers after each event.
class Monitor {
public:
    Monitor(const TaskSpec& task, const SimConfig& sim, TriggerConfig triggers, std::int64_t seed)
        : handle_(task, sim, seed, /*monitored=*/true), triggers_(triggers), state_(initial_state(task)) {
        triggers_.validate();
    }

    // Complexity is judged once, before the agent takes any step.
    MonitorDecision pre_check() const {
        if (triggers_.enabled.contains(TriggerKind::Complexity))
            if (auto f = check_complexity(state_.task, triggers_)) return MonitorDecision::handoff(std::move(*f));
        return MonitorDecision::proceed();
    }

    MonitorDecision step() {
        state_.apply(handle_.step());
        if (state_.terminal()) return MonitorDecision::proceed();
        if (auto f = evaluate_runtime(state_, triggers_)) return MonitorDecision::handoff(std::move(*f));
        return MonitorDecision::proceed();
    }

    bool agent_terminal() const { return handle_.terminal(); }
    std::int64_t events() const { return handle_.events_emitted(); }
    DeclarativeState snapshot() const { return state_; }
    const DeclarativeState& state() const { return state_; }

private:
    RunHandle handle_;
    TriggerConfig triggers_;
    DeclarativeState state_;
};

struct MonitoredOutcome {
    DeclarativeState state;
    RunRecord record;
    std::optional<HandoffPacket> packet;
    // LIVE resolver: the record is provisional until complete_parked_run.
    bool pending = false;
};

inline MonitoredOutcome monitored_run(const TaskSpec& task, const SimConfig& sim, const TriggerConfig& triggers,
                                      std::int64_t seed, const HandoffResolver& resolver, int max_steps,
                                      std::string run_id = {}) {
    if (max_steps < 1) throw config_error("max_steps must be >= 1");
    resolver.validate();
    Monitor monitor(task, sim, triggers, seed);

    auto decision = monitor.pre_check();
    while (decision.kind == DecisionKind::Continue && !monitor.agent_terminal() && monitor.events() < max_steps)
        decision = monitor.step();

    MonitoredOutcome out;
    out.state = monitor.snapshot();
    auto& r = out.record;
    r.run_id = run_id.empty() ? task.task_id : std::move(run_id);
    r.task_id = task.task_id;
    r.condition = Condition::Monitored;
    r.seed = seed;
    r.failures = out.state.failures_so_far;
    r.retries = out.state.retries_so_far;
    r.duration_s = out.state.elapsed;

    if (decision.kind == DecisionKind::Handoff) {
        r.handoff = 1;
        r.trigger = std::string(to_string(decision.firing->trigger));
        r.duration_s += sim.handoff_processing;
        auto packet = resolve(make_handoff_packet(r.run_id, out.state, *decision.firing), resolver);
        out.pending = packet.status == HandoffStatus::Pending;
        r.success = packet.status == HandoffStatus::ResolvedSuccess ? 1 : 0;
        out.packet = std::move(packet);
    } else {
        r.success = out.state.terminal() && out.state.history.back().kind == EventKind::Success ? 1 : 0;
    }
    return out;
}

// Finishes a run parked on a live handoff. The virtual clock stays frozen
// while the operator deliberates.
inline MonitoredOutcome complete_parked_run(MonitoredOutcome parked, HandoffPacket resolved) {
    if (!parked.pending || !parked.packet) throw state_error("run " + parked.record.run_id + " is not parked");
    if (resolved.handoff_id != parked.packet->handoff_id) throw state_error("handoff id mismatch");
    if (resolved.status == HandoffStatus::Pending) throw state_error("handoff " + resolved.handoff_id + " unresolved");
    parked.record.success = resolved.status == HandoffStatus::ResolvedSuccess ? 1 : 0;
    parked.packet = std::move(resolved);
    parked.pending = false;
    return parked;
}

} // namespace metacog
