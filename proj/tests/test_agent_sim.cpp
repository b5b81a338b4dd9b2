#include <gtest/gtest.h>

#include "metacog/agent_sim.hpp"
#include "metacog/json_io.hpp"
#include "support.hpp"

using namespace metacog;

namespace {

TaskSpec task_of(ScriptKind kind, int fail_count = 0) {
    TaskSpec t{"task-x", "Collect prices", FailureScript{kind, fail_count, 0.0, std::nullopt}, 0, false, false};
    if (kind == ScriptKind::Hang) t.script.hang_duration = 7.0;
    if (kind == ScriptKind::Loop) t.script.loop_call = canonicalize_tool_call("web.scrape", {{"page", "1"}});
    return t;
}

std::vector<EventKind> kinds_of(const std::vector<ActionEvent>& h) {
    std::vector<EventKind> out;
    for (const auto& e : h) out.push_back(e.kind);
    return out;
}

std::string serialize(const std::vector<TaskSpec>& tasks) {
    json j = json::array();
    for (const auto& t : tasks) j.push_back(to_json(t));
    return j.dump();
}

} // namespace

TEST(GenerateWorkload, ProportionsAndDeterminism) {
    WorkloadConfig cfg;
    cfg.n_tasks = 10;
    cfg.mix = {{ScriptKind::Clean, 0.8}, {ScriptKind::Fatal, 0.2}};
    auto a = generate_workload(cfg, 42);
    ASSERT_EQ(a.size(), 10u);
    int clean = 0, fatal = 0;
    for (const auto& t : a) {
        clean += t.script.kind == ScriptKind::Clean;
        fatal += t.script.kind == ScriptKind::Fatal;
    }
    EXPECT_EQ(clean, 8);
    EXPECT_EQ(fatal, 2);
    EXPECT_EQ(a, generate_workload(cfg, 42));
}

TEST(GenerateWorkload, ByteIdenticalAcrossInvocations) {
    WorkloadConfig cfg;
    cfg.n_tasks = 512;
    const auto first = serialize(generate_workload(cfg, 1));
    EXPECT_EQ(first, serialize(generate_workload(cfg, 1)));
    EXPECT_NE(first, serialize(generate_workload(cfg, 2)));
}

TEST(GenerateWorkload, ConfigErrors) {
    WorkloadConfig cfg;
    cfg.n_tasks = 0;
    EXPECT_THROW(generate_workload(cfg, 1), config_error);
    cfg = {};
    cfg.mix[ScriptKind::Clean] = 0.5;
    EXPECT_THROW(generate_workload(cfg, 1), config_error);
}

TEST(GenerateWorkload, LargestRemainderApportionment) {
    // 7 tasks at 1/3 each: floors 2,2,2 and the single leftover goes to the
    // earliest kind among the equal remainders.
    std::map<ScriptKind, double> mix{{ScriptKind::Clean, 1.0 / 3}, {ScriptKind::Flaky, 1.0 / 3},
                                     {ScriptKind::Loop, 1.0 / 3}};
    auto counts = apportion(mix, 7);
    EXPECT_EQ(counts[ScriptKind::Clean], 3);
    EXPECT_EQ(counts[ScriptKind::Flaky], 2);
    EXPECT_EQ(counts[ScriptKind::Loop], 2);

    auto defaults = apportion(WorkloadConfig{}.mix, 500);
    EXPECT_EQ(defaults[ScriptKind::Clean], 320);
    EXPECT_EQ(defaults[ScriptKind::Flaky], 60);
    EXPECT_EQ(defaults[ScriptKind::Fatal], 70);
    EXPECT_EQ(defaults[ScriptKind::Loop], 30);
    EXPECT_EQ(defaults[ScriptKind::Hang], 20);
}

TEST(RunHandle, CleanScript) {
    SimConfig sim;
    auto h = start_run(task_of(ScriptKind::Clean), sim, 9);
    auto first = h.step();
    EXPECT_EQ(first.kind, EventKind::Plan);
    EXPECT_DOUBLE_EQ(first.timestamp, sim.step_cost);
    std::vector<ActionEvent> events{first};
    while (!h.terminal()) events.push_back(h.step());
    EXPECT_EQ(kinds_of(events), (std::vector<EventKind>{EventKind::Plan, EventKind::ToolCall, EventKind::ToolResult,
                                                        EventKind::Success}));
    EXPECT_NEAR(events.back().timestamp, 4 * sim.step_cost, 1e-18);
    EXPECT_THROW(h.step(), state_error);
}

TEST(RunHandle, DeterministicStreams) {
    for (auto kind : all_script_kinds) {
        auto a = start_run(task_of(kind, 3), SimConfig{}, 77);
        auto b = start_run(task_of(kind, 3), SimConfig{}, 77);
        for (int i = 0; i < 40 && !a.terminal(); ++i) EXPECT_EQ(a.step(), b.step());
    }
}

TEST(RunHandle, LoopNeverTerminatesAndRepeatsTheSameCall) {
    auto h = start_run(task_of(ScriptKind::Loop), SimConfig{}, 1);
    std::vector<ActionEvent> events;
    for (int i = 0; i < 100; ++i) events.push_back(h.step());
    EXPECT_FALSE(h.terminal());
    std::optional<ToolCall> first;
    for (const auto& e : events) {
        EXPECT_FALSE(is_terminal(e.kind));
        if (e.kind != EventKind::ToolCall) continue;
        if (!first) first = e.call;
        EXPECT_EQ(e.call, first);
    }
    EXPECT_EQ(events[49].kind, EventKind::ToolCall);
    EXPECT_EQ(events[49].call, events[1].call);
}

TEST(RunHandle, FatalEndsWithConfiguredFailureCount) {
    auto r = run_to_completion(task_of(ScriptKind::Fatal, 4), SimConfig{}, 3, 100);
    EXPECT_EQ(r.state.history.back().kind, EventKind::Failure);
    EXPECT_EQ(r.record.failures, 4);
    EXPECT_EQ(r.record.retries, 3);
    EXPECT_EQ(r.record.success, 0);
}

TEST(RunHandle, FlakyRetriesUseDistinctCalls) {
    auto r = run_to_completion(task_of(ScriptKind::Flaky, 2), SimConfig{}, 3, 100);
    EXPECT_EQ(r.record.success, 1);
    EXPECT_EQ(r.record.failures, 2);
    EXPECT_EQ(r.record.retries, 2);
    std::set<ToolCall> calls;
    for (const auto& e : r.state.history)
        if (e.kind == EventKind::ToolCall) calls.insert(*e.call);
    EXPECT_EQ(calls.size(), 3u);
}

TEST(RunHandle, FlakyBeyondRetryLimitFails) {
    SimConfig sim;
    sim.retry_limit = 2;
    auto r = run_to_completion(task_of(ScriptKind::Flaky, 4), sim, 3, 100);
    EXPECT_EQ(r.record.success, 0);
    EXPECT_EQ(r.record.retries, 2);
    EXPECT_EQ(r.record.failures, 3);
}

TEST(RunHandle, HangAddsHangDurationOnce) {
    auto r = run_to_completion(task_of(ScriptKind::Hang), SimConfig{}, 3, 100);
    EXPECT_EQ(kinds_of(r.state.history), (std::vector<EventKind>{EventKind::Plan, EventKind::ToolCall,
                                                                 EventKind::ToolResult, EventKind::Failure}));
    EXPECT_NEAR(r.record.duration_s, 7.0 + 4e-6, 1e-12);
}

TEST(RunToCompletion, Examples) {
    auto clean = run_to_completion(task_of(ScriptKind::Clean), SimConfig{}, 1, 100).record;
    EXPECT_EQ(clean.success, 1);
    EXPECT_EQ(clean.failures, 0);
    EXPECT_EQ(clean.handoff, 0);
    EXPECT_EQ(clean.condition, Condition::Baseline);

    auto loop = run_to_completion(task_of(ScriptKind::Loop), SimConfig{}, 1, 100);
    EXPECT_EQ(loop.record.success, 0);
    EXPECT_GT(loop.record.failures, 0);
    EXPECT_EQ(loop.record.handoff, 0);
    EXPECT_EQ(loop.state.history.size(), 100u);

    EXPECT_THROW(run_to_completion(task_of(ScriptKind::Clean), SimConfig{}, 1, 0), config_error);
}

// duration = step_cost * events + hang + overhead * events (monitored),
// summed independently over the trace.
TEST(RunHandle, ClockConsistency) {
    SimConfig sim;
    for (bool monitored : {false, true})
        for (auto kind : all_script_kinds) {
            auto h = start_run(task_of(kind, 3), sim, 5, monitored);
            int events = 0;
            double hang = 0;
            double last = 0;
            while (!h.terminal() && events < 60) {
                auto e = h.step();
                ++events;
                if (kind == ScriptKind::Hang && e.kind == EventKind::ToolResult) hang += 7.0;
                last = e.timestamp;
            }
            const double expected =
                sim.step_cost * events + hang + (monitored ? sim.monitor_overhead_per_event * events : 0.0);
            EXPECT_NEAR(last, expected, 1e-12) << to_string(kind) << " monitored=" << monitored;
        }
}

TEST(Trace, TabSeparatedFormat) {
    auto r = run_to_completion(task_of(ScriptKind::Clean), SimConfig{}, 1, 100);
    auto text = render_trace(r.state.history);
    auto first_line = text.substr(0, text.find('\n'));
    EXPECT_EQ(first_line.rfind("1\t0.000001000\tPLAN\t\t", 0), 0u) << first_line;
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
    for (std::size_t start = 0; start < text.size();) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl - start);
        EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 4) << line;
        start = nl + 1;
    }
}
