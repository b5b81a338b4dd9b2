#include <gtest/gtest.h>

#include <map>
#include <random>

#include "metacog/core_types.hpp"
#include "support.hpp"

using namespace metacog;

TEST(CanonicalizeToolCall, KeyOrderIndependent) {
    auto a = canonicalize_tool_call("search", {{"q", "rust"}, {"page", "1"}});
    auto b = canonicalize_tool_call("search", {{"page", "1"}, {"q", "rust"}});
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.args_digest, "page=1&q=rust");
}

TEST(CanonicalizeToolCall, EmptyArgs) {
    auto c = canonicalize_tool_call("search", {});
    EXPECT_EQ(c.tool_name, "search");
    EXPECT_EQ(c.args_digest, "");
    EXPECT_EQ(c, canonicalize_tool_call("search", {}));
}

TEST(CanonicalizeToolCall, RejectsEmptyToolNameAndDuplicateKeys) {
    EXPECT_THROW(canonicalize_tool_call("", {{"q", "x"}}), invalid_input_error);
    EXPECT_THROW(canonicalize_tool_call("t", {{"q", "x"}, {"q", "y"}}), invalid_input_error);
}

TEST(CanonicalizeToolCall, ValueChangeChangesDigest) {
    EXPECT_NE(canonicalize_tool_call("search", {{"q", "rust"}, {"page", "1"}}),
              canonicalize_tool_call("search", {{"q", "rust"}, {"page", "2"}}));
}

// Every argument set over a small alphabet that includes the delimiter
// characters: digest equality must coincide with logical (map) equality.
TEST(CanonicalizeToolCall, BruteForceDigestEqualityIsLogicalEquality) {
    const std::vector<std::string> keys{"a", "b", "a=", "&"};
    const std::vector<std::string> vals{"", "1", "=", "&x", "%"};
    std::vector<std::map<std::string, std::string>> sets{{}};
    for (const auto& k : keys) {
        auto current = sets;
        for (const auto& s : current)
            for (const auto& v : vals) {
                auto next = s;
                next[k] = v;
                sets.push_back(next);
            }
    }
    ASSERT_GT(sets.size(), 1000u);

    std::vector<ToolCall> calls;
    std::mt19937_64 rng(3);
    for (const auto& s : sets) {
        ToolArgs args(s.begin(), s.end());
        std::shuffle(args.begin(), args.end(), rng);
        calls.push_back(canonicalize_tool_call("t", args));
    }
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        auto [it, inserted] = seen.emplace(calls[i].args_digest, i);
        if (!inserted) {
            EXPECT_EQ(sets[it->second], sets[i]) << "digest collision: " << calls[i].args_digest;
        }
    }
    EXPECT_EQ(seen.size(), sets.size());
}

TEST(DeclarativeState, ReplayCountsMatchNaiveRecount) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        auto history = support::random_history(rng, 30, 3);
        for (auto& e : history)
            if (rng() % 5 == 0) e.kind = EventKind::Retry;
        DeclarativeState s;
        for (const auto& e : history) s.apply(e);
        int failures = 0, retries = 0;
        for (const auto& e : history) {
            failures += e.kind == EventKind::ToolResult && e.error;
            retries += e.kind == EventKind::Retry;
        }
        EXPECT_EQ(s.failures_so_far, failures);
        EXPECT_EQ(s.retries_so_far, retries);
        EXPECT_EQ(s.history.size(), history.size());
        EXPECT_DOUBLE_EQ(s.elapsed, history.empty() ? 0.0 : history.back().timestamp);
    }
}

TEST(DeclarativeState, RejectsNonMonotoneEvents) {
    DeclarativeState s;
    s.apply(ActionEvent{1, 1.0, EventKind::Plan, {}, "p", false});
    EXPECT_THROW(s.apply(ActionEvent{1, 2.0, EventKind::Plan, {}, "", false}), state_error);
    EXPECT_THROW(s.apply(ActionEvent{2, 0.5, EventKind::Plan, {}, "", false}), state_error);
    EXPECT_EQ(s.current_plan, "p");
}

TEST(RunRecord, Invariants) {
    RunRecord ok{"r1", "t1", Condition::Monitored, 1, 1, 2, 1, 1, "REPETITION", 0.5};
    EXPECT_NO_THROW(ok.validate());

    auto bad = ok;
    bad.success = 2;
    EXPECT_THROW(bad.validate(), validation_error);

    bad = ok;
    bad.condition = Condition::Baseline;
    EXPECT_THROW(bad.validate(), validation_error);

    bad = ok;
    bad.trigger = "";
    EXPECT_THROW(bad.validate(), validation_error);

    bad = ok;
    bad.trigger = "PANIC";
    EXPECT_THROW(bad.validate(), validation_error);

    bad = ok;
    bad.duration_s = -1;
    EXPECT_THROW(bad.validate(), validation_error);
}

TEST(FailureScript, Validation) {
    FailureScript loop{ScriptKind::Loop, 0, 0, std::nullopt};
    EXPECT_THROW(loop.validate(), invalid_input_error);
    FailureScript hang{ScriptKind::Hang, 0, 0.0, std::nullopt};
    EXPECT_THROW(hang.validate(), invalid_input_error);
    FailureScript clean_with_call{ScriptKind::Clean, 0, 0, ToolCall{"t", ""}};
    EXPECT_THROW(clean_with_call.validate(), invalid_input_error);
    FailureScript fatal{ScriptKind::Fatal, 0, 0, std::nullopt};
    EXPECT_THROW(fatal.validate(), invalid_input_error);
}

TEST(Formatting, FixedIsLocaleIndependent) {
    EXPECT_EQ(format_fixed(1.5e-5, 9), "0.000015000");
    EXPECT_EQ(format_fixed(12.0, 2), "12.00");
    EXPECT_EQ(*parse_double(format_exact(1.0 / 3.0)), 1.0 / 3.0);
}
