#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metacog/core_types.hpp"
#include "metacog/json_io.hpp"

namespace metacog {

struct MetricsTable {
    Condition condition = Condition::Baseline;
    std::int64_t total_runs = 0;
    std::int64_t total_successes = 0;
    std::int64_t total_failures = 0;
    double success_rate = 0.0;
    double total_duration = 0.0;
    double avg_duration = 0.0;
    std::int64_t total_handoffs = 0;

    friend bool operator==(const MetricsTable&, const MetricsTable&) = default;
};

struct HandoffDistribution {
    std::int64_t total_handoffs = 0;
    std::int64_t successful_handoffs = 0;
    std::int64_t failed_handoffs = 0;
    std::map<int, std::int64_t> by_failure_count;

    friend bool operator==(const HandoffDistribution&, const HandoffDistribution&) = default;
};

struct ComparisonReport {
    MetricsTable baseline;
    MetricsTable monitored;
    double success_rate_delta_pp = 0.0;
    std::int64_t failure_reduction = 0;
    std::optional<double> duration_ratio;  // undefined when the baseline average is zero
};

namespace detail {

inline Condition single_condition(std::span<const RunRecord> records) {
    const auto c = records.front().condition;
    for (const auto& r : records)
        if (r.condition != c) throw validation_error("record set mixes BASELINE and MONITORED runs");
    return c;
}

// Summing in sorted order makes the total independent of record order.
inline double order_independent_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0;
    for (double v : values) sum += v;
    return sum;
}

} // namespace detail

inline MetricsTable compute_metrics(std::span<const RunRecord> records) {
    if (records.empty()) throw invalid_input_error("compute_metrics: empty record set");
    MetricsTable t;
    t.condition = detail::single_condition(records);
    std::vector<double> durations;
    durations.reserve(records.size());
    for (const auto& r : records) {
        ++t.total_runs;
        t.total_successes += r.success;
        t.total_handoffs += r.handoff;
        durations.push_back(r.duration_s);
    }
    t.total_failures = t.total_runs - t.total_successes;
    t.success_rate = static_cast<double>(t.total_successes) / static_cast<double>(t.total_runs);
    t.total_duration = detail::order_independent_sum(std::move(durations));
    t.avg_duration = t.total_duration / static_cast<double>(t.total_runs);
    return t;
}

inline HandoffDistribution handoff_distribution(std::span<const RunRecord> records) {
    HandoffDistribution d;
    if (records.empty()) return d;
    detail::single_condition(records);
    for (const auto& r : records) {
        if (!r.handoff) continue;
        ++d.total_handoffs;
        ++(r.success ? d.successful_handoffs : d.failed_handoffs);
        ++d.by_failure_count[r.failures];
    }
    return d;
}

inline ComparisonReport compare(const MetricsTable& baseline, const MetricsTable& monitored) {
    ComparisonReport c;
    c.baseline = baseline;
    c.monitored = monitored;
    c.success_rate_delta_pp = (monitored.success_rate - baseline.success_rate) * 100.0;
    c.failure_reduction = baseline.total_failures - monitored.total_failures;
    if (baseline.avg_duration != 0.0) c.duration_ratio = monitored.avg_duration / baseline.avg_duration;
    return c;
}

// successes/runs as a percentage, rounded half-up to 2 decimals in exact
// integer arithmetic.
inline std::string render_percent(std::int64_t successes, std::int64_t runs) {
    if (runs <= 0) return "undefined";
    const std::int64_t hundredths = (successes * 20000 + runs) / (2 * runs);
    std::string frac = std::to_string(hundredths % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return std::to_string(hundredths / 100) + "." + frac + "%";
}

inline std::string render_scientific(double v, int digits = 3) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, digits);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

inline std::string render_signed(double v, int decimals) {
    auto s = format_fixed(v, decimals);
    return (v >= 0 && s.front() != '-') ? "+" + s : s;
}

namespace detail {

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

inline std::string table_row(const std::string& label, const std::vector<std::string>& cells) {
    std::string out = pad(label, 44);
    for (std::size_t i = 0; i < cells.size(); ++i) out += i + 1 < cells.size() ? pad(cells[i], 18) : cells[i];
    return out + "\n";
}

} // namespace detail

inline std::string render_metrics_table(const MetricsTable& b, const MetricsTable& m) {
    using detail::table_row;
    std::string out = "Comparative Performance Metrics\n";
    out += table_row("Metric", {"Baseline Agent", "Monitored Agent"});
    out += table_row("Total Runs", {std::to_string(b.total_runs), std::to_string(m.total_runs)});
    out += table_row("Total Successes", {std::to_string(b.total_successes), std::to_string(m.total_successes)});
    out += table_row("Total Failures", {std::to_string(b.total_failures), std::to_string(m.total_failures)});
    out += table_row("Overall Success Rate", {render_percent(b.total_successes, b.total_runs),
                                              render_percent(m.total_successes, m.total_runs)});
    out += table_row("Total Duration", {format_fixed(b.total_duration, 4) + "s", format_fixed(m.total_duration, 4) + "s"});
    out += table_row("Average Duration per Run",
                     {render_scientific(b.avg_duration) + "s", render_scientific(m.avg_duration) + "s"});
    out += table_row("Total Handoffs", {std::to_string(b.total_handoffs), std::to_string(m.total_handoffs)});
    return out;
}

inline std::string render_handoff_table(const HandoffDistribution& d) {
    using detail::table_row;
    std::string out = "Handoff and Failure Distribution (Monitored Agent)\n";
    out += table_row("Metric", {"Count"});
    out += table_row("Total Handoffs", {std::to_string(d.total_handoffs)});
    out += table_row("Successful Handoffs (Handoff=1 & Success=1)", {std::to_string(d.successful_handoffs)});
    out += table_row("Failed Handoffs (Handoff=1 & Success=0)", {std::to_string(d.failed_handoffs)});
    for (auto [failures, count] : d.by_failure_count)
        out += table_row("Handoffs at Failures=" + std::to_string(failures), {std::to_string(count)});
    return out;
}

inline std::string render_comparison(const ComparisonReport& c) {
    std::string out = "Comparison (monitored vs baseline)\n";
    out += detail::table_row("Success rate delta", {render_signed(c.success_rate_delta_pp, 2) + " pp"});
    out += detail::table_row("Failure reduction", {std::to_string(c.failure_reduction)});
    out += detail::table_row("Average duration ratio",
                             {c.duration_ratio ? format_fixed(*c.duration_ratio, 2) + "x" : "undefined"});
    out += detail::table_row("Handoffs (baseline / monitored)", {std::to_string(c.baseline.total_handoffs) + " / " +
                                                                 std::to_string(c.monitored.total_handoffs)});
    return out;
}

inline std::string render_report(const ComparisonReport& c, const HandoffDistribution& d) {
    return render_metrics_table(c.baseline, c.monitored) + "\n" + render_handoff_table(d) + "\n" +
           render_comparison(c);
}

inline json to_json(const MetricsTable& t) {
    return json{{"condition", to_string(t.condition)},
                {"total_runs", t.total_runs},
                {"total_successes", t.total_successes},
                {"total_failures", t.total_failures},
                {"success_rate", t.success_rate},
                {"success_rate_rendered", render_percent(t.total_successes, t.total_runs)},
                {"total_duration", t.total_duration},
                {"avg_duration", t.avg_duration},
                {"total_handoffs", t.total_handoffs}};
}

inline json to_json(const HandoffDistribution& d) {
    json by = json::object();
    for (auto [failures, count] : d.by_failure_count) by[std::to_string(failures)] = count;
    return json{{"total_handoffs", d.total_handoffs},
                {"successful_handoffs", d.successful_handoffs},
                {"failed_handoffs", d.failed_handoffs},
                {"by_failure_count", std::move(by)}};
}

inline json to_json(const ComparisonReport& c) {
    json j{{"success_rate_delta_pp", c.success_rate_delta_pp}, {"failure_reduction", c.failure_reduction}};
    j["duration_ratio"] = c.duration_ratio ? json(*c.duration_ratio) : json(nullptr);
    j["baseline_handoffs"] = c.baseline.total_handoffs;
    j["monitored_handoffs"] = c.monitored.total_handoffs;
    return j;
}

inline json report_json(const ComparisonReport& c, const HandoffDistribution& d) {
    return json{{"baseline", to_json(c.baseline)},
                {"monitored", to_json(c.monitored)},
                {"handoff_distribution", to_json(d)},
                {"comparison", to_json(c)}};
}

} // namespace metacog
