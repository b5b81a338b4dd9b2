#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "metacog/agent_sim.hpp"
#include "metacog/csv.hpp"
#include "metacog/handoff.hpp"
#include "metacog/triggers.hpp"

namespace metacog {

struct ExperimentConfig {
    WorkloadConfig workload;
    std::optional<int> n_tasks_monitored;
    std::int64_t seed = 7;
    bool independent_workloads = false;

    SimConfig sim;
    int workers = 1;

    TriggerConfig triggers;
    HandoffResolver resolver;

    std::string name = "default";
    std::string dir = "out";
    bool write_traces = false;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    int monitored_task_count() const { return n_tasks_monitored.value_or(workload.n_tasks); }

    void validate() const {
        workload.validate();
        if (n_tasks_monitored && *n_tasks_monitored < 1) throw config_error("[workload] n_tasks_monitored must be >= 1");
        sim.validate();
        if (workers < 1) throw config_error("[sim] workers must be >= 1");
        triggers.validate();
        resolver.validate();
        if (name.empty() || name.find_first_of("/\\") != std::string::npos)
            throw config_error("[output] name must be a non-empty single path component");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct IniValue {
    std::string text;
    int line = 0;
    int column = 0;
};

class ConfigReader {
public:
    ConfigReader(std::map<std::string, IniValue> values, std::string source)
        : values_(std::move(values)), source_(std::move(source)) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    template <class T>
    void read(const std::string& key, T& target) {
        auto it = values_.find(key);
        if (it == values_.end()) return;
        used_.insert(key);
        const auto& v = it->second;
        auto bad = [&](const char* expected) {
            return config_error(where(v) + ": " + key + " expects " + expected + ", got '" + v.text + "'");
        };
        if constexpr (std::is_same_v<T, bool>) {
            if (v.text == "true") target = true;
            else if (v.text == "false") target = false;
            else throw bad("true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            target = unquote(v.text);
        } else if constexpr (std::is_integral_v<T>) {
            auto i = parse_int<T>(v.text);
            if (!i) throw bad("an integer");
            target = *i;
        } else if constexpr (std::is_same_v<T, std::optional<int>>) {
            auto i = parse_int<int>(v.text);
            if (!i) throw bad("an integer");
            target = *i;
        } else {
            auto d = parse_double(v.text);
            if (!d) throw bad("a number");
            target = *d;
        }
    }

    const IniValue& at(const std::string& key) {
        used_.insert(key);
        return values_.at(key);
    }

    std::string where(const IniValue& v) const {
        return source_ + ":" + std::to_string(v.line) + ":" + std::to_string(v.column);
    }

    void reject_unknown() const {
        for (const auto& [key, v] : values_)
            if (!used_.count(key)) throw config_error(where(v) + ": unknown key '" + key + "'");
    }

private:
    static std::string unquote(const std::string& s) {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
        return s;
    }

    std::map<std::string, IniValue> values_;
    std::set<std::string> used_;
    std::string source_;
};

inline const std::set<std::string>& known_sections() {
    static const std::set<std::string> s{"workload", "sim", "triggers", "resolver", "output"};
    return s;
}

inline std::string_view mix_key(ScriptKind k) {
    switch (k) {
    case ScriptKind::Clean: return "clean";
    case ScriptKind::Flaky: return "flaky";
    case ScriptKind::Loop: return "loop";
    case ScriptKind::Hang: return "hang";
    case ScriptKind::Fatal: return "fatal";
    }
    return "?";
}

inline std::string_view enabled_key(TriggerKind k) {
    switch (k) {
    case TriggerKind::Repetition: return "repetition";
    case TriggerKind::Complexity: return "complexity";
    case TriggerKind::Latency: return "latency";
    }
    return "?";
}

} // namespace detail

// Flat INI-style text: [section] headers, `key = value` lines, `#` or `;`
// comment lines. Keys not listed in serialize_config are rejected.
inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>") {
    std::map<std::string, detail::IniValue> values;
    std::string section;
    int line_no = 0;
    for (std::size_t pos = 0; pos <= text.size();) {
        auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        auto line = detail::trim(raw);
        const int indent = static_cast<int>(raw.find_first_not_of(" \t") == std::string_view::npos
                                                ? 0
                                                : raw.find_first_not_of(" \t"));
        auto at = [&](int col) { return source + ":" + std::to_string(line_no) + ":" + std::to_string(col); };
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(at(indent + static_cast<int>(line.size()) + 1) + ": expected ']' to close section");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!detail::known_sections().count(section))
                throw config_error(at(indent + 2) + ": unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw config_error(at(indent + static_cast<int>(line.size()) + 1) + ": expected 'key = value'");
        if (section.empty()) throw config_error(at(indent + 1) + ": key outside of any [section]");
        auto key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw config_error(at(indent + 1) + ": empty key");
        auto value_part = line.substr(eq + 1);
        auto value = detail::trim(value_part);
        const auto leading = std::min(value_part.find_first_not_of(" \t"), value_part.size());
        const int value_col = indent + static_cast<int>(eq + leading) + 2;
        const std::string full = section + "." + std::string(key);
        if (values.count(full)) throw config_error(at(indent + 1) + ": duplicate key '" + full + "'");
        values[full] = detail::IniValue{std::string(value), line_no, value_col};
    }

    ExperimentConfig c;
    detail::ConfigReader r(std::move(values), source);

    r.read("workload.n_tasks", c.workload.n_tasks);
    r.read("workload.n_tasks_monitored", c.n_tasks_monitored);
    r.read("workload.seed", c.seed);
    r.read("workload.independent_workloads", c.independent_workloads);
    bool any_mix = false;
    for (auto k : all_script_kinds) any_mix |= r.has("workload.mix." + std::string(detail::mix_key(k)));
    if (any_mix) {
        // A partial mix leaves the unlisted kinds at zero.
        c.workload.mix.clear();
        for (auto k : all_script_kinds) {
            double p = 0.0;
            r.read("workload.mix." + std::string(detail::mix_key(k)), p);
            c.workload.mix[k] = p;
        }
    }
    r.read("workload.fail_count_min", c.workload.fail_count_min);
    r.read("workload.fail_count_max", c.workload.fail_count_max);
    r.read("workload.hang_duration", c.workload.hang_duration);
    for (auto [prefix, rates] : {std::pair{"workload.routine.", &c.workload.routine_rates},
                                 std::pair{"workload.fatal.", &c.workload.fatal_rates}}) {
        r.read(std::string(prefix) + "high_stakes", rates->high_stakes);
        r.read(std::string(prefix) + "ambiguous", rates->ambiguous);
        r.read(std::string(prefix) + "multi_system", rates->multi_system);
    }

    r.read("sim.step_cost", c.sim.step_cost);
    r.read("sim.retry_limit", c.sim.retry_limit);
    r.read("sim.monitor_overhead_per_event", c.sim.monitor_overhead_per_event);
    r.read("sim.handoff_processing", c.sim.handoff_processing);
    r.read("sim.max_steps", c.sim.max_steps);
    r.read("sim.workers", c.workers);

    r.read("triggers.repetition_threshold", c.triggers.repetition_threshold);
    r.read("triggers.latency_threshold", c.triggers.latency_threshold);
    r.read("triggers.complexity_max_systems", c.triggers.complexity_max_systems);
    r.read("triggers.complexity_flags_trip", c.triggers.complexity_flags_trip);
    if (r.has("triggers.enabled")) {
        const auto& v = r.at("triggers.enabled");
        c.triggers.enabled = TriggerSet::none();
        std::string_view rest = v.text;
        while (!rest.empty()) {
            auto comma = rest.find(',');
            auto item = detail::trim(rest.substr(0, comma));
            if (!item.empty()) {
                auto k = trigger_kind_from_string(item);
                if (!k) throw config_error(r.where(v) + ": triggers.enabled: unknown trigger '" + std::string(item) + "'");
                c.triggers.enabled.insert(*k);
            }
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
    }

    if (r.has("resolver.mode")) {
        const auto& v = r.at("resolver.mode");
        if (v.text == "simulated") c.resolver.kind = ResolverKind::Simulated;
        else if (v.text == "live") c.resolver.kind = ResolverKind::Live;
        else throw config_error(r.where(v) + ": resolver.mode expects simulated or live, got '" + v.text + "'");
    }
    r.read("resolver.p_resolve", c.resolver.p_resolve);
    r.read("resolver.seed", c.resolver.rng_seed);

    r.read("output.name", c.name);
    r.read("output.dir", c.dir);
    r.read("output.write_traces", c.write_traces);

    r.reject_unknown();
    try {
        c.validate();
    } catch (const config_error& e) {
        throw config_error(source + ": " + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path), path.string());
}

inline std::string serialize_config(const ExperimentConfig& c) {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    auto d = [](double v) { return format_exact(v); };
    std::string out = "[workload]\n";
    out += "n_tasks = " + std::to_string(c.workload.n_tasks) + "\n";
    if (c.n_tasks_monitored) out += "n_tasks_monitored = " + std::to_string(*c.n_tasks_monitored) + "\n";
    out += "seed = " + std::to_string(c.seed) + "\n";
    out += "independent_workloads = " + b(c.independent_workloads) + "\n";
    for (auto k : all_script_kinds) {
        auto it = c.workload.mix.find(k);
        out += "mix." + std::string(detail::mix_key(k)) + " = " + d(it == c.workload.mix.end() ? 0.0 : it->second) + "\n";
    }
    out += "fail_count_min = " + std::to_string(c.workload.fail_count_min) + "\n";
    out += "fail_count_max = " + std::to_string(c.workload.fail_count_max) + "\n";
    out += "hang_duration = " + d(c.workload.hang_duration) + "\n";
    for (auto [prefix, rates] : {std::pair{"routine.", &c.workload.routine_rates},
                                 std::pair{"fatal.", &c.workload.fatal_rates}}) {
        out += std::string(prefix) + "high_stakes = " + d(rates->high_stakes) + "\n";
        out += std::string(prefix) + "ambiguous = " + d(rates->ambiguous) + "\n";
        out += std::string(prefix) + "multi_system = " + d(rates->multi_system) + "\n";
    }

    out += "\n[sim]\n";
    out += "step_cost = " + d(c.sim.step_cost) + "\n";
    out += "retry_limit = " + std::to_string(c.sim.retry_limit) + "\n";
    out += "monitor_overhead_per_event = " + d(c.sim.monitor_overhead_per_event) + "\n";
    out += "handoff_processing = " + d(c.sim.handoff_processing) + "\n";
    out += "max_steps = " + std::to_string(c.sim.max_steps) + "\n";
    out += "workers = " + std::to_string(c.workers) + "\n";

    out += "\n[triggers]\n";
    out += "repetition_threshold = " + std::to_string(c.triggers.repetition_threshold) + "\n";
    out += "latency_threshold = " + d(c.triggers.latency_threshold) + "\n";
    out += "complexity_max_systems = " + std::to_string(c.triggers.complexity_max_systems) + "\n";
    out += "complexity_flags_trip = " + b(c.triggers.complexity_flags_trip) + "\n";
    std::string enabled;
    for (auto k : {TriggerKind::Complexity, TriggerKind::Repetition, TriggerKind::Latency})
        if (c.triggers.enabled.contains(k)) enabled += (enabled.empty() ? "" : ",") + std::string(detail::enabled_key(k));
    out += "enabled = " + enabled + "\n";

    out += "\n[resolver]\n";
    out += std::string("mode = ") + (c.resolver.kind == ResolverKind::Live ? "live" : "simulated") + "\n";
    out += "p_resolve = " + d(c.resolver.p_resolve) + "\n";
    out += "seed = " + std::to_string(c.resolver.rng_seed) + "\n";

    out += "\n[output]\n";
    out += "name = " + c.name + "\n";
    out += "dir = " + c.dir + "\n";
    out += "write_traces = " + b(c.write_traces) + "\n";
    return out;
}

} // namespace metacog
