#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "metacog/core_types.hpp"

namespace metacog {

inline constexpr std::array<std::string_view, 10> csv_columns{
    "run_id", "task_id", "condition", "seed", "success", "failures", "retries", "handoff", "trigger", "duration_s"};

inline std::string csv_header() {
    std::string h;
    for (std::size_t i = 0; i < csv_columns.size(); ++i) {
        if (i) h += ',';
        h += csv_columns[i];
    }
    return h;
}

namespace detail {

inline void check_csv_field(const RunRecord& r, std::string_view field) {
    if (field.find_first_of(",\"\r\n") != std::string_view::npos)
        throw validation_error("run " + r.run_id + ": field contains a CSV delimiter: '" + std::string(field) + "'");
}

} // namespace detail

inline std::string render_csv(std::vector<RunRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.run_id < b.run_id; });
    std::string out = csv_header() + "\n";
    for (const auto& r : records) {
        r.validate();
        detail::check_csv_field(r, r.run_id);
        detail::check_csv_field(r, r.task_id);
        out += r.run_id + ',' + r.task_id + ',' + std::string(to_string(r.condition)) + ',' + std::to_string(r.seed) +
               ',' + std::to_string(r.success) + ',' + std::to_string(r.failures) + ',' + std::to_string(r.retries) +
               ',' + std::to_string(r.handoff) + ',' + r.trigger + ',' + format_fixed(r.duration_s, 9) + '\n';
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw io_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
    write_text_file(path, render_csv(records));
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

// Integers, also written as integral decimals ("4.0").
inline std::optional<std::int64_t> parse_count(std::string_view text) {
    if (auto i = parse_int<std::int64_t>(text)) return i;
    if (auto d = parse_double(text); d && *d == static_cast<double>(static_cast<std::int64_t>(*d)))
        return static_cast<std::int64_t>(*d);
    return std::nullopt;
}

} // namespace detail

// Accepts 0.0/1.0 as flag values; validates every RunRecord invariant.
inline std::vector<RunRecord> parse_csv(std::string_view text, const std::string& source = "<csv>") {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos < text.size();) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (lines.empty() || lines.front().empty()) throw schema_error(source + ": missing header row");

    const auto header = detail::split_csv_line(lines.front());
    std::array<int, csv_columns.size()> index;
    index.fill(-1);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!seen.insert(header[i]).second) throw schema_error(source + ": duplicate column '" + header[i] + "'");
        auto it = std::find(csv_columns.begin(), csv_columns.end(), header[i]);
        if (it == csv_columns.end()) throw schema_error(source + ": unexpected column '" + header[i] + "'");
        index[static_cast<std::size_t>(it - csv_columns.begin())] = static_cast<int>(i);
    }
    for (std::size_t c = 0; c < csv_columns.size(); ++c)
        if (index[c] < 0) throw schema_error(source + ": missing column '" + std::string(csv_columns[c]) + "'");

    std::vector<RunRecord> records;
    std::set<std::string> run_ids;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto fields = detail::split_csv_line(lines[ln]);
        const std::string where = source + ":" + std::to_string(ln + 1);
        if (fields.size() != header.size())
            throw validation_error(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
        auto field = [&](std::size_t c) -> const std::string& { return fields[static_cast<std::size_t>(index[c])]; };
        auto count = [&](std::size_t c) {
            auto v = detail::parse_count(field(c));
            if (!v) throw validation_error(where + ": column " + std::string(csv_columns[c]) + " is not an integer: '" +
                                           field(c) + "'");
            return *v;
        };

        RunRecord r;
        r.run_id = field(0);
        r.task_id = field(1);
        auto cond = condition_from_string(field(2));
        if (!cond) throw validation_error(where + ": unknown condition '" + field(2) + "'");
        r.condition = *cond;
        r.seed = count(3);
        auto small = [&](std::size_t c) {
            auto v = count(c);
            if (v < -1000000000 || v > 1000000000)
                throw validation_error(where + ": column " + std::string(csv_columns[c]) + " out of range");
            return static_cast<int>(v);
        };
        r.success = small(4);
        r.failures = small(5);
        r.retries = small(6);
        r.handoff = small(7);
        r.trigger = field(8);
        auto dur = parse_double(field(9));
        if (!dur) throw validation_error(where + ": duration_s is not a number: '" + field(9) + "'");
        r.duration_s = *dur;
        r.validate();
        if (!run_ids.insert(r.run_id).second) throw validation_error("run " + r.run_id + ": duplicate run_id");
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<RunRecord> ingest_csv(const std::filesystem::path& path) {
    return parse_csv(read_text_file(path), path.string());
}

} // namespace metacog
