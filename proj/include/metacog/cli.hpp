#pragma once

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "metacog/config.hpp"
#include "metacog/csv.hpp"
#include "metacog/harness.hpp"
#include "metacog/metrics.hpp"
#include "metacog/service.hpp"

namespace metacog {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_io = 2 };

namespace detail {

inline void write_analysis(const std::filesystem::path& dir, const ComparisonReport& c, const HandoffDistribution& d) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory " + dir.string() + ": " + ec.message());
    write_text_file(dir / "report.txt", render_report(c, d));
    write_text_file(dir / "report.json", report_json(c, d).dump(2) + "\n");
}

inline std::pair<std::string, int> split_bind(const std::string& bind) {
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw config_error("--bind expects host:port, got '" + bind + "'");
    auto port = parse_int<int>(bind.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535) throw config_error("--bind: invalid port in '" + bind + "'");
    return {bind.substr(0, colon), *port};
}

inline HandoffService* active_service = nullptr;

} // namespace detail

// Data goes to `out`, diagnostics to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Metacognitive supervision runtime and two-condition experiment harness", "metacog"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet,-q", quiet, "Suppress progress output");

    auto* simulate = app.add_subcommand("simulate", "Run the baseline vs. monitored experiment from a config file");
    std::string sim_config, sim_out;
    std::optional<std::int64_t> seed;
    simulate->add_option("--config", sim_config, "Experiment config file")->required();
    simulate->add_option("--out", sim_out, "Output root (overrides [output] dir)");
    simulate->add_option("--seed", seed, "Override the master seed");
    simulate->add_flag("--quiet,-q", quiet, "Suppress progress output");

    auto* analyze = app.add_subcommand("analyze", "Compute metrics from baseline and monitored CSVs");
    std::string base_csv, mon_csv, analyze_out;
    analyze->add_option("--baseline", base_csv, "runs_without_monitor.csv")->required();
    analyze->add_option("--monitored", mon_csv, "runs_with_monitor.csv")->required();
    analyze->add_option("--out", analyze_out, "Directory for report.txt and report.json");
    analyze->add_flag("--quiet,-q", quiet, "Suppress progress output");

    auto* report = app.add_subcommand("report", "Render metric tables from an experiment directory");
    std::string report_in;
    report->add_option("--in", report_in, "Experiment directory holding the two CSVs")->required();

    auto* serve = app.add_subcommand("serve", "Serve the live handoff queue over HTTP");
    std::string serve_config, bind = "127.0.0.1:8080";
    serve->add_option("--config", serve_config, "Experiment config file")->required();
    serve->add_option("--bind", bind, "host:port (METACOG_PORT overrides the port)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return exit_validation;
    }

    auto progress = [&](const std::string& msg) {
        if (!quiet) err << msg << "\n";
    };

    try {
        if (*simulate) {
            auto config = load_config(sim_config);
            if (seed) config.seed = *seed;
            std::optional<std::filesystem::path> root;
            if (!sim_out.empty()) root = sim_out;
            auto result = run_experiment(config, root, progress);
            out << render_report(result.comparison, result.distribution);
        } else if (*analyze) {
            const auto baseline = ingest_csv(base_csv);
            const auto monitored = ingest_csv(mon_csv);
            for (const auto& r : baseline)
                if (r.condition != Condition::Baseline)
                    throw validation_error("run " + r.run_id + ": baseline file contains a MONITORED row");
            for (const auto& r : monitored)
                if (r.condition != Condition::Monitored)
                    throw validation_error("run " + r.run_id + ": monitored file contains a BASELINE row");
            const auto c = compare(compute_metrics(baseline), compute_metrics(monitored));
            const auto d = handoff_distribution(monitored);
            if (!analyze_out.empty()) {
                detail::write_analysis(analyze_out, c, d);
                progress("wrote " + analyze_out);
            }
            out << render_report(c, d);
        } else if (*report) {
            const std::filesystem::path dir = report_in;
            const auto baseline = ingest_csv(dir / "runs_without_monitor.csv");
            const auto monitored = ingest_csv(dir / "runs_with_monitor.csv");
            out << render_report(compare(compute_metrics(baseline), compute_metrics(monitored)),
                                 handoff_distribution(monitored));
        } else if (*serve) {
            auto config = load_config(serve_config);
            auto [host, port] = detail::split_bind(bind);
            if (const char* env = std::getenv("METACOG_PORT")) {
                auto p = parse_int<int>(env);
                if (!p || *p < 0 || *p > 65535) throw config_error("METACOG_PORT is not a valid port");
                port = *p;
            }
            HandoffService service(config);
            const int bound = service.bind(host, port);
            if (bound < 0) throw io_error("cannot bind " + host + ":" + std::to_string(port));
            progress("serving on " + host + ":" + std::to_string(bound));
            detail::active_service = &service;
            std::signal(SIGINT, [](int) {
                if (detail::active_service) detail::active_service->stop();
            });
            std::signal(SIGTERM, [](int) {
                if (detail::active_service) detail::active_service->stop();
            });
            service.listen();
            detail::active_service = nullptr;
        }
    } catch (const io_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    }
    return exit_ok;
}

} // namespace metacog
