#pragma once

// Result files. Per run: `<name>.csv` with one accuracy per
// (seed, task_learned, task_evaluated), and `<name>.json` with the resolved
// config, per-seed metrics and aggregates. Row 0 of the CSV holds the
// accuracy at initialization. Numbers are written in shortest round-trip
// form, so identical runs give identical CSV bytes.

#include <adaer/config.hpp>
#include <adaer/harness.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace adaer {

inline std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const RunRecord& record) {
    os << "seed,task_learned,task_evaluated,accuracy\n";
    for (const auto& s : record.seeds) {
        if (record.joint) {
            if (!s.ok) continue;
            const auto T = s.final_accuracies.size();
            for (std::size_t j = 1; j <= T; ++j) {
                os << s.seed << ',' << T << ',' << j << ',' << format_real(s.final_accuracies[j - 1]) << '\n';
            }
            continue;
        }
        if (!s.matrix) continue;
        const auto& m = *s.matrix;
        const auto T = m.num_tasks();
        if (m.baseline()) {
            for (std::size_t j = 1; j <= T; ++j) {
                os << s.seed << ",0," << j << ',' << format_real((*m.baseline())[j - 1]) << '\n';
            }
        }
        for (std::size_t i = 1; i <= T; ++i) {
            if (!m.has_row(i)) continue;
            for (std::size_t j = 1; j <= T; ++j) os << s.seed << ',' << i << ',' << j << ',' << format_real(m.at(i, j)) << '\n';
        }
    }
}

inline nlohmann::ordered_json summary_json(const RunRecord& record) {
    nlohmann::ordered_json j;
    j["mode"] = record.joint ? "joint" : "continual";
    j["config"] = config_to_json(record.config);
    auto seeds = nlohmann::ordered_json::array();
    for (const auto& s : record.seeds) {
        nlohmann::ordered_json e;
        e["seed"] = s.seed;
        e["status"] = s.ok ? "ok" : "numeric_failure";
        if (!s.ok) e["diagnostic"] = s.diagnostic;
        if (s.ok) {
            e["acc"] = s.metrics.acc;
            if (!record.joint) {
                e["forget"] = s.metrics.forget;
                e["bwt"] = s.metrics.bwt;
                e["fwt"] = s.metrics.fwt;
            }
        }
        e["wall_seconds"] = s.wall_seconds;
        seeds.push_back(std::move(e));
    }
    j["seeds"] = std::move(seeds);

    nlohmann::ordered_json agg;
    auto put = [&](const char* name, double MetricSummary::*field) {
        const auto a = aggregate(record, field);
        agg[name] = {{"mean", a.mean}, {"std", a.std}};
    };
    put("acc", &MetricSummary::acc);
    if (!record.joint) {
        put("forget", &MetricSummary::forget);
        put("bwt", &MetricSummary::bwt);
        put("fwt", &MetricSummary::fwt);
    }
    agg["completed_seeds"] = metric_values(record, &MetricSummary::acc).size();
    j["aggregate"] = std::move(agg);
    return j;
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
inline void write_run(const RunRecord& record, const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / (name + ".csv"), std::ios::binary | std::ios::trunc);
        if (!csv) throw DataError((dir / (name + ".csv")).string() + ": cannot open for writing");
        write_csv(csv, record);
    }
    std::ofstream js(dir / (name + ".json"), std::ios::binary | std::ios::trunc);
    if (!js) throw DataError((dir / (name + ".json")).string() + ": cannot open for writing");
    js << summary_json(record).dump(2) << '\n';
}

struct ReportRow {
    std::string file;
    std::string mode;
    std::string strategy;
    nlohmann::json aggregate;
};

/// Collects every run summary under `dir` (recursively), sorted by path.
inline std::vector<ReportRow> collect_summaries(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<ReportRow> rows;
    for (const auto& f : files) {
        std::ifstream in(f);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error&) {
            continue;
        }
        if (!j.is_object() || !j.contains("aggregate") || !j.contains("config")) continue;
        rows.push_back(ReportRow{std::filesystem::relative(f, dir).string(), j.value("mode", ""),
                                 j["config"].value("strategy", ""), j["aggregate"]});
    }
    return rows;
}

inline void print_report(std::ostream& os, const std::vector<ReportRow>& rows) {
    auto pct = [](const nlohmann::json& agg, const char* key) -> std::string {
        if (!agg.contains(key)) return "-";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f +- %.1f", 100.0 * agg[key]["mean"].get<double>(),
                      100.0 * agg[key]["std"].get<double>());
        return buf;
    };
    char line[512];
    std::snprintf(line, sizeof line, "%-40s %-9s %-7s %-14s %-14s %-14s %-14s\n", "run", "mode", "strategy", "Acc(%)",
                  "Forget(%)", "Bwt(%)", "Fwt(%)");
    os << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-40s %-9s %-7s %-14s %-14s %-14s %-14s\n", r.file.c_str(), r.mode.c_str(),
                      r.strategy.c_str(), pct(r.aggregate, "acc").c_str(), pct(r.aggregate, "forget").c_str(),
                      pct(r.aggregate, "bwt").c_str(), pct(r.aggregate, "fwt").c_str());
        os << line;
    }
}

} // namespace adaer
