// Batch-experiment driver.
//
//   adaer_cli run    --config run.json
//   adaer_cli sweep  --config run.json --axis tau --values 0.1,0.5,0.9
//   adaer_cli joint  --config run.json
//   adaer_cli report --input results/
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.

#include <adaer/adaer.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2, kNumericError = 3 };

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw adaer::ConfigError("cannot parse sweep value '" + item + "'");
        }
    }
    if (out.empty()) throw adaer::ConfigError("--values must list at least one value");
    return out;
}

void print_summary(const adaer::RunRecord& r, const std::string& label) {
    const auto acc = adaer::aggregate(r, &adaer::MetricSummary::acc);
    std::printf("%-28s Acc %.2f +- %.2f", label.c_str(), 100.0 * acc.mean, 100.0 * acc.std);
    if (!r.joint) {
        const auto fg = adaer::aggregate(r, &adaer::MetricSummary::forget);
        const auto bw = adaer::aggregate(r, &adaer::MetricSummary::bwt);
        const auto fw = adaer::aggregate(r, &adaer::MetricSummary::fwt);
        std::printf("  Forget %.2f  Bwt %.2f  Fwt %.2f", 100.0 * fg.mean, 100.0 * bw.mean, 100.0 * fw.mean);
    }
    std::printf("\n");
    for (const auto& s : r.seeds) {
        if (!s.ok) std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed),
                                s.diagnostic.c_str());
    }
}

std::string value_tag(double v) {
    auto s = adaer::format_real(v);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual-learning experiments with adaptive experience replay"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run one continual-learning experiment");
    run->add_option("--config", config_path, "JSON run configuration")->required();

    std::string sweep_config, axis_name, values_csv;
    auto* sw = app.add_subcommand("sweep", "Run one experiment per value of a config axis");
    sw->add_option("--config", sweep_config, "JSON run configuration")->required();
    sw->add_option("--axis", axis_name, "memory_M | tau | lambda")->required();
    sw->add_option("--values", values_csv, "comma-separated axis values")->required();

    std::string joint_config;
    auto* joint = app.add_subcommand("joint", "Train all tasks jointly (upper-bound reference)");
    joint->add_option("--config", joint_config, "JSON run configuration")->required();

    std::string input_dir;
    auto* report = app.add_subcommand("report", "Summarize result JSON files in a directory");
    report->add_option("--input", input_dir, "directory holding run outputs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) {
            const auto config = adaer::load_config(config_path);
            const auto record = adaer::run_experiment(config);
            const std::string name(adaer::to_string(config.strategy));
            adaer::write_run(record, config.output, name);
            print_summary(record, name);
            return record.all_ok() ? kOk : kNumericError;
        }
        if (*sw) {
            const auto config = adaer::load_config(sweep_config);
            const auto axis = adaer::parse_axis(axis_name);
            if (!axis) throw adaer::ConfigError("unknown sweep axis '" + axis_name + "'");
            const auto values = parse_values(values_csv);
            const auto records = adaer::sweep(config, *axis, values);
            bool ok = true;
            for (std::size_t k = 0; k < records.size(); ++k) {
                const auto name = std::string(adaer::to_string(config.strategy)) + "_" + axis_name + "_" +
                                  value_tag(values[k]);
                adaer::write_run(records[k], config.output, name);
                print_summary(records[k], name);
                ok = ok && records[k].all_ok();
            }
            return ok ? kOk : kNumericError;
        }
        if (*joint) {
            const auto config = adaer::load_config(joint_config);
            const auto record = adaer::run_joint(config);
            adaer::write_run(record, config.output, "joint");
            print_summary(record, "joint");
            return record.all_ok() ? kOk : kNumericError;
        }
        if (*report) {
            adaer::print_report(std::cout, adaer::collect_summaries(input_dir));
            return kOk;
        }
    } catch (const adaer::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const adaer::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const adaer::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumericError;
    }
    return kOk;
}
