#pragma once

// Experiment orchestration: builds the benchmark, network, memory and
// strategy for each seed, runs the task sequence, fills the result matrix and
// aggregates metrics over seeds.

#include <adaer/config.hpp>
#include <adaer/errors.hpp>
#include <adaer/memory.hpp>
#include <adaer/metrics.hpp>
#include <adaer/nn.hpp>
#include <adaer/replay.hpp>
#include <adaer/rng.hpp>
#include <adaer/stream.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace adaer {

/// Geometry used for the split-synthetic benchmark. Calibrated against the
/// split-MNIST reference scale: joint training in the mid-90s, plain
/// fine-tuning near the last task's share of classes.
inline constexpr SyntheticShape kSyntheticBenchmarkShape{1.0, 0.3, 0.8, 3};

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = true;
    std::string diagnostic;
    std::optional<ResultMatrix> matrix;     // continual runs
    std::vector<double> final_accuracies;   // per task, after the last task (or after joint training)
    MetricSummary metrics;
    double wall_seconds = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation; 0 for a single seed
};

struct RunRecord {
    RunConfig config;
    bool joint = false;
    std::vector<SeedResult> seeds;

    bool all_ok() const {
        return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok; });
    }
};

inline Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return a;
}

/// Metric values over the successful seeds of a record.
inline std::vector<double> metric_values(const RunRecord& r, double MetricSummary::*field) {
    std::vector<double> out;
    for (const auto& s : r.seeds)
        if (s.ok) out.push_back(s.metrics.*field);
    return out;
}

inline Aggregate aggregate(const RunRecord& r, double MetricSummary::*field) {
    return aggregate(metric_values(r, field));
}

// ---------------------------------------------------------------------------
// Benchmark construction
// ---------------------------------------------------------------------------

/// Raw (unsplit) train and test data for a benchmark.
struct BenchmarkData {
    ExampleSet train;
    ExampleSet test;
};

/// Caches IDX files across seeds; synthetic data is regenerated per seed.
class DataSource {
public:
    explicit DataSource(const RunConfig& config) : config_(config) {}

    TaskStream stream_for_seed(std::uint64_t seed) {
        try {
            const auto shuffle_seed = derive_seed(seed, seed_stream::shuffle);
            if (config_.benchmark == Benchmark::split_synthetic) {
                const auto per_class = config_.train_per_task; // enough for any lambda / remainder split
                const auto train = make_synthetic(config_.num_classes(), config_.synthetic_dim, per_class,
                                                  derive_seed(seed, seed_stream::data), kSyntheticBenchmarkShape);
                const auto test = make_synthetic(config_.num_classes(), config_.synthetic_dim, config_.test_per_class,
                                                 derive_seed(seed, seed_stream::test_data), kSyntheticBenchmarkShape);
                return split_stream(train, config_.num_tasks, config_.classes_per_task, config_.train_per_task,
                                    config_.lambda, config_.batch_size, shuffle_seed)
                    .with_test_data(test);
            }
            if (!idx_) {
                idx_ = std::make_unique<BenchmarkData>();
                idx_->train = load_idx(config_.train_images, config_.train_labels);
                idx_->test = load_idx(config_.test_images, config_.test_labels);
            }
            return split_stream(idx_->train, config_.num_tasks, config_.classes_per_task, config_.train_per_task,
                                config_.lambda, config_.batch_size, shuffle_seed)
                .with_test_data(idx_->test);
        } catch (const FormatError& e) {
            throw DataError(e.what());
        } catch (const InvalidArgument& e) {
            throw DataError(std::string("cannot build task stream: ") + e.what());
        }
    }

private:
    RunConfig config_;
    std::unique_ptr<BenchmarkData> idx_;
};

inline std::size_t input_dim_of(const TaskStream& stream) {
    return stream.train(1).front().features.size();
}

inline std::vector<double> evaluate_all(const ParamSet& params, const TaskStream& stream) {
    std::vector<double> acc;
    for (std::size_t t = 1; t <= stream.num_tasks(); ++t) acc.push_back(accuracy(params, stream.test(static_cast<TaskId>(t))));
    return acc;
}

/// Memory policy must follow the strategy pairing (ccmr/er/mir: reservoir, adaer/ebrs: entropy-balanced).
inline void check_ablation_wiring(StrategyKind kind, const MemoryBuffer& buffer) {
    if (buffer.policy() != memory_policy_for(kind)) {
        throw ConfigError("strategy " + std::string(to_string(kind)) + " must use " +
                          to_string(memory_policy_for(kind)) + " memory updates");
    }
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// One continual run for a single seed on a prepared stream.
inline SeedResult run_seed(const RunConfig& config, const TaskStream& stream, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    SeedResult out;
    out.seed = seed;

    const std::size_t T = stream.num_tasks();
    auto params = init_network(input_dim_of(stream), config.hidden_dim, config.num_classes(),
                               derive_seed(seed, seed_stream::init));
    MemoryBuffer buffer(config.memory_size, memory_policy_for(config.strategy), derive_seed(seed, seed_stream::memory));
    check_ablation_wiring(config.strategy, buffer);
    Rng rng(derive_seed(seed, seed_stream::train));
    const auto strategy = config.strategy_spec();

    ResultMatrix matrix(T);
    matrix.set_baseline(evaluate_all(params, stream));

    for (std::size_t t = 1; t <= T && out.ok; ++t) {
        const auto task = static_cast<TaskId>(t);
        for (std::size_t b = 0; b < stream.num_batches(task) && out.ok; ++b) {
            const auto batch = stream.batch(task, b);
            for (std::size_t it = 0; it < config.iters_per_batch; ++it) {
                const StepOptions options{config.alpha, it + 1 == config.iters_per_batch};
                params = train_step(params, batch, buffer, strategy, options, rng).params;
                if (!all_finite(params)) {
                    out.ok = false;
                    out.diagnostic = "non-finite parameters after task " + std::to_string(t) + ", batch " +
                                     std::to_string(b);
                    break;
                }
            }
        }
        if (out.ok) matrix.record_row(t, evaluate_all(params, stream));
    }

    if (out.ok) {
        out.final_accuracies = evaluate_all(params, stream);
        out.metrics = summarize(matrix);
    }
    out.matrix = std::move(matrix);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline RunRecord run_experiment(const RunConfig& config) {
    validate(config);
    RunRecord record;
    record.config = config;
    DataSource data(config);
    for (auto seed : config.seeds) {
        const auto stream = data.stream_for_seed(seed);
        record.seeds.push_back(run_seed(config, stream, seed));
    }
    return record;
}

/// Upper-bound reference: all tasks' training data shuffled together and
/// trained for `joint_epochs` passes of plain SGD.
inline SeedResult run_joint_seed(const RunConfig& config, const TaskStream& stream, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    SeedResult out;
    out.seed = seed;

    ExampleSet all;
    for (std::size_t t = 1; t <= stream.num_tasks(); ++t) {
        const auto& part = stream.train(static_cast<TaskId>(t));
        all.insert(all.end(), part.begin(), part.end());
    }
    auto params = init_network(input_dim_of(stream), config.hidden_dim, config.num_classes(),
                               derive_seed(seed, seed_stream::init));
    Rng rng(derive_seed(seed, seed_stream::train));
    for (std::size_t epoch = 0; epoch < config.joint_epochs && out.ok; ++epoch) {
        std::shuffle(all.begin(), all.end(), rng);
        for (std::size_t begin = 0; begin < all.size(); begin += config.batch_size) {
            const auto len = std::min(config.batch_size, all.size() - begin);
            const std::span<const Example> batch(all.data() + begin, len);
            params = sgd_step(params, backward(params, batch), config.alpha);
        }
        if (!all_finite(params)) {
            out.ok = false;
            out.diagnostic = "non-finite parameters after joint epoch " + std::to_string(epoch + 1);
        }
    }
    if (out.ok) {
        out.final_accuracies = evaluate_all(params, stream);
        out.metrics.acc = std::accumulate(out.final_accuracies.begin(), out.final_accuracies.end(), 0.0) /
                          static_cast<double>(out.final_accuracies.size());
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline RunRecord run_joint(const RunConfig& config) {
    validate(config);
    RunRecord record;
    record.config = config;
    record.joint = true;
    DataSource data(config);
    for (auto seed : config.seeds) record.seeds.push_back(run_joint_seed(config, data.stream_for_seed(seed), seed));
    return record;
}

enum class SweepAxis { memory_size, tau, lambda };

inline std::optional<SweepAxis> parse_axis(std::string_view name) {
    if (name == "memory_M" || name == "memory_size") return SweepAxis::memory_size;
    if (name == "tau") return SweepAxis::tau;
    if (name == "lambda") return SweepAxis::lambda;
    return std::nullopt;
}

inline RunConfig with_axis_value(RunConfig config, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::memory_size:
        if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("memory size values must be integers >= 1");
        config.memory_size = static_cast<std::size_t>(value);
        break;
    case SweepAxis::tau: config.tau = value; break;
    case SweepAxis::lambda: config.lambda = value; break;
    }
    validate(config);
    return config;
}

/// One record per axis value; every point reuses the template's seeds so runs pair up.
inline std::vector<RunRecord> sweep(const RunConfig& config, SweepAxis axis, const std::vector<double>& values) {
    std::vector<RunConfig> points;
    for (double v : values) points.push_back(with_axis_value(config, axis, v));
    std::vector<RunRecord> out;
    for (const auto& p : points) out.push_back(run_experiment(p));
    return out;
}

/// Mean over seeds of the first task's accuracy after learning each task.
inline std::vector<double> first_task_curve(const RunRecord& record) {
    if (record.joint) throw IncompleteRunError("joint runs have no per-task result matrix");
    std::vector<double> curve;
    std::size_t n = 0;
    for (const auto& s : record.seeds) {
        if (!s.ok) continue;
        if (!s.matrix || !s.matrix->complete()) throw IncompleteRunError("seed " + std::to_string(s.seed) + " is incomplete");
        const auto T = s.matrix->num_tasks();
        if (curve.empty()) curve.assign(T, 0.0);
        for (std::size_t i = 1; i <= T; ++i) curve[i - 1] += s.matrix->at(i, 1);
        ++n;
    }
    if (n == 0) throw IncompleteRunError("no completed seeds");
    for (double& v : curve) v /= static_cast<double>(n);
    return curve;
}

} // namespace adaer
