#pragma once

// Run configuration and its JSON form. Unknown keys and ill-typed values are
// rejected with ConfigError; missing keys take the defaults below.

#include <adaer/errors.hpp>
#include <adaer/replay.hpp>
#include <adaer/stream.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace adaer {

enum class Benchmark { split_mnist, split_fmnist, split_synthetic };

inline constexpr std::string_view to_string(Benchmark b) {
    switch (b) {
    case Benchmark::split_mnist: return "split_mnist";
    case Benchmark::split_fmnist: return "split_fmnist";
    case Benchmark::split_synthetic: return "split_synthetic";
    }
    return "?";
}

struct RunConfig {
    Benchmark benchmark = Benchmark::split_synthetic;
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    StrategyKind strategy = StrategyKind::adaer;
    std::size_t num_tasks = 5;
    std::size_t classes_per_task = 2;
    std::size_t train_per_task = 1000;
    std::size_t batch_size = 20;
    std::size_t replay_size = 20;
    std::size_t memory_size = 100;
    double alpha = 0.05;
    double tau = 0.5;
    double lambda = 0.0;
    std::size_t iters_per_batch = 1;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string output = "results";
    std::size_t hidden_dim = 400;
    std::size_t joint_epochs = 5;
    std::size_t test_per_class = 200; // synthetic only; IDX runs use the full test split
    std::size_t synthetic_dim = 20;
    LossWeighting loss_weighting = LossWeighting::concatenated;

    Strategy strategy_spec() const { return Strategy{strategy, replay_size, tau, loss_weighting}; }
    std::size_t num_classes() const { return num_tasks * classes_per_task; }
};

/// Throws ConfigError describing the first invalid field.
inline void validate(const RunConfig& c) {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (c.num_tasks < 1) fail("num_tasks must be >= 1");
    if (c.classes_per_task < 1) fail("classes_per_task must be >= 1");
    if (c.train_per_task < c.classes_per_task) fail("train_per_task must be >= classes_per_task");
    if (c.batch_size < 1) fail("batch_size must be >= 1");
    if (c.replay_size < 1) fail("replay_size must be >= 1");
    if (c.memory_size < 1) fail("memory_size must be >= 1");
    if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) fail("alpha must be finite and >= 0");
    if (!(c.tau > 0.0 && c.tau <= 1.0)) fail("tau must lie in (0, 1]");
    if (!(c.lambda >= 0.0 && c.lambda < 1.0)) fail("lambda must lie in [0, 1)");
    if (c.iters_per_batch < 1) fail("iters_per_batch must be >= 1");
    if (c.seeds.empty()) fail("seeds must be a non-empty list");
    if (c.hidden_dim < 1) fail("hidden_dim must be >= 1");
    if (c.joint_epochs < 1) fail("joint_epochs must be >= 1");
    if (c.benchmark == Benchmark::split_synthetic) {
        if (c.synthetic_dim < 2) fail("synthetic_dim must be >= 2");
        if (c.num_classes() > 2 * c.synthetic_dim) fail("synthetic benchmark supports at most 2 * synthetic_dim classes");
        if (c.test_per_class < 1) fail("test_per_class must be >= 1");
    } else {
        for (const auto* p : {&c.train_images, &c.train_labels, &c.test_images, &c.test_labels}) {
            if (p->empty()) fail("IDX benchmarks need train_images, train_labels, test_images and test_labels");
        }
    }
}

namespace detail {

template <typename T>
T json_get(const nlohmann::json& j, std::string_view key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
    }
}

inline std::size_t json_count(const nlohmann::json& j, std::string_view key) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ConfigError("config key '" + std::string(key) + "' must be a non-negative integer");
    }
    return j.get<std::size_t>();
}

inline double json_real(const nlohmann::json& j, std::string_view key) {
    if (!j.is_number()) throw ConfigError("config key '" + std::string(key) + "' must be a number");
    return j.get<double>();
}

} // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "benchmark") {
            const auto name = detail::json_get<std::string>(v, key);
            if (name == "split_mnist") c.benchmark = Benchmark::split_mnist;
            else if (name == "split_fmnist") c.benchmark = Benchmark::split_fmnist;
            else if (name == "split_synthetic") c.benchmark = Benchmark::split_synthetic;
            else throw ConfigError("unknown benchmark '" + name + "'");
        } else if (key == "train_images") c.train_images = detail::json_get<std::string>(v, key);
        else if (key == "train_labels") c.train_labels = detail::json_get<std::string>(v, key);
        else if (key == "test_images") c.test_images = detail::json_get<std::string>(v, key);
        else if (key == "test_labels") c.test_labels = detail::json_get<std::string>(v, key);
        else if (key == "strategy") {
            const auto name = detail::json_get<std::string>(v, key);
            const auto kind = parse_strategy(name);
            if (!kind) throw ConfigError("unknown strategy '" + name + "'");
            c.strategy = *kind;
        } else if (key == "num_tasks") c.num_tasks = detail::json_count(v, key);
        else if (key == "classes_per_task") c.classes_per_task = detail::json_count(v, key);
        else if (key == "train_per_task") c.train_per_task = detail::json_count(v, key);
        else if (key == "batch_size") c.batch_size = detail::json_count(v, key);
        else if (key == "replay_size") c.replay_size = detail::json_count(v, key);
        else if (key == "memory_size") c.memory_size = detail::json_count(v, key);
        else if (key == "alpha") c.alpha = detail::json_real(v, key);
        else if (key == "tau") c.tau = detail::json_real(v, key);
        else if (key == "lambda") c.lambda = detail::json_real(v, key);
        else if (key == "iters_per_batch") c.iters_per_batch = detail::json_count(v, key);
        else if (key == "seeds") {
            if (!v.is_array()) throw ConfigError("config key 'seeds' must be an array of integers");
            c.seeds.clear();
            for (const auto& s : v) c.seeds.push_back(detail::json_count(s, key));
        } else if (key == "output") c.output = detail::json_get<std::string>(v, key);
        else if (key == "hidden_dim") c.hidden_dim = detail::json_count(v, key);
        else if (key == "joint_epochs") c.joint_epochs = detail::json_count(v, key);
        else if (key == "test_per_class") c.test_per_class = detail::json_count(v, key);
        else if (key == "synthetic_dim") c.synthetic_dim = detail::json_count(v, key);
        else if (key == "loss_weighting") {
            const auto name = detail::json_get<std::string>(v, key);
            if (name == "concatenated") c.loss_weighting = LossWeighting::concatenated;
            else if (name == "separate_means") c.loss_weighting = LossWeighting::separate_means;
            else throw ConfigError("unknown loss_weighting '" + name + "'");
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    validate(c);
    return c;
}

/// Fully resolved config, keys in a fixed order.
inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["benchmark"] = std::string(to_string(c.benchmark));
    j["train_images"] = c.train_images;
    j["train_labels"] = c.train_labels;
    j["test_images"] = c.test_images;
    j["test_labels"] = c.test_labels;
    j["strategy"] = std::string(to_string(c.strategy));
    j["num_tasks"] = c.num_tasks;
    j["classes_per_task"] = c.classes_per_task;
    j["train_per_task"] = c.train_per_task;
    j["batch_size"] = c.batch_size;
    j["replay_size"] = c.replay_size;
    j["memory_size"] = c.memory_size;
    j["alpha"] = c.alpha;
    j["tau"] = c.tau;
    j["lambda"] = c.lambda;
    j["iters_per_batch"] = c.iters_per_batch;
    j["seeds"] = c.seeds;
    j["output"] = c.output;
    j["hidden_dim"] = c.hidden_dim;
    j["joint_epochs"] = c.joint_epochs;
    j["test_per_class"] = c.test_per_class;
    j["synthetic_dim"] = c.synthetic_dim;
    j["loss_weighting"] = c.loss_weighting == LossWeighting::concatenated ? "concatenated" : "separate_means";
    return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace adaer
