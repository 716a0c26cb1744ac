#include "test_util.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace adaer;

namespace {

RunConfig small_config(StrategyKind kind = StrategyKind::adaer) {
    RunConfig c;
    c.strategy = kind;
    c.num_tasks = 3;
    c.train_per_task = 200;
    c.hidden_dim = 32;
    c.memory_size = 40;
    c.test_per_class = 50;
    c.seeds = {1, 2};
    return c;
}

std::string csv_of(const RunRecord& r) {
    std::ostringstream os;
    write_csv(os, r);
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ADAER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(Config, DefaultsMatchReferenceSetup) {
    const RunConfig c;
    EXPECT_EQ(c.batch_size, 20u);
    EXPECT_EQ(c.replay_size, 20u);
    EXPECT_EQ(c.memory_size, 100u);
    EXPECT_EQ(c.tau, 0.5);
    EXPECT_EQ(c.lambda, 0.0);
    EXPECT_EQ(c.iters_per_batch, 1u);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
    EXPECT_EQ(c.joint_epochs, 5u);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, ParsesKnownKeys) {
    const auto j = nlohmann::json::parse(R"({"strategy": "er", "memory_size": 50, "tau": 0.3, "lambda": 0.5,
        "seeds": [3, 9], "benchmark": "split_synthetic", "loss_weighting": "separate_means", "output": "out"})");
    const auto c = config_from_json(j);
    EXPECT_EQ(c.strategy, StrategyKind::er);
    EXPECT_EQ(c.memory_size, 50u);
    EXPECT_EQ(c.tau, 0.3);
    EXPECT_EQ(c.lambda, 0.5);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 9}));
    EXPECT_EQ(c.loss_weighting, LossWeighting::separate_means);
    EXPECT_EQ(c.output, "out");
    EXPECT_EQ(config_from_json(nlohmann::json(config_to_json(c))).memory_size, 50u);
}

TEST(Config, RejectsUnknownAndInvalid) {
    auto bad = [](const char* text) {
        EXPECT_THROW(config_from_json(nlohmann::json::parse(text)), ConfigError) << text;
    };
    bad(R"({"memory": 100})");
    bad(R"({"strategy": "gem"})");
    bad(R"({"benchmark": "cifar"})");
    bad(R"({"tau": 0.0})");
    bad(R"({"tau": 1.5})");
    bad(R"({"lambda": 1.0})");
    bad(R"({"memory_size": -3})");
    bad(R"({"memory_size": 2.5})");
    bad(R"({"batch_size": 0})");
    bad(R"({"seeds": []})");
    bad(R"({"seeds": 4})");
    bad(R"({"alpha": "fast"})");
    bad(R"({"benchmark": "split_mnist"})");
    bad(R"([1, 2])");
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Harness, RunIsDeterministic) {
    const auto c = small_config();
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    ASSERT_TRUE(a.all_ok());
    EXPECT_EQ(csv_of(a), csv_of(b));
    auto ja = summary_json(a);
    auto jb = summary_json(b);
    for (auto* j : {&ja, &jb})
        for (auto& s : (*j)["seeds"]) s.erase("wall_seconds");
    EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Harness, SeedsAreIndependentOfOrder) {
    auto c = small_config(StrategyKind::er);
    const auto forward = run_experiment(c);
    c.seeds = {2, 1};
    const auto backward = run_experiment(c);
    EXPECT_EQ(forward.seeds[0].metrics.acc, backward.seeds[1].metrics.acc);
    EXPECT_EQ(forward.seeds[1].metrics.acc, backward.seeds[0].metrics.acc);
    for (std::size_t i = 1; i <= 3; ++i)
        for (std::size_t j = 1; j <= 3; ++j)
            EXPECT_EQ(forward.seeds[0].matrix->at(i, j), backward.seeds[1].matrix->at(i, j));
}

TEST(Harness, CsvLayout) {
    auto c = small_config(StrategyKind::online);
    c.seeds = {4};
    const auto r = run_experiment(c);
    const auto csv = csv_of(r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "seed,task_learned,task_evaluated,accuracy");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3 + 9); // baseline row plus T x T
    EXPECT_NE(csv.find("\n4,0,1,"), std::string::npos);
    EXPECT_NE(csv.find("\n4,3,3,"), std::string::npos);
}

TEST(Harness, SummaryJsonAggregates) {
    const auto r = run_experiment(small_config(StrategyKind::er));
    const auto j = summary_json(r);
    EXPECT_EQ(j["mode"], "continual");
    EXPECT_EQ(j["config"]["strategy"], "er");
    EXPECT_EQ(j["aggregate"]["completed_seeds"], 2);
    const double a0 = r.seeds[0].metrics.acc, a1 = r.seeds[1].metrics.acc;
    EXPECT_DOUBLE_EQ(j["aggregate"]["acc"]["mean"].get<double>(), (a0 + a1) / 2);
    EXPECT_NEAR(j["aggregate"]["acc"]["std"].get<double>(), std::abs(a0 - a1) / std::sqrt(2.0), 1e-12);
    EXPECT_EQ(j["seeds"][0]["status"], "ok");
    // aggregates are recomputable from the per-seed matrices
    for (const auto& s : r.seeds) EXPECT_EQ(s.metrics.acc, summarize(*s.matrix).acc);
}

TEST(Harness, OnlineForgetsFirstTask) {
    RunConfig c;
    c.strategy = StrategyKind::online;
    c.hidden_dim = 64;
    c.seeds = {1, 2, 3};
    const auto r = run_experiment(c);
    const auto curve = first_task_curve(r);
    ASSERT_EQ(curve.size(), 5u);
    EXPECT_GT(curve[0], 0.9);
    EXPECT_LT(curve[1], 0.5 * curve[0]);
    for (std::size_t i = 2; i < 5; ++i) EXPECT_LT(curve[i], 0.2) << "after task " << i + 1;
    for (const auto& s : r.seeds) EXPECT_GT(s.metrics.forget, 0.5);
}

TEST(Harness, FirstTaskCurveErrors) {
    RunRecord joint;
    joint.joint = true;
    EXPECT_THROW(first_task_curve(joint), IncompleteRunError);
    RunRecord partial;
    SeedResult s;
    s.matrix = ResultMatrix(2);
    partial.seeds.push_back(s);
    EXPECT_THROW(first_task_curve(partial), IncompleteRunError);
    EXPECT_THROW(first_task_curve(RunRecord{}), IncompleteRunError);
}

TEST(Harness, JointReachesSeparableBound) {
    RunConfig c;
    c.seeds = {1, 2};
    const auto r = run_joint(c);
    ASSERT_TRUE(r.all_ok());
    EXPECT_TRUE(r.joint);
    for (const auto& s : r.seeds) EXPECT_GE(s.metrics.acc, 0.95);
    const auto csv = csv_of(r);
    EXPECT_NE(csv.find("\n1,5,5,"), std::string::npos);
}

TEST(Harness, NumericBlowUpIsRecorded) {
    auto c = small_config(StrategyKind::online);
    c.alpha = 1e300;
    c.seeds = {1};
    const auto r = run_experiment(c);
    ASSERT_FALSE(r.all_ok());
    EXPECT_NE(r.seeds[0].diagnostic.find("non-finite"), std::string::npos);
    EXPECT_EQ(summary_json(r)["seeds"][0]["status"], "numeric_failure");
}

TEST(Harness, MissingDataIsDataError) {
    auto c = small_config();
    c.benchmark = Benchmark::split_mnist;
    c.train_images = c.train_labels = c.test_images = c.test_labels = "/nonexistent/file";
    EXPECT_THROW(run_experiment(c), DataError);
    auto big = small_config();
    big.num_tasks = 11;
    big.synthetic_dim = 10;
    EXPECT_THROW(run_experiment(big), ConfigError);
}

TEST(Harness, AblationWiring) {
    MemoryBuffer reservoir(5, MemoryPolicy::reservoir, 1);
    MemoryBuffer balanced(5, MemoryPolicy::entropy_balanced, 1);
    EXPECT_NO_THROW(check_ablation_wiring(StrategyKind::ccmr, reservoir));
    EXPECT_THROW(check_ablation_wiring(StrategyKind::ccmr, balanced), ConfigError);
    EXPECT_NO_THROW(check_ablation_wiring(StrategyKind::adaer, balanced));
    EXPECT_THROW(check_ablation_wiring(StrategyKind::adaer, reservoir), ConfigError);
    EXPECT_NO_THROW(check_ablation_wiring(StrategyKind::ebrs, balanced));
}

TEST(Harness, SweepAxes) {
    EXPECT_EQ(parse_axis("memory_M"), SweepAxis::memory_size);
    EXPECT_EQ(parse_axis("tau"), SweepAxis::tau);
    EXPECT_EQ(parse_axis("lambda"), SweepAxis::lambda);
    EXPECT_FALSE(parse_axis("alpha").has_value());
    const RunConfig c;
    EXPECT_EQ(with_axis_value(c, SweepAxis::memory_size, 200).memory_size, 200u);
    EXPECT_EQ(with_axis_value(c, SweepAxis::tau, 0.9).tau, 0.9);
    EXPECT_THROW(with_axis_value(c, SweepAxis::memory_size, 2.5), ConfigError);
    EXPECT_THROW(with_axis_value(c, SweepAxis::tau, 0.0), ConfigError);
    EXPECT_THROW(with_axis_value(c, SweepAxis::lambda, 1.0), ConfigError);

    auto s = small_config(StrategyKind::er);
    s.seeds = {1};
    const auto records = sweep(s, SweepAxis::memory_size, {10, 40});
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].config.memory_size, 10u);
    EXPECT_EQ(records[1].config.memory_size, 40u);
    EXPECT_EQ(records[0].seeds[0].seed, records[1].seeds[0].seed);
}

TEST(Harness, Aggregate) {
    const auto a = aggregate(std::vector<double>{1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(a.mean, 2.0);
    EXPECT_DOUBLE_EQ(a.std, 1.0);
    EXPECT_EQ(aggregate(std::vector<double>{4.0}).std, 0.0);
    EXPECT_EQ(aggregate(std::vector<double>{}).mean, 0.0);
}

TEST(Cli, ExitCodes) {
    testutil::TempDir dir("cli");
    const auto out = dir.path() / "out";
    const auto cfg = dir.path() / "ok.json";
    write_text(cfg, R"({"num_tasks": 2, "train_per_task": 100, "hidden_dim": 16, "memory_size": 20,
        "test_per_class": 20, "seeds": [1], "output": ")" + out.string() + "\"}");
    EXPECT_EQ(run_cli("run --config " + cfg.string()), 0);
    EXPECT_TRUE(std::filesystem::exists(out / "adaer.csv"));
    EXPECT_TRUE(std::filesystem::exists(out / "adaer.json"));
    EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --axis tau --values 0.5,0.9"), 0);
    EXPECT_TRUE(std::filesystem::exists(out / "adaer_tau_0p9.csv"));
    EXPECT_EQ(run_cli("joint --config " + cfg.string()), 0);
    EXPECT_TRUE(std::filesystem::exists(out / "joint.json"));
    EXPECT_EQ(run_cli("report --input " + out.string()), 0);

    const auto unknown = dir.path() / "unknown.json";
    write_text(unknown, R"({"memory": 10})");
    EXPECT_EQ(run_cli("run --config " + unknown.string()), 1);
    EXPECT_EQ(run_cli("run --config " + (dir.path() / "missing.json").string()), 1);
    EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --axis alpha --values 0.1"), 1);
    EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --axis tau --values abc"), 1);
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("run"), 1);

    const auto nodata = dir.path() / "nodata.json";
    write_text(nodata, R"({"benchmark": "split_mnist", "train_images": "/nonexistent/a", "train_labels": "/nonexistent/b",
        "test_images": "/nonexistent/c", "test_labels": "/nonexistent/d", "seeds": [1], "output": ")" +
                           out.string() + "\"}");
    EXPECT_EQ(run_cli("run --config " + nodata.string()), 2);
    EXPECT_EQ(run_cli("report --input " + (dir.path() / "nowhere").string()), 2);

    const auto blowup = dir.path() / "blowup.json";
    write_text(blowup, R"({"strategy": "online", "alpha": 1e300, "num_tasks": 2, "train_per_task": 100,
        "hidden_dim": 16, "seeds": [1], "output": ")" + out.string() + "\"}");
    EXPECT_EQ(run_cli("run --config " + blowup.string()), 3);
}

TEST(Cli, ReportListsRuns) {
    testutil::TempDir dir("report");
    auto c = small_config(StrategyKind::er);
    c.seeds = {1};
    write_run(run_experiment(c), dir.path(), "er");
    const auto rows = collect_summaries(dir.path());
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].strategy, "er");
    std::ostringstream os;
    print_report(os, rows);
    EXPECT_NE(os.str().find("er.json"), std::string::npos);
}
