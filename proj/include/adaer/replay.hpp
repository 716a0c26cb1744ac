#pragma once

// Replay strategies. The contextually-cued recall path works in four stages:
//   1. virtual step: theta' = theta - alpha * grad(loss on the incoming batch)
//   2. interference score per memory slot: loss(theta', m) - loss(theta, m)
//   3. R_e: the p highest-scoring slots
//   4. R_t: q slots drawn from the rest of memory, split across tasks in
//      proportion to how often each task appears in R_e
// The learner then takes one SGD step on R_e + R_t + batch, and the batch is
// streamed into memory.

#include <adaer/errors.hpp>
#include <adaer/example.hpp>
#include <adaer/memory.hpp>
#include <adaer/nn.hpp>
#include <adaer/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adaer {

enum class StrategyKind { online, er, mir, ccmr, adaer, ebrs };

inline constexpr std::string_view to_string(StrategyKind k) {
    switch (k) {
    case StrategyKind::online: return "online";
    case StrategyKind::er: return "er";
    case StrategyKind::mir: return "mir";
    case StrategyKind::ccmr: return "ccmr";
    case StrategyKind::adaer: return "adaer";
    case StrategyKind::ebrs: return "ebrs";
    }
    return "?";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view name) {
    for (auto k : {StrategyKind::online, StrategyKind::er, StrategyKind::mir, StrategyKind::ccmr, StrategyKind::adaer,
                   StrategyKind::ebrs}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

/// Memory update rule paired with each strategy: adaer and the ebrs ablation
/// use entropy-balanced updates, every other buffered strategy plain reservoir.
inline constexpr MemoryPolicy memory_policy_for(StrategyKind k) {
    return (k == StrategyKind::adaer || k == StrategyKind::ebrs) ? MemoryPolicy::entropy_balanced
                                                                 : MemoryPolicy::reservoir;
}

/// How the combined replay + batch loss is averaged.
enum class LossWeighting {
    concatenated,  // one mean over R + B_t
    separate_means // mean over R plus mean over B_t
};

struct Strategy {
    StrategyKind kind = StrategyKind::adaer;
    std::size_t replay_size = 20;
    double tau = 0.5;
    LossWeighting weighting = LossWeighting::concatenated;
};

using ScoreVector = std::vector<double>;

struct ReplayPlan {
    std::vector<std::size_t> interfered;      // R_e, descending score
    std::vector<std::size_t> task_associated; // R_t, grouped by ascending task id
    std::map<TaskId, std::size_t> quota;      // q_j actually drawn per task
    std::size_t p = 0;
    std::size_t q = 0;
    double tau = 1.0;

    std::size_t size() const { return interfered.size() + task_associated.size(); }
    bool empty() const { return size() == 0; }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out = interfered;
        out.insert(out.end(), task_associated.begin(), task_associated.end());
        return out;
    }
};

/// theta' after one SGD step on the incoming batch alone.
inline ParamSet virtual_step(const ParamSet& params, std::span<const Example> batch, double alpha) {
    return sgd_step(params, backward(params, batch), alpha);
}

inline std::vector<Example> slot_examples(const MemoryBuffer& buffer) {
    std::vector<Example> out;
    out.reserve(buffer.size());
    for (const auto& s : buffer.slots()) out.push_back(s.to_example());
    return out;
}

inline std::vector<Example> slot_examples(const MemoryBuffer& buffer, std::span<const std::size_t> indices) {
    std::vector<Example> out;
    out.reserve(indices.size());
    for (auto m : indices) out.push_back(buffer.slot(m).to_example());
    return out;
}

/// Per-slot loss increase under theta_virtual relative to theta. The scores are
/// also stored in the buffer for the entropy-balanced update rule.
inline ScoreVector compute_scores(const ParamSet& theta, const ParamSet& theta_virtual, MemoryBuffer& buffer) {
    if (buffer.empty()) throw EmptyBufferError();
    const auto examples = slot_examples(buffer);
    const auto before = forward_loss(theta, examples);
    const auto after = forward_loss(theta_virtual, examples);
    ScoreVector scores(examples.size());
    for (std::size_t m = 0; m < scores.size(); ++m) scores[m] = after.per_example_loss[m] - before.per_example_loss[m];
    buffer.set_scores(scores);
    return scores;
}

/// Indices of the p largest scores in descending order; ties go to the smaller index.
inline std::vector<std::size_t> select_interfered(std::span<const double> scores, std::size_t p) {
    if (p > scores.size()) {
        throw InvalidArgument("cannot select " + std::to_string(p) + " of " + std::to_string(scores.size()) + " scores");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(p);
    return idx;
}

namespace detail {

// Largest-remainder split of `total` proportionally to `weights` (ties to the
// earlier entry). Exact integer arithmetic.
inline std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> weights) {
    const std::size_t weight_sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
    std::vector<std::size_t> out(weights.size(), 0);
    if (weight_sum == 0 || total == 0) return out;
    std::vector<std::size_t> rem(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto num = static_cast<unsigned long long>(total) * weights[i];
        out[i] = static_cast<std::size_t>(num / weight_sum);
        rem[i] = static_cast<std::size_t>(num % weight_sum);
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
    return out;
}

inline std::vector<bool> membership(std::size_t n, std::span<const std::size_t> indices) {
    std::vector<bool> in(n, false);
    for (auto m : indices) in[m] = true;
    return in;
}

} // namespace detail

/// Splits q replay slots across the tasks seen in r_e, proportionally to their
/// frequency there. Quotas are capped by each task's slots outside r_e; any
/// surplus is redistributed among the uncapped tasks with the same rule.
inline std::map<TaskId, std::size_t> allocate_task_quota(const MemoryBuffer& buffer, std::span<const std::size_t> r_e,
                                                         std::size_t q) {
    std::map<TaskId, std::size_t> hits; // p_j
    for (auto m : r_e) ++hits[buffer.slot(m).task_id];
    std::map<TaskId, std::size_t> quota;
    for (const auto& [task, _] : hits) quota[task] = 0;
    if (q == 0 || hits.empty()) return quota;

    const auto in_re = detail::membership(buffer.size(), r_e);
    std::map<TaskId, std::size_t> eligible;
    for (std::size_t m = 0; m < buffer.size(); ++m) {
        const auto task = buffer.slot(m).task_id;
        if (!in_re[m] && hits.contains(task)) ++eligible[task];
    }

    std::size_t available = 0;
    for (const auto& [_, n] : eligible) available += n;
    std::size_t remaining = std::min(q, available);

    std::vector<TaskId> active;
    for (const auto& [task, _] : hits) active.push_back(task);
    while (remaining > 0 && !active.empty()) {
        std::vector<std::size_t> weights;
        for (auto task : active) weights.push_back(hits[task]);
        const auto share = detail::largest_remainder(remaining, weights);
        std::vector<TaskId> still_open;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const auto task = active[i];
            const std::size_t room = eligible[task] - quota[task];
            const std::size_t give = std::min(share[i], room);
            quota[task] += give;
            remaining -= give;
            if (give < room) still_open.push_back(task);
        }
        active = std::move(still_open);
    }
    return quota;
}

/// p = round(tau * replay_size) interfered slots plus q = replay_size - p
/// task-associated slots. When memory holds fewer than replay_size slots the
/// plan covers all of them. Slots still missing after the task quotas (tasks
/// absent from R_e) are filled uniformly from the unused remainder.
inline ReplayPlan build_plan(const MemoryBuffer& buffer, std::span<const double> scores, std::size_t replay_size,
                             double tau, Rng& rng) {
    if (replay_size == 0) throw InvalidArgument("replay size must be >= 1");
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("tau must lie in (0, 1]");
    ReplayPlan plan;
    plan.tau = tau;
    if (buffer.empty()) return plan;
    if (scores.size() != buffer.size()) throw InvalidArgument("score vector does not match buffer size");

    const std::size_t target = std::min(replay_size, buffer.size());
    const auto p_nominal = static_cast<std::size_t>(std::floor(tau * static_cast<double>(replay_size) + 0.5));
    plan.p = std::min(p_nominal, target);
    plan.q = target - plan.p;
    plan.interfered = select_interfered(scores, plan.p);
    if (plan.q == 0) return plan;

    const auto in_re = detail::membership(buffer.size(), plan.interfered);
    std::map<TaskId, std::vector<std::size_t>> pool;
    for (std::size_t m = 0; m < buffer.size(); ++m) {
        if (!in_re[m]) pool[buffer.slot(m).task_id].push_back(m);
    }

    auto draw = [&](std::vector<std::size_t>& from, std::size_t k) {
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, from.size() - 1);
            std::swap(from[i], from[pick(rng)]);
            plan.task_associated.push_back(from[i]);
        }
        from.erase(from.begin(), from.begin() + static_cast<std::ptrdiff_t>(k));
    };

    plan.quota = allocate_task_quota(buffer, plan.interfered, plan.q);
    for (const auto& [task, k] : plan.quota) draw(pool[task], k);

    const std::size_t missing = plan.q - plan.task_associated.size();
    if (missing > 0) {
        std::vector<std::size_t> rest;
        for (const auto& [_, slots] : pool) rest.insert(rest.end(), slots.begin(), slots.end());
        const std::size_t begin = plan.task_associated.size();
        draw(rest, missing);
        for (std::size_t i = begin; i < plan.task_associated.size(); ++i) {
            ++plan.quota[buffer.slot(plan.task_associated[i]).task_id];
        }
    }
    return plan;
}

struct StepOptions {
    double alpha = 0.05;
    bool update_memory = true; // stream the batch into memory after the step
};

struct StepResult {
    ParamSet params;
    ReplayPlan plan;
};

namespace detail {

inline GradSet combined_gradient(const ParamSet& theta, const std::vector<Example>& replay,
                                 std::span<const Example> batch, LossWeighting weighting) {
    if (replay.empty()) return backward(theta, batch);
    if (weighting == LossWeighting::separate_means) {
        auto g = backward(theta, batch);
        const auto gr = backward(theta, replay);
        for (std::size_t l = 0; l < g.layers.size(); ++l) {
            for (std::size_t n = 0; n < g.layers[l].weight.data.size(); ++n)
                g.layers[l].weight.data[n] += gr.layers[l].weight.data[n];
            for (std::size_t n = 0; n < g.layers[l].bias.size(); ++n) g.layers[l].bias[n] += gr.layers[l].bias[n];
        }
        return g;
    }
    std::vector<Example> all = replay;
    all.insert(all.end(), batch.begin(), batch.end());
    return backward(theta, all);
}

} // namespace detail

/// One learner update for the incoming batch under `strategy`, followed by
/// the memory update. Returns the new parameters and, for score-driven
/// strategies, the replay plan used.
inline StepResult train_step(const ParamSet& theta, std::span<const Example> batch, MemoryBuffer& buffer,
                             const Strategy& strategy, const StepOptions& options, Rng& rng) {
    if (batch.empty()) throw InvalidArgument("batch is empty");
    StepResult result;
    std::vector<Example> replay;

    switch (strategy.kind) {
    case StrategyKind::online:
        break;
    case StrategyKind::er:
        if (!buffer.empty()) {
            const auto idx = buffer.sample_uniform(std::min(strategy.replay_size, buffer.size()), rng);
            replay = slot_examples(buffer, idx);
        }
        break;
    case StrategyKind::mir:
    case StrategyKind::ebrs:
    case StrategyKind::ccmr:
    case StrategyKind::adaer:
        if (!buffer.empty()) {
            const auto theta_virtual = virtual_step(theta, batch, options.alpha);
            const auto scores = compute_scores(theta, theta_virtual, buffer);
            const bool interfered_only = strategy.kind == StrategyKind::mir || strategy.kind == StrategyKind::ebrs;
            result.plan = build_plan(buffer, scores, strategy.replay_size, interfered_only ? 1.0 : strategy.tau, rng);
            const auto idx = result.plan.indices();
            replay = slot_examples(buffer, idx);
        }
        break;
    }

    result.params = sgd_step(theta, detail::combined_gradient(theta, replay, batch, strategy.weighting), options.alpha);

    if (options.update_memory && strategy.kind != StrategyKind::online) {
        for (const auto& ex : batch) buffer.update(ex);
    }
    return result;
}

} // namespace adaer
