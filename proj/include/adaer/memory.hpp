#pragma once

// Bounded episodic memory with plain reservoir sampling and the
// entropy-balanced reservoir variant: once full, an accepted newcomer evicts
// the lowest-score slot of the most populated class instead of a random slot.

#include <adaer/binary_io.hpp>
#include <adaer/errors.hpp>
#include <adaer/example.hpp>
#include <adaer/rng.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace adaer {

struct MemorySlot {
    std::vector<double> features;
    Label label = 0;
    TaskId task_id = 0;
    double score = 0.0; // last interference score, 0 until the first scoring pass

    Example to_example() const { return Example{features, label, task_id}; }
    bool operator==(const MemorySlot&) const = default;
};

enum class MemoryPolicy { reservoir, entropy_balanced };

inline const char* to_string(MemoryPolicy p) {
    return p == MemoryPolicy::reservoir ? "reservoir" : "entropy_balanced";
}

/// What a single update() did to the buffer.
struct UpdateOutcome {
    enum class Kind { appended, replaced, rejected };
    Kind kind = Kind::rejected;
    std::size_t slot = 0;
    Label evicted_label = 0;
    double evicted_score = 0.0;
};

class MemoryBuffer {
public:
    MemoryBuffer(std::size_t capacity, MemoryPolicy policy, std::uint64_t seed)
        : capacity_(capacity), policy_(policy), rng_(seed) {
        if (capacity == 0) throw InvalidArgument("memory capacity must be >= 1");
        slots_.reserve(capacity);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return slots_.size(); }
    bool empty() const { return slots_.empty(); }
    std::uint64_t seen() const { return seen_; }
    MemoryPolicy policy() const { return policy_; }
    const std::vector<MemorySlot>& slots() const { return slots_; }
    const MemorySlot& slot(std::size_t m) const { return slots_.at(m); }

    /// Offers one example to the buffer.
    UpdateOutcome update(const Example& ex) {
        if (slots_.size() < capacity_) return update_with_draw(ex, 0);
        std::uniform_int_distribution<std::uint64_t> draw(0, seen_);
        return update_with_draw(ex, draw(rng_));
    }

    /// update() with the acceptance draw supplied by the caller; `valid` is
    /// ignored while the buffer is not full. Accepts when valid <= capacity.
    UpdateOutcome update_with_draw(const Example& ex, std::uint64_t valid) {
        UpdateOutcome out;
        ++seen_;
        if (slots_.size() < capacity_) {
            slots_.push_back(MemorySlot{ex.features, ex.label, ex.task_id, 0.0});
            out.kind = UpdateOutcome::Kind::appended;
            out.slot = slots_.size() - 1;
            return out;
        }
        if (valid > capacity_) return out;

        std::size_t victim = 0;
        if (policy_ == MemoryPolicy::reservoir) {
            std::uniform_int_distribution<std::size_t> pick(0, slots_.size() - 1);
            victim = pick(rng_);
        } else {
            victim = balanced_victim();
        }
        out.kind = UpdateOutcome::Kind::replaced;
        out.slot = victim;
        out.evicted_label = slots_[victim].label;
        out.evicted_score = slots_[victim].score;
        slots_[victim] = MemorySlot{ex.features, ex.label, ex.task_id, 0.0};
        return out;
    }

    /// Slot the entropy-balanced policy would evict now: the minimum-score slot
    /// of the most frequent label (ties: smallest label, then smallest index).
    std::size_t balanced_victim() const {
        if (slots_.empty()) throw EmptyBufferError();
        const auto counts = class_counts();
        Label majority = counts.begin()->first;
        std::size_t best = 0;
        for (const auto& [label, count] : counts) {
            if (count > best) {
                best = count;
                majority = label;
            }
        }
        std::optional<std::size_t> victim;
        for (std::size_t m = 0; m < slots_.size(); ++m) {
            if (slots_[m].label != majority) continue;
            if (!victim || slots_[m].score < slots_[*victim].score) victim = m;
        }
        return *victim;
    }

    void set_scores(std::span<const double> scores) {
        if (scores.size() != slots_.size()) {
            throw InvalidArgument("score vector has " + std::to_string(scores.size()) + " entries, buffer has " +
                                  std::to_string(slots_.size()) + " slots");
        }
        for (double s : scores) {
            if (!std::isfinite(s)) throw InvalidArgument("non-finite memory score");
        }
        for (std::size_t m = 0; m < slots_.size(); ++m) slots_[m].score = scores[m];
    }

    /// Keyed by label, iteration in ascending label order.
    std::map<Label, std::size_t> class_counts() const {
        std::map<Label, std::size_t> counts;
        for (const auto& s : slots_) ++counts[s.label];
        return counts;
    }

    /// k slot indices, without replacement when k <= size(), otherwise with replacement.
    std::vector<std::size_t> sample_uniform(std::size_t k, Rng& rng) const {
        if (slots_.empty()) throw EmptyBufferError();
        std::vector<std::size_t> out;
        out.reserve(k);
        if (k <= slots_.size()) {
            std::vector<std::size_t> idx(slots_.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            // partial Fisher-Yates
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
                std::swap(idx[i], idx[pick(rng)]);
                out.push_back(idx[i]);
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, slots_.size() - 1);
            for (std::size_t i = 0; i < k; ++i) out.push_back(pick(rng));
        }
        return out;
    }

    /// Debug dump: "LRMEM1", u64 capacity, u64 seen, u8 policy, u64 slots, u64 dim,
    /// then per slot i32 label, i32 task, f64 score, dim f64 features (little-endian).
    void save_snapshot(const std::filesystem::path& path) const;
    static MemoryBuffer load_snapshot(const std::filesystem::path& path, std::uint64_t seed = 0);

    bool same_contents(const MemoryBuffer& other) const {
        return capacity_ == other.capacity_ && seen_ == other.seen_ && policy_ == other.policy_ &&
               slots_ == other.slots_;
    }

private:
    std::size_t capacity_;
    MemoryPolicy policy_;
    std::vector<MemorySlot> slots_;
    std::uint64_t seen_ = 0;
    Rng rng_;
};

inline constexpr std::array<char, 6> kMemorySnapshotMagic = {'L', 'R', 'M', 'E', 'M', '1'};

inline void MemoryBuffer::save_snapshot(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError(path.string() + ": cannot open for writing");
    const std::uint64_t dim = slots_.empty() ? 0 : slots_.front().features.size();
    os.write(kMemorySnapshotMagic.data(), kMemorySnapshotMagic.size());
    detail::write_le<std::uint64_t>(os, capacity_);
    detail::write_le<std::uint64_t>(os, seen_);
    detail::write_le<std::uint8_t>(os, policy_ == MemoryPolicy::reservoir ? 0 : 1);
    detail::write_le<std::uint64_t>(os, slots_.size());
    detail::write_le<std::uint64_t>(os, dim);
    for (const auto& s : slots_) {
        if (s.features.size() != dim) throw InvalidArgument("memory snapshot requires a uniform feature dimension");
        detail::write_le<std::int32_t>(os, s.label);
        detail::write_le<std::int32_t>(os, s.task_id);
        detail::write_le<double>(os, s.score);
        for (double v : s.features) detail::write_le<double>(os, v);
    }
}

inline MemoryBuffer MemoryBuffer::load_snapshot(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError(path.string() + ": cannot open file");
    std::array<char, 6> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMemorySnapshotMagic) {
        throw FormatError(path.string() + ": expected magic LRMEM1 at offset 0");
    }
    const auto capacity = detail::read_le<std::uint64_t>(is, path);
    const auto seen = detail::read_le<std::uint64_t>(is, path);
    const auto policy = detail::read_le<std::uint8_t>(is, path);
    const auto count = detail::read_le<std::uint64_t>(is, path);
    const auto dim = detail::read_le<std::uint64_t>(is, path);
    if (policy > 1) throw FormatError(path.string() + ": unknown policy tag at offset 22");
    if (count > capacity || count > seen) throw FormatError(path.string() + ": slot count exceeds capacity or seen");

    MemoryBuffer buf(capacity, policy == 0 ? MemoryPolicy::reservoir : MemoryPolicy::entropy_balanced, seed);
    buf.seen_ = seen;
    buf.slots_.resize(count);
    for (auto& s : buf.slots_) {
        s.label = detail::read_le<std::int32_t>(is, path);
        s.task_id = detail::read_le<std::int32_t>(is, path);
        s.score = detail::read_le<double>(is, path);
        s.features.resize(dim);
        for (auto& v : s.features) v = detail::read_le<double>(is, path);
    }
    return buf;
}

} // namespace adaer
