#pragma once

// Class-incremental task streams: IDX ingestion (MNIST / Fashion-MNIST
// layout), a seeded Gaussian-cluster generator, and the split into disjoint
// per-task class sets delivered as fixed-size shuffled batches.

#include <adaer/binary_io.hpp>
#include <adaer/errors.hpp>
#include <adaer/example.hpp>
#include <adaer/rng.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace adaer {

// ---------------------------------------------------------------------------
// IDX files
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                               const std::filesystem::path& path) {
    if (offset + 4 > bytes.size()) {
        throw FormatError(path.string() + ": truncated header at offset " + std::to_string(offset));
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

} // namespace detail

/// Reads an IDX image/label pair. Pixels are scaled to [0, 1]; task ids are left at 0.
inline ExampleSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = detail::read_file_bytes(images_path);
    const auto labels = detail::read_file_bytes(labels_path);

    const auto image_magic = detail::read_be32(images, 0, images_path);
    if (image_magic != kIdxImageMagic) {
        throw FormatError(images_path.string() + ": expected image magic " + detail::hex32(kIdxImageMagic) +
                          " at offset 0, found " + detail::hex32(image_magic));
    }
    const auto label_magic = detail::read_be32(labels, 0, labels_path);
    if (label_magic != kIdxLabelMagic) {
        throw FormatError(labels_path.string() + ": expected label magic " + detail::hex32(kIdxLabelMagic) +
                          " at offset 0, found " + detail::hex32(label_magic));
    }

    const std::size_t n_images = detail::read_be32(images, 4, images_path);
    const std::size_t rows = detail::read_be32(images, 8, images_path);
    const std::size_t cols = detail::read_be32(images, 12, images_path);
    const std::size_t n_labels = detail::read_be32(labels, 4, labels_path);
    if (n_images != n_labels) {
        throw FormatError(labels_path.string() + ": label count " + std::to_string(n_labels) +
                          " at offset 4 does not match image count " + std::to_string(n_images) + " in " +
                          images_path.string());
    }

    const std::size_t pixels = rows * cols;
    constexpr std::size_t image_header = 16;
    constexpr std::size_t label_header = 8;
    if (images.size() < image_header + n_images * pixels) {
        throw FormatError(images_path.string() + ": truncated payload at offset " + std::to_string(images.size()) +
                          ", expected " + std::to_string(image_header + n_images * pixels) + " bytes");
    }
    if (labels.size() < label_header + n_labels) {
        throw FormatError(labels_path.string() + ": truncated payload at offset " + std::to_string(labels.size()) +
                          ", expected " + std::to_string(label_header + n_labels) + " bytes");
    }

    ExampleSet out(n_images);
    for (std::size_t n = 0; n < n_images; ++n) {
        auto& ex = out[n];
        ex.features.resize(pixels);
        const unsigned char* px = &images[image_header + n * pixels];
        for (std::size_t p = 0; p < pixels; ++p) ex.features[p] = static_cast<double>(px[p]) / 255.0;
        ex.label = labels[label_header + n];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian clusters
// ---------------------------------------------------------------------------

/// Geometry of the synthetic benchmark. Class c has the base direction
/// b_c = e_c (c < dim) or -e_{c-dim} (dim <= c < 2 dim) and is centred at
/// separation * (b_c + coupling * b_{(c + coupling_offset) mod K}), with
/// isotropic Gaussian noise of standard deviation `noise`. For K <= dim and
/// coupling < 1 the centres are linearly independent, i.e. the vertices of a
/// (non-regular) simplex. The coupling makes some class pairs closer than
/// others, so learning a new class interferes unevenly with older ones.
struct SyntheticShape {
    double separation = 1.0;
    double noise = 0.2;
    double coupling = 0.0;
    std::size_t coupling_offset = 3;
};

/// Mean of class c under `shape` for a K-class, dim-dimensional benchmark.
inline std::vector<double> synthetic_class_mean(std::size_t c, std::size_t num_classes, std::size_t dim,
                                                const SyntheticShape& shape) {
    std::vector<double> mean(dim, 0.0);
    auto add_base = [&](std::size_t k, double w) {
        mean[k % dim] += (k < dim ? 1.0 : -1.0) * w * shape.separation;
    };
    add_base(c, 1.0);
    if (shape.coupling != 0.0) add_base((c + shape.coupling_offset) % num_classes, shape.coupling);
    return mean;
}

inline ExampleSet make_synthetic(std::size_t num_classes, std::size_t dim, std::size_t per_class, std::uint64_t seed,
                                 SyntheticShape shape = {}) {
    if (num_classes < 2) throw InvalidArgument("synthetic benchmark needs at least 2 classes");
    if (dim < 2) throw InvalidArgument("synthetic benchmark needs dim >= 2");
    if (num_classes > 2 * dim) {
        throw InvalidArgument("synthetic benchmark supports at most 2 * dim classes (" + std::to_string(2 * dim) + ")");
    }
    if (!(shape.separation > 0.0) || !(shape.noise >= 0.0) || !(shape.coupling >= 0.0 && shape.coupling < 1.0)) {
        throw InvalidArgument("invalid synthetic shape");
    }

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ExampleSet out;
    out.reserve(num_classes * per_class);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto mean = synthetic_class_mean(c, num_classes, dim, shape);
        for (std::size_t n = 0; n < per_class; ++n) {
            Example ex;
            ex.label = static_cast<Label>(c);
            ex.features.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) ex.features[d] = mean[d] + shape.noise * gauss(rng);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

inline constexpr std::array<char, 6> kSyntheticCacheMagic = {'L', 'R', 'S', 'Y', 'N', '1'};

/// Cache layout: "LRSYN1", u64 count, u64 dim, count*dim f64 features, count u8 labels (all little-endian).
inline void write_synthetic_cache(const std::filesystem::path& path, const ExampleSet& data) {
    const std::uint64_t dim = data.empty() ? 0 : data.front().features.size();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError(path.string() + ": cannot open for writing");
    os.write(kSyntheticCacheMagic.data(), kSyntheticCacheMagic.size());
    detail::write_le<std::uint64_t>(os, data.size());
    detail::write_le<std::uint64_t>(os, dim);
    for (const auto& ex : data) {
        if (ex.features.size() != dim) throw InvalidArgument("synthetic cache requires a uniform feature dimension");
        for (double v : ex.features) detail::write_le<double>(os, v);
    }
    for (const auto& ex : data) {
        if (ex.label < 0 || ex.label > 255) throw InvalidArgument("synthetic cache stores labels as bytes");
        detail::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(ex.label));
    }
}

inline ExampleSet read_synthetic_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError(path.string() + ": cannot open file");
    std::array<char, 6> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kSyntheticCacheMagic) {
        throw FormatError(path.string() + ": expected magic LRSYN1 at offset 0");
    }
    const auto count = detail::read_le<std::uint64_t>(is, path);
    const auto dim = detail::read_le<std::uint64_t>(is, path);
    ExampleSet out(count);
    for (auto& ex : out) {
        ex.features.resize(dim);
        for (auto& v : ex.features) v = detail::read_le<double>(is, path);
    }
    for (auto& ex : out) ex.label = detail::read_le<std::uint8_t>(is, path);
    return out;
}

// ---------------------------------------------------------------------------
// Task split
// ---------------------------------------------------------------------------

struct TaskSpec {
    TaskId task_id = 0;
    std::vector<Label> class_set;
    std::vector<std::size_t> train_count; // parallel to class_set
    std::vector<std::size_t> test_count;  // parallel to class_set; empty until test data is attached
};

/// Ordered tasks with their shuffled training data and held-out test sets.
/// Task t (1-based) lives at index t - 1.
class TaskStream {
public:
    TaskStream() = default;
    TaskStream(std::vector<TaskSpec> tasks, std::vector<ExampleSet> train, std::size_t batch_size, std::uint64_t seed)
        : tasks_(std::move(tasks)), train_(std::move(train)), test_(train_.size()), batch_size_(batch_size),
          seed_(seed) {}

    std::size_t num_tasks() const { return tasks_.size(); }
    std::size_t batch_size() const { return batch_size_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    const TaskSpec& task(TaskId t) const { return tasks_.at(index(t)); }
    const ExampleSet& train(TaskId t) const { return train_.at(index(t)); }
    const ExampleSet& test(TaskId t) const { return test_.at(index(t)); }

    std::size_t num_batches(TaskId t) const {
        return (train(t).size() + batch_size_ - 1) / batch_size_;
    }

    /// The b-th batch of task t; the final batch may be short.
    std::span<const Example> batch(TaskId t, std::size_t b) const {
        const auto& data = train(t);
        const std::size_t begin = b * batch_size_;
        if (begin >= data.size()) throw InvalidArgument("batch index out of range");
        const std::size_t len = std::min(batch_size_, data.size() - begin);
        return std::span<const Example>(data).subspan(begin, len);
    }

    /// Total number of classes across all tasks.
    std::size_t num_classes() const {
        std::size_t n = 0;
        for (const auto& t : tasks_) n += t.class_set.size();
        return n;
    }

    /// Copy of this stream with per-task test sets drawn from `test_data`.
    /// `per_class_cap` limits the number of test examples per class.
    TaskStream with_test_data(const ExampleSet& test_data, std::optional<std::size_t> per_class_cap = {}) const {
        TaskStream out = *this;
        std::map<Label, std::size_t> taken;
        for (std::size_t t = 0; t < tasks_.size(); ++t) {
            auto& spec = out.tasks_[t];
            auto& set = out.test_[t];
            set.clear();
            spec.test_count.assign(spec.class_set.size(), 0);
            for (const auto& ex : test_data) {
                const auto it = std::find(spec.class_set.begin(), spec.class_set.end(), ex.label);
                if (it == spec.class_set.end()) continue;
                const auto c = static_cast<std::size_t>(it - spec.class_set.begin());
                if (per_class_cap && spec.test_count[c] >= *per_class_cap) continue;
                ++spec.test_count[c];
                Example copy = ex;
                copy.task_id = spec.task_id;
                set.push_back(std::move(copy));
            }
        }
        return out;
    }

private:
    std::size_t index(TaskId t) const {
        if (t < 1 || static_cast<std::size_t>(t) > tasks_.size()) {
            throw InvalidArgument("task id " + std::to_string(t) + " out of range [1, " +
                                  std::to_string(tasks_.size()) + "]");
        }
        return static_cast<std::size_t>(t - 1);
    }

    std::vector<TaskSpec> tasks_;
    std::vector<ExampleSet> train_;
    std::vector<ExampleSet> test_;
    std::size_t batch_size_ = 1;
    std::uint64_t seed_ = 0;
};

/// Per-class training counts for one task. With lambda = 0 the budget is split
/// evenly (remainder to the lowest classes); otherwise the first class receives
/// round(lambda * n2), n2 being the second class's balanced share.
inline std::vector<std::size_t> class_budget(std::size_t classes_per_task, std::size_t train_per_task,
                                             double lambda) {
    std::vector<std::size_t> counts(classes_per_task, train_per_task / classes_per_task);
    for (std::size_t c = 0; c < train_per_task % classes_per_task; ++c) ++counts[c];
    if (lambda > 0.0 && classes_per_task >= 2) {
        counts[0] = static_cast<std::size_t>(std::lround(lambda * static_cast<double>(counts[1])));
    }
    return counts;
}

inline TaskStream split_stream(const ExampleSet& dataset, std::size_t num_tasks, std::size_t classes_per_task,
                               std::size_t train_per_task, double lambda, std::size_t batch_size,
                               std::uint64_t seed) {
    if (num_tasks == 0 || classes_per_task == 0) throw InvalidArgument("need at least one task and one class per task");
    if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
    if (train_per_task < classes_per_task) throw InvalidArgument("train_per_task smaller than classes_per_task");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw InvalidArgument("lambda must lie in [0, 1)");

    std::map<Label, std::vector<std::size_t>> by_class;
    for (std::size_t n = 0; n < dataset.size(); ++n) by_class[dataset[n].label].push_back(n);
    if (num_tasks * classes_per_task > by_class.size()) {
        throw InvalidArgument("requested " + std::to_string(num_tasks * classes_per_task) + " classes but dataset has " +
                              std::to_string(by_class.size()));
    }

    const auto budget = class_budget(classes_per_task, train_per_task, lambda);
    std::vector<Label> labels;
    for (const auto& [label, _] : by_class) labels.push_back(label);

    std::ostringstream deficit;
    for (std::size_t k = 0; k < num_tasks * classes_per_task; ++k) {
        const auto need = budget[k % classes_per_task];
        const auto have = by_class[labels[k]].size();
        if (have < need) deficit << " class " << labels[k] << ": need " << need << ", have " << have << ";";
    }
    if (!deficit.str().empty()) throw InvalidArgument("insufficient examples per class:" + deficit.str());

    Rng rng(seed);
    std::vector<TaskSpec> specs;
    std::vector<ExampleSet> train;
    for (std::size_t t = 0; t < num_tasks; ++t) {
        TaskSpec spec;
        spec.task_id = static_cast<TaskId>(t + 1);
        ExampleSet data;
        for (std::size_t c = 0; c < classes_per_task; ++c) {
            const Label label = labels[t * classes_per_task + c];
            auto pool = by_class[label];
            std::shuffle(pool.begin(), pool.end(), rng);
            spec.class_set.push_back(label);
            spec.train_count.push_back(budget[c]);
            for (std::size_t n = 0; n < budget[c]; ++n) {
                Example ex = dataset[pool[n]];
                ex.task_id = spec.task_id;
                data.push_back(std::move(ex));
            }
        }
        std::shuffle(data.begin(), data.end(), rng);
        specs.push_back(std::move(spec));
        train.push_back(std::move(data));
    }
    return TaskStream(std::move(specs), std::move(train), batch_size, seed);
}

} // namespace adaer
