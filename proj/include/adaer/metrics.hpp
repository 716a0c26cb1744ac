#pragma once

// Result matrix R (R(i, j) = test accuracy on task j after learning task i,
// both 1-based) and the four continual-learning summary metrics.

#include <adaer/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaer {

class ResultMatrix {
public:
    explicit ResultMatrix(std::size_t num_tasks)
        : T_(num_tasks), values_(num_tasks * num_tasks, 0.0), recorded_(num_tasks, false), best_(num_tasks, 0.0) {
        if (num_tasks == 0) throw InvalidArgument("result matrix needs at least one task");
    }

    std::size_t num_tasks() const { return T_; }

    /// Stores the accuracies measured after learning task i. Re-recording a
    /// row overwrites it; the per-task best accuracy keeps the running max.
    void record_row(std::size_t i, std::span<const double> accuracies) {
        check_index(i);
        if (accuracies.size() != T_) {
            throw InvalidArgument("row has " + std::to_string(accuracies.size()) + " entries, expected " +
                                  std::to_string(T_));
        }
        for (double a : accuracies) {
            if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("accuracy outside [0, 1]: " + std::to_string(a));
        }
        for (std::size_t j = 0; j < T_; ++j) {
            values_[(i - 1) * T_ + j] = accuracies[j];
            best_[j] = any_recorded() ? std::max(best_[j], accuracies[j]) : accuracies[j];
        }
        recorded_[i - 1] = true;
    }

    void set_baseline(std::span<const double> accuracies) {
        if (accuracies.size() != T_) throw InvalidArgument("baseline length must equal the task count");
        for (double a : accuracies) {
            if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("baseline accuracy outside [0, 1]");
        }
        baseline_ = std::vector<double>(accuracies.begin(), accuracies.end());
    }

    double at(std::size_t i, std::size_t j) const {
        check_index(i);
        check_index(j);
        if (!recorded_[i - 1]) throw IncompleteRunError("row " + std::to_string(i) + " has not been recorded");
        return values_[(i - 1) * T_ + (j - 1)];
    }

    bool has_row(std::size_t i) const {
        check_index(i);
        return recorded_[i - 1];
    }

    bool complete() const { return std::all_of(recorded_.begin(), recorded_.end(), [](bool r) { return r; }); }

    /// F_j: best accuracy on task j over all recorded rows.
    double best(std::size_t j) const {
        check_index(j);
        if (!any_recorded()) throw IncompleteRunError("no rows recorded");
        return best_[j - 1];
    }

    const std::optional<std::vector<double>>& baseline() const { return baseline_; }

private:
    void check_index(std::size_t i) const {
        if (i < 1 || i > T_) {
            throw InvalidArgument("task index " + std::to_string(i) + " out of range [1, " + std::to_string(T_) + "]");
        }
    }

    bool any_recorded() const { return std::any_of(recorded_.begin(), recorded_.end(), [](bool r) { return r; }); }

    std::size_t T_;
    std::vector<double> values_;
    std::vector<bool> recorded_;
    std::vector<double> best_;
    std::optional<std::vector<double>> baseline_;
};

namespace detail {

inline void require_complete(const ResultMatrix& m) {
    if (!m.complete()) throw IncompleteRunError("result matrix is incomplete");
}

inline void require_transfer_defined(const ResultMatrix& m) {
    if (m.num_tasks() < 2) throw UndefinedMetricError("transfer and forgetting metrics need at least two tasks");
}

} // namespace detail

/// Mean accuracy over all tasks after learning the last one.
inline double average_accuracy(const ResultMatrix& m) {
    const auto T = m.num_tasks();
    if (!m.has_row(T)) throw IncompleteRunError("final row has not been recorded");
    double sum = 0.0;
    for (std::size_t i = 1; i <= T; ++i) sum += m.at(T, i);
    return sum / static_cast<double>(T);
}

/// Mean drop from the best accuracy ever reached on each earlier task; >= 0.
inline double forgetting(const ResultMatrix& m) {
    detail::require_transfer_defined(m);
    detail::require_complete(m);
    const auto T = m.num_tasks();
    double sum = 0.0;
    for (std::size_t i = 1; i < T; ++i) sum += m.best(i) - m.at(T, i);
    return sum / static_cast<double>(T - 1);
}

inline double backward_transfer(const ResultMatrix& m) {
    detail::require_transfer_defined(m);
    detail::require_complete(m);
    const auto T = m.num_tasks();
    double sum = 0.0;
    for (std::size_t i = 1; i < T; ++i) sum += m.at(T, i) - m.at(i, i);
    return sum / static_cast<double>(T - 1);
}

/// Mean of R(i, i) - b_i over i < T, where b is the accuracy at initialization.
inline double forward_transfer(const ResultMatrix& m) {
    detail::require_transfer_defined(m);
    detail::require_complete(m);
    if (!m.baseline()) throw IncompleteRunError("initialization baseline has not been measured");
    const auto& b = *m.baseline();
    const auto T = m.num_tasks();
    double sum = 0.0;
    for (std::size_t i = 1; i < T; ++i) sum += m.at(i, i) - b[i - 1];
    return sum / static_cast<double>(T - 1);
}

struct MetricSummary {
    double acc = 0.0;
    double forget = 0.0;
    double bwt = 0.0;
    double fwt = 0.0;
};

/// All four metrics; the transfer metrics are reported as 0 for single-task runs.
inline MetricSummary summarize(const ResultMatrix& m) {
    MetricSummary s;
    s.acc = average_accuracy(m);
    if (m.num_tasks() >= 2) {
        s.forget = forgetting(m);
        s.bwt = backward_transfer(m);
        s.fwt = m.baseline() ? forward_transfer(m) : 0.0;
    }
    return s;
}

} // namespace adaer
