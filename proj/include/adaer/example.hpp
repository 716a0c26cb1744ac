#pragma once

#include <vector>

namespace adaer {

using Label = int;
using TaskId = int; // 1-based

/// One labeled training or test item.
struct Example {
    std::vector<double> features;
    Label label = 0;
    TaskId task_id = 0;

    bool operator==(const Example&) const = default;
};

using ExampleSet = std::vector<Example>;

} // namespace adaer
