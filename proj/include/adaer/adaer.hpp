#pragma once

#include <adaer/config.hpp>
#include <adaer/errors.hpp>
#include <adaer/example.hpp>
#include <adaer/harness.hpp>
#include <adaer/memory.hpp>
#include <adaer/metrics.hpp>
#include <adaer/nn.hpp>
#include <adaer/replay.hpp>
#include <adaer/results.hpp>
#include <adaer/rng.hpp>
#include <adaer/stream.hpp>
