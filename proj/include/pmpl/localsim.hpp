#pragma once

#include <functional>

#include "pmpl/train.hpp"

namespace pmpl {

struct SimOutcome {
    std::optional<Model> model;  // present when training completed and P0 revealed
    std::array<ChannelStats, 3> stats;
};

// Drives all three party engines on separate threads over an in-process
// mesh. Every party sees the full cleartext dataset (it shares only the
// rows it owns); the pools must have been dealt beforehand.
SimOutcome run_local_sim(const DomainParams& params, const Dataset& full, const TrainConfig& cfg,
                         const std::string& pool_dir, u64 engine_seed);

// Same harness for arbitrary protocol snippets (benchmarks, verification).
std::array<ChannelStats, 3> run_three_engines(const DomainParams& params,
                                              const std::string& pool_dir, u64 engine_seed,
                                              const std::function<void(Engine&)>& body);

}  // namespace pmpl
