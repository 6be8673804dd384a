#pragma once

// Internal SPMD helpers shared by the online engine and the interactive
// triplet generator.

#include <vector>

#include "pmpl/transport.hpp"
#include "pmpl/vsss.hpp"

namespace pmpl::detail {

struct ReshareOut {
    std::vector<u64> main;  // share at the caller's own index
    std::vector<u64> alt;   // index-3 share (privileged party only)
};

// Every party in `live` contributes a vector of secrets of equal length n;
// each secret is Protocol-1 shared and the sharings are summed index-wise.
// One round. The result reconstructs to the sum of all contributions.
ReshareOut reshare_sum(Transport& net, u32 tag, const PublicMatrix& pm,
                       const std::vector<u64>& my_secrets, const std::vector<int>& live,
                       CounterRng& rng);

}  // namespace pmpl::detail
