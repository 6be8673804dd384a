#pragma once

#include <condition_variable>
#include <map>
#include <mutex>
#include <vector>

#include "pmpl/pool.hpp"
#include "pmpl/transport.hpp"
#include "pmpl/vsss.hpp"

namespace pmpl {

// Supplies additive shares of the pairwise cross terms u_i*v_j + u_j*v_i.
// The construction behind it is pluggable; the default is a dealer, which
// the protocol text explicitly allows. A cryptographic two-party backend
// can be slotted in without touching the callers.
class CrosstermOracle {
  public:
    virtual ~CrosstermOracle() = default;
    // Called by both members of the pair {me, peer}; blocks until the
    // counterpart has submitted, then returns this caller's additive share.
    virtual std::vector<u64> crossterm(int me, int peer, const std::vector<u64>& u_mine,
                                       const std::vector<u64>& v_mine) = 0;
};

// In-process dealer backend: matches the two submissions of a pair and
// splits u_i*v_j + u_j*v_i into two uniform additive shares.
class DealerCrossterm : public CrosstermOracle {
  public:
    DealerCrossterm(Ring ring, u64 seed) : ring_(ring), rng_(seed, 0, "crossterm") {}
    std::vector<u64> crossterm(int me, int peer, const std::vector<u64>& u_mine,
                               const std::vector<u64>& v_mine) override;

  private:
    struct Pending {
        std::array<const std::vector<u64>*, 3> u{}, v{};
        std::array<bool, 3> submitted{};
        std::array<std::vector<u64>, 3> share;
        std::array<bool, 3> ready{};
        int present = 0;
    };
    Ring ring_;
    CounterRng rng_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::pair<int, int>, Pending> inflight_;  // (pair id, round)
    std::map<std::pair<int, int>, u64> round_;         // (pair id, party)
};

// Protocol-4 interactive generation, run by all three parties over the
// transport. Each party contributes uniform u_i, v_i; the sharings are
// summed and h is assembled from local products plus oracle cross terms.
// Returns `count` party-local triples in consumption order.
std::vector<VmtItem> interactive_vmt(Transport& net, const PublicMatrix& pm, CounterRng& rng,
                                     CrosstermOracle& oracle, size_t count, u32 tag_base = 1u << 20);

// Same protocol with this party's contributions pinned (test hook).
std::vector<VmtItem> interactive_vmt_with(Transport& net, const PublicMatrix& pm, CounterRng& rng,
                                          CrosstermOracle& oracle, const std::vector<u64>& u_mine,
                                          const std::vector<u64>& v_mine, u32 tag_base = 1u << 20);

}  // namespace pmpl
