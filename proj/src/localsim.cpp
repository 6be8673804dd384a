#include "pmpl/localsim.hpp"

#include <future>

namespace pmpl {

SimOutcome run_local_sim(const DomainParams& params, const Dataset& full, const TrainConfig& cfg,
                         const std::string& pool_dir, u64 engine_seed) {
    auto mesh = make_inproc_mesh();
    struct PartyOut {
        std::optional<Model> model;
        ChannelStats stats;
    };
    std::array<std::future<PartyOut>, 3> futs;
    for (int party = 0; party < 3; ++party) {
        futs[party] = std::async(std::launch::async, [&, party]() -> PartyOut {
            try {
                PoolReader pool(pool_file_name(pool_dir, party));
                Engine e(party, params, *mesh[party], &pool, engine_seed);
                e.verify_pool();
                SharedDataset ds = share_dataset(e, full);
                auto model = train_party(e, ds, cfg);
                return {std::move(model), e.net().stats()};
            } catch (...) {
                mesh[party]->abort_session();
                throw;
            }
        });
    }
    SimOutcome out;
    for (int party = 0; party < 3; ++party) {
        PartyOut po = futs[party].get();
        out.stats[party] = po.stats;
        if (po.model) out.model = std::move(po.model);
    }
    return out;
}

std::array<ChannelStats, 3> run_three_engines(const DomainParams& params,
                                              const std::string& pool_dir, u64 engine_seed,
                                              const std::function<void(Engine&)>& body) {
    auto mesh = make_inproc_mesh();
    std::array<std::future<ChannelStats>, 3> futs;
    for (int party = 0; party < 3; ++party) {
        futs[party] = std::async(std::launch::async, [&, party] {
            try {
                std::optional<PoolReader> pool;
                if (!pool_dir.empty()) pool.emplace(pool_file_name(pool_dir, party));
                Engine e(party, params, *mesh[party], pool ? &*pool : nullptr, engine_seed);
                body(e);
                return e.net().stats();
            } catch (...) {
                mesh[party]->abort_session();
                throw;
            }
        });
    }
    return {futs[0].get(), futs[1].get(), futs[2].get()};
}

}  // namespace pmpl
