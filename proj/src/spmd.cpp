#include "spmd.hpp"

#include <algorithm>

#include "pmpl/errors.hpp"

namespace pmpl::detail {

ReshareOut reshare_sum(Transport& net, u32 tag, const PublicMatrix& pm,
                       const std::vector<u64>& my_secrets, const std::vector<int>& live,
                       CounterRng& rng) {
    const int me = net.self();
    const Ring rg = pm.ring();
    const size_t n = my_secrets.size();
    const bool p0_live = std::find(live.begin(), live.end(), 0) != live.end();

    // shares of my own contributions, by index
    std::array<std::vector<u64>, 4> mine;
    for (auto& v : mine) v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        ShareQuad q = share_value(pm, my_secrets[i], rng);
        for (int k = 0; k < 4; ++k) mine[k][i] = q[k];
    }

    std::map<int, Frame> out;
    for (int peer : live) {
        if (peer == me) continue;
        Frame f;
        if (peer == 0) {
            f.words = mine[0];
            f.words.insert(f.words.end(), mine[3].begin(), mine[3].end());
        } else {
            f.words = mine[peer];
        }
        f.bits = f.words.size() * rg.ell();
        out.emplace(peer, std::move(f));
    }
    std::set<int> expect;
    for (int peer : live)
        if (peer != me) expect.insert(peer);
    auto in = net.exchange(tag, FrameKind::reshare, std::move(out), expect);

    ReshareOut acc;
    acc.main = mine[me];
    if (me == 0 && p0_live) acc.alt = mine[3];
    for (auto& [src, f] : in) {
        if (me == 0) {
            if (f.words.size() != 2 * n) throw ProtocolDesync("reshare frame size mismatch");
            for (size_t i = 0; i < n; ++i) {
                acc.main[i] = rg.add(acc.main[i], f.words[i]);
                acc.alt[i] = rg.add(acc.alt[i], f.words[n + i]);
            }
        } else {
            if (f.words.size() != n) throw ProtocolDesync("reshare frame size mismatch");
            for (size_t i = 0; i < n; ++i) acc.main[i] = rg.add(acc.main[i], f.words[i]);
        }
    }
    return acc;
}

}  // namespace pmpl::detail
