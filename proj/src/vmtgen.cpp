#include "pmpl/vmtgen.hpp"

#include "pmpl/errors.hpp"
#include "spmd.hpp"

namespace pmpl {

std::vector<u64> DealerCrossterm::crossterm(int me, int peer, const std::vector<u64>& u_mine,
                                            const std::vector<u64>& v_mine) {
    auto pair_key = std::make_pair(std::min(me, peer), std::max(me, peer));
    std::unique_lock<std::mutex> lk(mu_);
    // sequential calls of the same pair get distinct entries, so a fast
    // party cannot poison a batch its peer has not collected yet
    u64 round = round_[{pair_key.first * 4 + pair_key.second, me}]++;
    auto key = std::make_pair(static_cast<int>(pair_key.first * 4 + pair_key.second),
                              static_cast<int>(round & 0x7fffffff));
    Pending& p = inflight_[key];
    p.u[me] = &u_mine;
    p.v[me] = &v_mine;
    p.submitted[me] = true;
    p.present++;
    if (p.submitted[pair_key.first] && p.submitted[pair_key.second]) {
        int a = pair_key.first, b = pair_key.second;
        size_t n = p.u[a]->size();
        if (p.v[b]->size() != n || p.u[b]->size() != n)
            throw ArgumentError("crossterm batch size mismatch");
        p.share[a].resize(n);
        p.share[b].resize(n);
        for (size_t i = 0; i < n; ++i) {
            u64 t = ring_.reduce((*p.u[a])[i] * (*p.v[b])[i] + (*p.u[b])[i] * (*p.v[a])[i]);
            u64 sa = rng_.next_ring(ring_);
            p.share[a][i] = sa;
            p.share[b][i] = ring_.sub(t, sa);
        }
        p.ready[a] = p.ready[b] = true;
        cv_.notify_all();
    }
    cv_.wait(lk, [&] { return inflight_[key].ready[me]; });
    Pending& q = inflight_[key];
    std::vector<u64> mine = std::move(q.share[me]);
    if (--q.present == 0) inflight_.erase(key);
    return mine;
}

std::vector<VmtItem> interactive_vmt(Transport& net, const PublicMatrix& pm, CounterRng& rng,
                                     CrosstermOracle& oracle, size_t count, u32 tag_base) {
    const Ring rg = pm.ring();
    std::vector<u64> u_mine(count), v_mine(count);
    for (auto& x : u_mine) x = rng.next_ring(rg);
    for (auto& x : v_mine) x = rng.next_ring(rg);
    return interactive_vmt_with(net, pm, rng, oracle, u_mine, v_mine, tag_base);
}

std::vector<VmtItem> interactive_vmt_with(Transport& net, const PublicMatrix& pm, CounterRng& rng,
                                          CrosstermOracle& oracle, const std::vector<u64>& u_mine,
                                          const std::vector<u64>& v_mine, u32 tag_base) {
    const int me = net.self();
    const Ring rg = pm.ring();
    const std::vector<int> live{0, 1, 2};
    const size_t count = u_mine.size();

    // one round shares everyone's u_i and v_i; summing the sharings yields <u>, <v>
    std::vector<u64> uv = u_mine;
    uv.insert(uv.end(), v_mine.begin(), v_mine.end());
    auto uv_sum = detail::reshare_sum(net, tag_base, pm, uv, live, rng);

    // cross terms with both neighbours; pairs are visited in a global order
    // so the blocking rendezvous cannot cycle
    int next = (me + 1) % 3, prev = (me + 2) % 3;
    auto pair_key = [&](int peer) {
        return std::make_pair(std::min(me, peer), std::max(me, peer));
    };
    std::vector<u64> cross_next, cross_prev;
    if (pair_key(next) < pair_key(prev)) {
        cross_next = oracle.crossterm(me, next, u_mine, v_mine);
        cross_prev = oracle.crossterm(me, prev, u_mine, v_mine);
    } else {
        cross_prev = oracle.crossterm(me, prev, u_mine, v_mine);
        cross_next = oracle.crossterm(me, next, u_mine, v_mine);
    }

    std::vector<u64> h_mine(count);
    for (size_t i = 0; i < count; ++i)
        h_mine[i] = rg.reduce(u_mine[i] * v_mine[i] + cross_next[i] + cross_prev[i]);

    auto h_sum = detail::reshare_sum(net, tag_base + 1, pm, h_mine, live, rng);

    std::vector<VmtItem> out(count);
    for (size_t i = 0; i < count; ++i) {
        VmtItem& t = out[i];
        t.u = uv_sum.main[i];
        t.v = uv_sum.main[count + i];
        t.h = h_sum.main[i];
        if (me == 0) {
            t.u_alt = uv_sum.alt[i];
            t.v_alt = uv_sum.alt[count + i];
            t.h_alt = h_sum.alt[i];
        }
    }
    return out;
}

}  // namespace pmpl
