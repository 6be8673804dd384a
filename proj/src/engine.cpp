#include "pmpl/engine.hpp"

#include <algorithm>

#include "spmd.hpp"

namespace pmpl {

namespace {

// lane packing for single-bit payloads; uses `lanes` bits per word so that
// packed words stay inside the ring mask
std::vector<u64> pack_bits(const std::vector<u64>& words, unsigned lanes) {
    std::vector<u64> out((words.size() + lanes - 1) / lanes, 0);
    for (size_t i = 0; i < words.size(); ++i)
        out[i / lanes] |= (words[i] & 1) << (i % lanes);
    return out;
}

std::vector<u64> unpack_bits(const std::vector<u64>& packed, size_t n, unsigned lanes) {
    std::vector<u64> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = (packed[i / lanes] >> (i % lanes)) & 1;
    return out;
}

void xor_into(std::vector<u64>& dst, const std::vector<u64>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

}  // namespace

Engine::Engine(int party, DomainParams params, Transport& net, PoolReader* pool, u64 seed)
    : me_(party),
      params_(std::move(params)),
      ring_(params_.ell),
      codec_(Ring(params_.ell), params_.frac_bits),
      net_(&net),
      pool_(pool),
      rng_(seed, static_cast<unsigned>(party), "engine") {
    if (party < 0 || party > 2) throw ArgumentError("party index must be 0, 1, or 2");
    Coefficients solved = validate_matrix(params_.matrix);
    if (solved.packed() != params_.coef.packed())
        throw ValidationError({"coefficient bundle does not match the public matrix"});
}

std::vector<int> Engine::live_peers() const {
    std::vector<int> v;
    for (int p = 0; p < (mode_ == Mode::three_party ? 3 : 2); ++p)
        if (p != me_) v.push_back(p);
    return v;
}

void Engine::require_live() const {
    if (!is_live()) throw ArgumentError("party 2 has left the computation");
}

void Engine::verify_pool() {
    require_live();
    if (!pool_) throw ArgumentError("no preprocessing pool attached");
    Frame f;
    f.words.resize(4);
    const auto& fp = pool_->header().fingerprint;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 8; ++j) f.words[i] |= u64{fp[i * 8 + j]} << (8 * j);
    f.bits = 256;
    std::map<int, Frame> out;
    std::set<int> expect;
    for (int p : live_peers()) {
        out.emplace(p, f);
        expect.insert(p);
    }
    auto in = net_->exchange(next_tag(), FrameKind::pool_check, std::move(out), expect);
    for (auto& [src, g] : in)
        if (g.words != f.words)
            throw ProtocolDesync("pool fingerprints differ: pools come from different dealer runs");
}

void Engine::raise_drop() {
    if (mode_ == Mode::two_party_after_drop)
        throw ArgumentError("only one assistant party may drop out");
    mode_ = Mode::two_party_after_drop;
}

bool Engine::poll_peer_drop() {
    if (mode_ == Mode::three_party && me_ != 2 && net_->peer_gone(2)) {
        raise_drop();
        return true;
    }
    return false;
}

// ---------- local linear layer ----------

SharedMatrix Engine::add(const SharedMatrix& a, const SharedMatrix& b) const {
    SharedMatrix z;
    z.main = mat_add(ring_, a.main, b.main);
    if (me_ == 0) z.alt = mat_add(ring_, a.alt, b.alt);
    return z;
}

SharedMatrix Engine::sub(const SharedMatrix& a, const SharedMatrix& b) const {
    SharedMatrix z;
    z.main = mat_sub(ring_, a.main, b.main);
    if (me_ == 0) z.alt = mat_sub(ring_, a.alt, b.alt);
    return z;
}

SharedMatrix Engine::scale(u64 k, const SharedMatrix& a) const {
    SharedMatrix z;
    z.main = mat_scale(ring_, k, a.main);
    if (me_ == 0) z.alt = mat_scale(ring_, k, a.alt);
    return z;
}

SharedMatrix Engine::add_public(const SharedMatrix& a, u64 k) const {
    // a public constant enters as the sharing of (k, 0, 0): each index adds
    // phi(index)[0] * k
    SharedMatrix z = a;
    u64 dmain = ring_.mul(params_.matrix.rows[me_][0], k);
    for (auto& x : z.main.data()) x = ring_.add(x, dmain);
    if (me_ == 0) {
        u64 dalt = ring_.mul(params_.matrix.rows[3][0], k);
        for (auto& x : z.alt.data()) x = ring_.add(x, dalt);
    }
    return z;
}

SharedMatrix Engine::transpose(const SharedMatrix& a) const {
    SharedMatrix z;
    z.main = a.main.transposed();
    if (me_ == 0) z.alt = a.alt.transposed();
    return z;
}

SharedMatrix Engine::rows_subset(const SharedMatrix& a, const std::vector<size_t>& idx) const {
    SharedMatrix z;
    z.main = a.main.rows_subset(idx);
    if (me_ == 0) z.alt = a.alt.rows_subset(idx);
    return z;
}

// ---------- input distribution and openings ----------

SharedMatrix Engine::share_input(const RingMatrix& x) {
    require_live();
    MatrixSharing sh = share_matrix(params_.matrix, x, rng_);
    std::map<int, Frame> out;
    for (int peer : live_peers()) {
        Frame f;
        if (peer == 0) {
            f.words = sh.by_index[0].data();
            f.words.insert(f.words.end(), sh.by_index[3].data().begin(),
                           sh.by_index[3].data().end());
        } else {
            f.words = sh.by_index[peer].data();
        }
        f.bits = f.words.size() * ring_.ell();
        out.emplace(peer, std::move(f));
    }
    net_->exchange(next_tag(), FrameKind::input_share, std::move(out), {});
    SharedMatrix mine;
    mine.main = sh.by_index[me_];
    if (me_ == 0) mine.alt = sh.by_index[3];
    return mine;
}

SharedMatrix Engine::receive_input(int owner, size_t rows, size_t cols) {
    require_live();
    if (owner == me_) throw ArgumentError("owner must use share_input");
    auto in = net_->exchange(next_tag(), FrameKind::input_share, {}, {owner});
    auto& words = in.at(owner).words;
    size_t n = rows * cols;
    SharedMatrix z;
    if (me_ == 0) {
        if (words.size() != 2 * n) throw ProtocolDesync("input share frame size mismatch");
        z.main = RingMatrix(rows, cols, std::vector<u64>(words.begin(), words.begin() + n));
        z.alt = RingMatrix(rows, cols, std::vector<u64>(words.begin() + n, words.end()));
    } else {
        if (words.size() != n) throw ProtocolDesync("input share frame size mismatch");
        z.main = RingMatrix(rows, cols, std::move(words));
    }
    return z;
}

RingMatrix Engine::open_impl(const RingMatrix& main, const RingMatrix& alt, FrameKind kind) {
    require_live();
    const Coefficients& co = params_.coef;
    size_t n = main.size();
    RingMatrix out(main.rows(), main.cols());
    if (mode_ == Mode::three_party) {
        Frame f;
        f.words = main.data();
        f.bits = n * ring_.ell();
        std::map<int, Frame> to;
        std::set<int> expect;
        for (int p : live_peers()) {
            to.emplace(p, f);
            expect.insert(p);
        }
        auto in = net_->exchange(next_tag(), kind, std::move(to), expect);
        std::array<const std::vector<u64>*, 3> sh{};
        sh[me_] = &main.data();
        for (auto& [src, g] : in) {
            if (g.words.size() != n) throw ProtocolDesync("opening frame size mismatch");
            sh[src] = &g.words;
        }
        for (size_t i = 0; i < n; ++i)
            out[i] = ring_.reduce(co.c0 * (*sh[0])[i] + co.c1 * (*sh[1])[i] +
                                  co.c2 * (*sh[2])[i]);
    } else if (me_ == 0) {
        Frame f;
        f.words = main.data();
        f.words.insert(f.words.end(), alt.data().begin(), alt.data().end());
        f.bits = 2 * n * ring_.ell();
        auto in = net_->exchange(next_tag(), kind, {{1, std::move(f)}}, {1});
        auto& s1 = in.at(1).words;
        if (s1.size() != n) throw ProtocolDesync("opening frame size mismatch");
        for (size_t i = 0; i < n; ++i)
            out[i] = ring_.reduce(co.cp0 * main[i] + co.cp1 * s1[i] + co.cp3 * alt[i]);
    } else {
        Frame f;
        f.words = main.data();
        f.bits = n * ring_.ell();
        auto in = net_->exchange(next_tag(), kind, {{0, std::move(f)}}, {0});
        auto& w = in.at(0).words;
        if (w.size() != 2 * n) throw ProtocolDesync("opening frame size mismatch");
        for (size_t i = 0; i < n; ++i)
            out[i] = ring_.reduce(co.cp0 * w[i] + co.cp1 * main[i] + co.cp3 * w[n + i]);
    }
    return out;
}

RingMatrix Engine::open(const SharedMatrix& x) { return open_impl(x.main, x.alt, FrameKind::open); }

std::optional<RingMatrix> Engine::reveal_to_p0(const SharedMatrix& x) {
    require_live();
    const Coefficients& co = params_.coef;
    size_t n = x.main.size();
    if (me_ != 0) {
        Frame f;
        f.words = x.main.data();
        f.bits = n * ring_.ell();
        net_->exchange(next_tag(), FrameKind::reveal, {{0, std::move(f)}}, {});
        return std::nullopt;
    }
    std::set<int> expect{1};
    if (mode_ == Mode::three_party) expect.insert(2);
    auto in = net_->exchange(next_tag(), FrameKind::reveal, {}, expect);
    RingMatrix out(x.main.rows(), x.main.cols());
    auto& s1 = in.at(1).words;
    if (s1.size() != n) throw ProtocolDesync("reveal frame size mismatch");
    if (mode_ == Mode::three_party) {
        auto& s2 = in.at(2).words;
        for (size_t i = 0; i < n; ++i)
            out[i] = ring_.reduce(co.c0 * x.main[i] + co.c1 * s1[i] + co.c2 * s2[i]);
    } else {
        for (size_t i = 0; i < n; ++i)
            out[i] = ring_.reduce(co.cp0 * x.main[i] + co.cp1 * s1[i] + co.cp3 * x.alt[i]);
    }
    return out;
}

// ---------- preprocessed multiplicative layer ----------

SharedMatrix Engine::matmul(const SharedMatrix& x, const SharedMatrix& y) {
    require_live();
    if (!pool_) throw PreprocUnderflow("no preprocessing pool attached");
    size_t n = x.rows(), d = x.cols(), m = y.cols();
    if (y.rows() != d) throw ArgumentError("matmul shape mismatch");
    MatTripleItem t = pool_->next_matrix(n, d, m);

    RingMatrix e_main = mat_add(ring_, x.main, t.u), f_main = mat_add(ring_, y.main, t.v);
    RingMatrix e_alt, f_alt;
    if (me_ == 0) {
        e_alt = mat_add(ring_, x.alt, t.u_alt);
        f_alt = mat_add(ring_, y.alt, t.v_alt);
    }
    // one rendezvous opens both E and F
    RingMatrix joint_main(1, n * d + d * m), joint_alt;
    std::copy(e_main.data().begin(), e_main.data().end(), joint_main.data().begin());
    std::copy(f_main.data().begin(), f_main.data().end(), joint_main.data().begin() + n * d);
    if (me_ == 0) {
        joint_alt = RingMatrix(1, n * d + d * m);
        std::copy(e_alt.data().begin(), e_alt.data().end(), joint_alt.data().begin());
        std::copy(f_alt.data().begin(), f_alt.data().end(), joint_alt.data().begin() + n * d);
    }
    RingMatrix opened = open_impl(joint_main, joint_alt, FrameKind::open);
    RingMatrix e(n, d, std::vector<u64>(opened.data().begin(), opened.data().begin() + n * d));
    RingMatrix f(d, m, std::vector<u64>(opened.data().begin() + n * d, opened.data().end()));

    SharedMatrix z;
    z.main = mat_add(ring_, mat_sub(ring_, mat_mul(ring_, x.main, f), mat_mul(ring_, e, t.v)),
                     t.h);
    if (me_ == 0)
        z.alt = mat_add(ring_,
                        mat_sub(ring_, mat_mul(ring_, x.alt, f), mat_mul(ring_, e, t.v_alt)),
                        t.h_alt);
    return z;
}

SharedMatrix Engine::mul_elem(const SharedMatrix& x, const SharedMatrix& y) {
    require_live();
    if (!pool_) throw PreprocUnderflow("no preprocessing pool attached");
    if (!x.main.same_shape(y.main)) throw ArgumentError("elementwise product shape mismatch");
    size_t n = x.main.size();
    RingMatrix u(x.rows(), x.cols()), v(x.rows(), x.cols()), h(x.rows(), x.cols());
    RingMatrix ua, va, ha;
    if (me_ == 0) {
        ua = u;
        va = u;
        ha = u;
    }
    for (size_t i = 0; i < n; ++i) {
        VmtItem t = pool_->next_vmt();
        u[i] = t.u;
        v[i] = t.v;
        h[i] = t.h;
        if (me_ == 0) {
            ua[i] = t.u_alt;
            va[i] = t.v_alt;
            ha[i] = t.h_alt;
        }
    }
    RingMatrix e_main = mat_add(ring_, x.main, u), f_main = mat_add(ring_, y.main, v);
    RingMatrix e_alt, f_alt;
    if (me_ == 0) {
        e_alt = mat_add(ring_, x.alt, ua);
        f_alt = mat_add(ring_, y.alt, va);
    }
    RingMatrix joint_main(1, 2 * n), joint_alt;
    std::copy(e_main.data().begin(), e_main.data().end(), joint_main.data().begin());
    std::copy(f_main.data().begin(), f_main.data().end(), joint_main.data().begin() + n);
    if (me_ == 0) {
        joint_alt = RingMatrix(1, 2 * n);
        std::copy(e_alt.data().begin(), e_alt.data().end(), joint_alt.data().begin());
        std::copy(f_alt.data().begin(), f_alt.data().end(), joint_alt.data().begin() + n);
    }
    RingMatrix opened = open_impl(joint_main, joint_alt, FrameKind::open);

    SharedMatrix z;
    z.main = RingMatrix(x.rows(), x.cols());
    if (me_ == 0) z.alt = RingMatrix(x.rows(), x.cols());
    for (size_t i = 0; i < n; ++i) {
        u64 e = opened[i], f = opened[n + i];
        z.main[i] = ring_.reduce(x.main[i] * f - v[i] * e + h[i]);
        if (me_ == 0) z.alt[i] = ring_.reduce(x.alt[i] * f - va[i] * e + ha[i]);
    }
    return z;
}

SharedMatrix Engine::trunc(const SharedMatrix& z) {
    require_live();
    if (!pool_) throw PreprocUnderflow("no preprocessing pool attached");
    const Coefficients& co = params_.coef;
    size_t n = z.main.size();
    RingMatrix r(z.rows(), z.cols()), rp(z.rows(), z.cols());
    RingMatrix r_alt, rp_alt;
    if (me_ == 0) {
        r_alt = r;
        rp_alt = r;
    }
    for (size_t i = 0; i < n; ++i) {
        TruncPairItem p = pool_->next_trunc();
        r[i] = p.r;
        rp[i] = p.r_shift;
        if (me_ == 0) {
            r_alt[i] = p.r_alt;
            rp_alt[i] = p.r_shift_alt;
        }
    }
    RingMatrix zr = mat_sub(ring_, z.main, r);

    SharedMatrix out;
    if (me_ != 0) {
        Frame f;
        f.words = zr.data();
        f.bits = n * ring_.ell();
        net_->exchange(next_tag(), FrameKind::trunc, {{0, std::move(f)}}, {});
        out.main = std::move(rp);
        return out;
    }

    std::set<int> expect{1};
    if (mode_ == Mode::three_party) expect.insert(2);
    auto in = net_->exchange(next_tag(), FrameKind::trunc, {}, expect);
    auto& s1 = in.at(1).words;
    if (s1.size() != n) throw ProtocolDesync("truncation frame size mismatch");

    out.main = RingMatrix(z.rows(), z.cols());
    out.alt = std::move(rp_alt);
    unsigned fbits = params_.frac_bits;
    if (mode_ == Mode::three_party) {
        auto& s2 = in.at(2).words;
        u64 inv_c0 = ring_.inverse_odd(co.c0);
        for (size_t i = 0; i < n; ++i) {
            u64 w = ring_.reduce(co.c0 * zr[i] + co.c1 * s1[i] + co.c2 * s2[i]);
            out.main[i] = ring_.add(ring_.mul(ring_.shift_right_signed(w, fbits), inv_c0), rp[i]);
        }
    } else {
        RingMatrix zr_alt = mat_sub(ring_, z.alt, r_alt);
        u64 inv_cp0 = ring_.inverse_odd(co.cp0);
        for (size_t i = 0; i < n; ++i) {
            u64 w = ring_.reduce(co.cp0 * zr[i] + co.cp1 * s1[i] + co.cp3 * zr_alt[i]);
            out.main[i] =
                ring_.add(ring_.mul(ring_.shift_right_signed(w, fbits), inv_cp0), rp[i]);
        }
    }
    return out;
}

// ---------- share conversions ----------

AddMatrix Engine::v2a(const SharedMatrix& x) const {
    require_live();
    const Coefficients& co = params_.coef;
    AddMatrix a;
    if (mode_ == Mode::three_party) {
        u64 c = me_ == 0 ? co.c0 : (me_ == 1 ? co.c1 : co.c2);
        a.main = mat_scale(ring_, c, x.main);
    } else if (me_ == 0) {
        a.main = mat_scale(ring_, co.cp0, x.main);
        a.alt = mat_scale(ring_, co.cp3, x.alt);
    } else {
        a.main = mat_scale(ring_, co.cp1, x.main);
    }
    return a;
}

bool Engine::a2v_fast_path() const {
    const Coefficients& co = params_.coef;
    if (mode_ == Mode::three_party) return (co.c0 & co.c1 & co.c2 & 1) != 0;
    return (co.cp0 & co.cp1 & co.cp3 & 1) != 0;
}

SharedMatrix Engine::a2v(const AddMatrix& x) {
    require_live();
    const Coefficients& co = params_.coef;
    size_t rows = x.rows(), cols = x.cols(), n = x.main.size();
    SharedMatrix z;

    if (a2v_fast_path()) {
        if (mode_ == Mode::two_party_after_drop) {
            // coefficient division is fully local once P2 is gone
            if (me_ == 0) {
                z.main = mat_scale(ring_, ring_.inverse_odd(co.cp0), x.main);
                z.alt = mat_scale(ring_, ring_.inverse_odd(co.cp3), x.alt);
            } else {
                z.main = mat_scale(ring_, ring_.inverse_odd(co.cp1), x.main);
            }
            return z;
        }
        // 3PC: divide locally, rebuild the alternate share under a k-mask
        if (!pool_) throw PreprocUnderflow("no preprocessing pool attached");
        u64 c = me_ == 0 ? co.c0 : (me_ == 1 ? co.c1 : co.c2);
        z.main = mat_scale(ring_, ring_.inverse_odd(c), x.main);
        RingMatrix k(rows, cols), k_alt;
        if (me_ == 0) k_alt = k;
        for (size_t i = 0; i < n; ++i) {
            KShareItem ks = pool_->next_kshare();
            k[i] = ks.k;
            if (me_ == 0) k_alt[i] = ks.k_alt;
        }
        if (me_ != 0) {
            Frame f;
            f.words = mat_add(ring_, z.main, k).data();
            f.bits = n * ring_.ell();
            net_->exchange(next_tag(), FrameKind::alt_mask, {{0, std::move(f)}}, {});
        } else {
            auto in = net_->exchange(next_tag(), FrameKind::alt_mask, {}, {1, 2});
            auto& t1 = in.at(1).words;
            auto& t2 = in.at(2).words;
            if (t1.size() != n || t2.size() != n)
                throw ProtocolDesync("alt-mask frame size mismatch");
            z.alt = RingMatrix(rows, cols);
            for (size_t i = 0; i < n; ++i)
                z.alt[i] = ring_.reduce(co.a1 * t1[i] + co.a2 * t2[i] - k_alt[i]);
        }
        return z;
    }

    // general path: every live holder re-shares its addend and the sharings
    // are summed; P0 folds its two addends first
    std::vector<u64> mine = x.main.data();
    if (mode_ == Mode::two_party_after_drop && me_ == 0)
        for (size_t i = 0; i < n; ++i) mine[i] = ring_.add(mine[i], x.alt[i]);
    std::vector<int> live;
    for (int p = 0; p < (mode_ == Mode::three_party ? 3 : 2); ++p) live.push_back(p);
    auto acc = detail::reshare_sum(*net_, next_tag(), params_.matrix, mine, live, rng_);
    z.main = RingMatrix(rows, cols, std::move(acc.main));
    if (me_ == 0) z.alt = RingMatrix(rows, cols, std::move(acc.alt));
    return z;
}

std::vector<BoolMatrix> Engine::bool_share_addends(const AddMatrix& x) {
    size_t n = x.main.size();
    std::vector<int> live;
    for (int p = 0; p < addend_count(); ++p) live.push_back(p);

    // my addend: in 2PC the privileged party folds index 3 in first
    std::vector<u64> value = x.main.data();
    if (mode_ == Mode::two_party_after_drop && me_ == 0)
        for (size_t i = 0; i < n; ++i) value[i] = ring_.add(value[i], x.alt[i]);

    // draw a mask word per element for every other live party
    std::map<int, Frame> out;
    std::vector<u64> self = value;
    for (int peer : live) {
        if (peer == me_) continue;
        Frame f;
        f.words.resize(n);
        for (size_t i = 0; i < n; ++i) {
            f.words[i] = rng_.next_ring(ring_);
            self[i] ^= f.words[i];
        }
        f.bits = n * ring_.ell();
        out.emplace(peer, std::move(f));
    }
    std::set<int> expect;
    for (int p : live)
        if (p != me_) expect.insert(p);
    auto in = net_->exchange(next_tag(), FrameKind::bool_share, std::move(out), expect);

    std::vector<BoolMatrix> shares(addend_count());
    for (int p : live) {
        BoolMatrix& bm = shares[p];
        bm.rows = x.rows();
        bm.cols = x.cols();
        if (p == me_) {
            bm.words = self;
        } else {
            if (in.at(p).words.size() != n) throw ProtocolDesync("bool share size mismatch");
            bm.words = std::move(in.at(p).words);
        }
    }
    return shares;
}

void Engine::bool_and_layer(const std::vector<const BoolMatrix*>& lhs,
                            const std::vector<const BoolMatrix*>& rhs,
                            std::vector<BoolMatrix*> out) {
    if (!pool_) throw PreprocUnderflow("no preprocessing pool attached");
    bool three = mode_ == Mode::three_party;
    size_t total = 0;
    for (auto* m : lhs) total += m->size();

    std::vector<u64> ua(total), va(total), wa(total);
    std::vector<u64> d(total), e(total);
    size_t off = 0;
    for (size_t g = 0; g < lhs.size(); ++g) {
        for (size_t i = 0; i < lhs[g]->size(); ++i) {
            BoolTripleItem t = pool_->next_booltriple(three);
            ua[off] = t.a;
            va[off] = t.b;
            wa[off] = t.c;
            d[off] = lhs[g]->words[i] ^ t.a;
            e[off] = rhs[g]->words[i] ^ t.b;
            ++off;
        }
    }

    Frame f;
    f.words = d;
    f.words.insert(f.words.end(), e.begin(), e.end());
    f.bits = 2 * total * ring_.ell();
    std::map<int, Frame> to;
    std::set<int> expect;
    for (int p : live_peers()) {
        to.emplace(p, f);
        expect.insert(p);
    }
    auto in = net_->exchange(next_tag(), FrameKind::bool_open, std::move(to), expect);
    for (auto& [src, g] : in) {
        if (g.words.size() != 2 * total) throw ProtocolDesync("bool open size mismatch");
        for (size_t i = 0; i < total; ++i) {
            d[i] ^= g.words[i];
            e[i] ^= g.words[total + i];
        }
    }

    off = 0;
    for (size_t g = 0; g < lhs.size(); ++g) {
        BoolMatrix& z = *out[g];
        z.rows = lhs[g]->rows;
        z.cols = lhs[g]->cols;
        z.words.resize(lhs[g]->size());
        for (size_t i = 0; i < z.words.size(); ++i) {
            u64 zz = wa[off] ^ (d[off] & va[off]) ^ (e[off] & ua[off]);
            if (me_ == 0) zz ^= d[off] & e[off];
            z.words[i] = zz & ring_.mask();
            ++off;
        }
    }
}

BoolMatrix Engine::bool_add(const BoolMatrix& a, const BoolMatrix& b) {
    unsigned ell = ring_.ell();
    BoolMatrix p, g;
    p.rows = a.rows;
    p.cols = a.cols;
    p.words.resize(a.size());
    for (size_t i = 0; i < a.size(); ++i) p.words[i] = a.words[i] ^ b.words[i];
    bool_and_layer({&a}, {&b}, {&g});

    for (unsigned shift = 1; shift < ell; shift <<= 1) {
        BoolMatrix gs = g, ps = p;
        for (auto& w : gs.words) w = (w << shift) & ring_.mask();
        for (auto& w : ps.words) w = (w << shift) & ring_.mask();
        bool last = (shift << 1) >= ell;
        if (last) {
            BoolMatrix t;
            bool_and_layer({&p}, {&gs}, {&t});
            for (size_t i = 0; i < g.size(); ++i) g.words[i] ^= t.words[i];
        } else {
            BoolMatrix t1, t2;
            bool_and_layer({&p, &p}, {&gs, &ps}, {&t1, &t2});
            for (size_t i = 0; i < g.size(); ++i) g.words[i] ^= t1.words[i];
            p.words = std::move(t2.words);
        }
    }

    BoolMatrix s;
    s.rows = a.rows;
    s.cols = a.cols;
    s.words.resize(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        s.words[i] = (a.words[i] ^ b.words[i] ^ (g.words[i] << 1)) & ring_.mask();
    return s;
}

u64 Engine::msb_triple_words(unsigned ell, int addend_count) {
    unsigned levels = 0;
    for (unsigned shift = 1; shift < ell; shift <<= 1) ++levels;
    return static_cast<u64>(addend_count - 1) * (2 * levels);
}

BoolMatrix Engine::msb(const AddMatrix& x) {
    require_live();
    auto addends = bool_share_addends(x);
    BoolMatrix acc = std::move(addends[0]);
    for (size_t i = 1; i < addends.size(); ++i) acc = bool_add(acc, addends[i]);
    unsigned top = ring_.ell() - 1;
    for (auto& w : acc.words) w = (w >> top) & 1;
    return acc;
}

BoolMatrix Engine::bool_not(const BoolMatrix& b) const {
    BoolMatrix z = b;
    if (me_ == 0)
        for (auto& w : z.words) w ^= 1;
    return z;
}

BoolMatrix Engine::bool_and_bits(const BoolMatrix& a, const BoolMatrix& b) {
    require_live();
    unsigned lanes = ring_.ell();
    BoolMatrix pa, pb;
    pa.rows = pb.rows = 1;
    pa.cols = pb.cols = (a.size() + lanes - 1) / lanes;
    pa.words = pack_bits(a.words, lanes);
    pb.words = pack_bits(b.words, lanes);
    BoolMatrix pz;
    bool_and_layer({&pa}, {&pb}, {&pz});
    BoolMatrix z;
    z.rows = a.rows;
    z.cols = a.cols;
    z.words = unpack_bits(pz.words, a.size(), lanes);
    return z;
}

AddMatrix Engine::bit2a(const BoolMatrix& b) {
    require_live();
    if (!pool_) throw PreprocUnderflow("no preprocessing pool attached");
    bool three = mode_ == Mode::three_party;
    size_t n = b.size();
    std::vector<u64> rb(n), ra(n);
    for (size_t i = 0; i < n; ++i) {
        DaBitItem d = pool_->next_dabit(three);
        ra[i] = d.arith;
        rb[i] = d.boolean;
    }
    // open the masked bits, packed
    unsigned lanes = ring_.ell();
    std::vector<u64> masked(n);
    for (size_t i = 0; i < n; ++i) masked[i] = (b.words[i] ^ rb[i]) & 1;
    Frame f;
    f.words = pack_bits(masked, lanes);
    f.bits = n;
    std::map<int, Frame> to;
    std::set<int> expect;
    for (int p : live_peers()) {
        to.emplace(p, f);
        expect.insert(p);
    }
    auto in = net_->exchange(next_tag(), FrameKind::bit_open, std::move(to), expect);
    std::vector<u64> packed = f.words;
    for (auto& [src, g] : in) {
        if (g.words.size() != packed.size()) throw ProtocolDesync("bit open size mismatch");
        xor_into(packed, g.words);
    }
    std::vector<u64> pub = unpack_bits(packed, n, lanes);

    // [b] = m + [r] - 2 m [r], with the public m added by the leader
    AddMatrix out;
    out.main = RingMatrix(b.rows, b.cols);
    if (me_ == 0 && mode_ == Mode::two_party_after_drop) out.alt = RingMatrix(b.rows, b.cols);
    for (size_t i = 0; i < n; ++i) {
        u64 m = pub[i];
        u64 v = ring_.reduce(ra[i] * (1 - 2 * m));
        if (me_ == 0) v = ring_.add(v, m);
        out.main[i] = v;
    }
    return out;
}

// ---------- activations ----------

SharedMatrix Engine::relu(const SharedMatrix& x, SharedMatrix* gate_out) {
    require_live();
    AddMatrix a = v2a(x);
    BoolMatrix sign = msb(a);
    AddMatrix gate_add = bit2a(bool_not(sign));
    SharedMatrix gate = a2v(gate_add);
    SharedMatrix out = mul_elem(gate, x);
    if (gate_out) *gate_out = std::move(gate);
    return out;
}

namespace {
template <typename M>
M stack_two(const M& a, const M& b);

template <>
RingMatrix stack_two(const RingMatrix& a, const RingMatrix& b) {
    RingMatrix z(a.rows() + b.rows(), a.cols() ? a.cols() : b.cols());
    std::copy(a.data().begin(), a.data().end(), z.data().begin());
    std::copy(b.data().begin(), b.data().end(), z.data().begin() + a.size());
    return z;
}
}  // namespace

SharedMatrix Engine::sigmoid(const SharedMatrix& x) {
    require_live();
    u64 half = codec_.encode(0.5);
    SharedMatrix xp = add_public(x, half);
    SharedMatrix xm = add_public(x, ring_.neg(half));

    // both comparisons ride one adder-circuit pass
    AddMatrix both;
    AddMatrix ap = v2a(xp), am = v2a(xm);
    both.main = stack_two(ap.main, am.main);
    if (!ap.alt.empty()) both.alt = stack_two(ap.alt, am.alt);
    BoolMatrix signs = msb(both);

    size_t n = x.main.size();
    BoolMatrix b1, b2;
    b1.rows = b2.rows = x.rows();
    b1.cols = b2.cols = x.cols();
    b1.words.assign(signs.words.begin(), signs.words.begin() + n);
    b2.words.assign(signs.words.begin() + n, signs.words.end());

    // gate = (1 xor b1) and b2 selects the linear segment
    BoolMatrix gate = bool_and_bits(bool_not(b1), b2);
    BoolMatrix upper = bool_not(b2);  // x >= 1/2

    BoolMatrix stacked_bits;
    stacked_bits.rows = 2 * x.rows();
    stacked_bits.cols = x.cols();
    stacked_bits.words = gate.words;
    stacked_bits.words.insert(stacked_bits.words.end(), upper.words.begin(), upper.words.end());
    AddMatrix conv = bit2a(stacked_bits);

    AddMatrix ga, ua;
    ga.main = RingMatrix(x.rows(), x.cols(), std::vector<u64>(conv.main.data().begin(), conv.main.data().begin() + n));
    ua.main =
        RingMatrix(x.rows(), x.cols(), std::vector<u64>(conv.main.data().begin() + n, conv.main.data().end()));
    if (!conv.alt.empty()) {
        ga.alt = RingMatrix(x.rows(), x.cols(), std::vector<u64>(conv.alt.data().begin(), conv.alt.data().begin() + n));
        ua.alt =
            RingMatrix(x.rows(), x.cols(), std::vector<u64>(conv.alt.data().begin() + n, conv.alt.data().end()));
    }

    AddMatrix conv_both;
    conv_both.main = stack_two(ga.main, ua.main);
    if (!ga.alt.empty()) conv_both.alt = stack_two(ga.alt, ua.alt);
    SharedMatrix vv = a2v(conv_both);

    SharedMatrix gv, uv;
    gv.main = RingMatrix(x.rows(), x.cols(), std::vector<u64>(vv.main.data().begin(), vv.main.data().begin() + n));
    uv.main = RingMatrix(x.rows(), x.cols(), std::vector<u64>(vv.main.data().begin() + n, vv.main.data().end()));
    if (me_ == 0) {
        gv.alt =
            RingMatrix(x.rows(), x.cols(), std::vector<u64>(vv.alt.data().begin(), vv.alt.data().begin() + n));
        uv.alt = RingMatrix(x.rows(), x.cols(), std::vector<u64>(vv.alt.data().begin() + n, vv.alt.data().end()));
    }

    // gate * (x + 1/2) + (x >= 1/2) * 1; the gate bits are unscaled, so the
    // products need no truncation
    SharedMatrix seg = mul_elem(gv, xp);
    SharedMatrix one_term = scale(codec_.encode(1.0), uv);
    return add(seg, one_term);
}

}  // namespace pmpl
