#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <future>

#include "pmpl/engine.hpp"
#include "pmpl/vmtgen.hpp"

using namespace pmpl;

namespace {

DomainParams make_params(unsigned ell, unsigned frac, unsigned sigma) {
    DomainParams p;
    p.ell = ell;
    p.frac_bits = frac;
    p.sigma = sigma;
    p.matrix = reference_matrix(ell);
    p.coef = validate_matrix(p.matrix);
    return p;
}

DomainParams default_params() { return make_params(64, 20, 8); }

std::string fresh_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("pmpl_engine_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d.string();
}

// run one callable per party: engines over an in-process mesh with pools
template <typename F>
auto run_engines(const DomainParams& p, const std::string& pool_dir, u64 seed, F fn) {
    auto mesh = make_inproc_mesh();
    using R = decltype(fn(std::declval<Engine&>()));
    std::array<std::future<R>, 3> futs;
    for (int party = 0; party < 3; ++party)
        futs[party] = std::async(std::launch::async, [&, party]() -> R {
            std::optional<PoolReader> pr;
            if (!pool_dir.empty()) pr.emplace(pool_file_name(pool_dir, party));
            Engine e(party, p, *mesh[party], pr ? &*pr : nullptr, seed);
            return fn(e);
        });
    return std::array<R, 3>{futs[0].get(), futs[1].get(), futs[2].get()};
}

RingMatrix random_matrix(const Ring& rg, size_t r, size_t c, CounterRng& rng, unsigned clamp = 0) {
    RingMatrix m(r, c);
    for (auto& x : m.data()) {
        x = rng.next_ring(rg);
        if (clamp) {
            x &= (u64{1} << clamp) - 1;              // magnitude below 2^{clamp-1}
            if (x & (u64{1} << (clamp - 1))) x = rg.neg(x & ((u64{1} << (clamp - 1)) - 1));
        }
    }
    return m;
}

struct StatsDelta {
    u64 bits = 0, rounds = 0;
};

}  // namespace

TEST_CASE("input sharing and opening round trip") {
    auto p = default_params();
    CounterRng rng(1, 9, "data");
    RingMatrix x = random_matrix(p.matrix.ring(), 4, 3, rng);
    auto opened = run_engines(p, "", 42, [&](Engine& e) {
        SharedMatrix sx =
            e.party() == 1 ? e.share_input(x) : e.receive_input(1, x.rows(), x.cols());
        return e.open(sx);
    });
    for (auto& m : opened) CHECK(m == x);
}

TEST_CASE("multiplication matches the plaintext oracle") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    PoolPlan plan;
    plan.vmt = 10000 + 2;
    auto dir = fresh_dir("mul");
    dealer_generate(p, plan, 5, dir);

    CounterRng rng(2, 9, "data");
    RingMatrix x = random_matrix(rg, 100, 100, rng), y = random_matrix(rg, 100, 100, rng);
    RingMatrix expect = mat_elemwise(rg, x, y);

    auto out = run_engines(p, dir, 42, [&](Engine& e) {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 100, 100);
        SharedMatrix sy = e.party() == 0 ? e.share_input(y) : e.receive_input(0, 100, 100);
        SharedMatrix sz = e.mul_elem(sx, sy);
        // x = 3, y = 4 and x * 0 corner lanes
        RingMatrix three(1, 1), four(1, 1);
        three[0] = 3;
        four[0] = 4;
        SharedMatrix s3 = e.party() == 1 ? e.share_input(three) : e.receive_input(1, 1, 1);
        SharedMatrix s4 = e.party() == 1 ? e.share_input(four) : e.receive_input(1, 1, 1);
        SharedMatrix sz2 = e.mul_elem(s3, s4);
        SharedMatrix sz3 = e.mul_elem(s3, e.sub(s4, s4));
        RingMatrix big = e.open(sz);
        RingMatrix small = e.open(sz2);
        RingMatrix zero_out = e.open(sz3);
        CHECK(small[0] == 12);
        CHECK(zero_out[0] == 0);
        return big;
    });
    for (auto& m : out) CHECK(m == expect);
}

TEST_CASE("matrix multiplication, its byte meter, and round count") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    PoolPlan plan;
    plan.matrix_shapes = {{2, 3, 2}, {4, 4, 4}};
    auto dir = fresh_dir("matmul");
    dealer_generate(p, plan, 6, dir);

    CounterRng rng(3, 9, "data");
    RingMatrix x = random_matrix(rg, 2, 3, rng), y = random_matrix(rg, 3, 2, rng);
    RingMatrix expect = mat_mul(rg, x, y);

    auto out = run_engines(p, dir, 42, [&](Engine& e) {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 2, 3);
        SharedMatrix sy = e.party() == 2 ? e.share_input(y) : e.receive_input(2, 3, 2);
        RingMatrix got = e.open(e.matmul(sx, sy));
        CHECK(got == expect);

        // Table-4 meter: one 4x4x4 call moves exactly 6*ell*(nd+dm) bits in
        // one round, and matrix addition moves nothing
        RingMatrix sq(4, 4);
        for (size_t i = 0; i < sq.size(); ++i) sq[i] = i + 1;
        SharedMatrix sa = e.party() == 0 ? e.share_input(sq) : e.receive_input(0, 4, 4);
        u64 bits0 = e.net().stats().total_bits_sent(), rounds0 = e.net().stats().rounds;
        SharedMatrix prod = e.matmul(sa, sa);
        u64 bits1 = e.net().stats().total_bits_sent(), rounds1 = e.net().stats().rounds;
        SharedMatrix sum = e.add(sa, sa);
        (void)sum;
        u64 bits2 = e.net().stats().total_bits_sent();
        CHECK(rounds1 - rounds0 == 1);
        CHECK(bits2 == bits1);
        StatsDelta d{bits1 - bits0, rounds1 - rounds0};
        RingMatrix check = e.open(prod);
        CHECK(check == mat_mul(rg, sq, sq));
        return d;
    });
    u64 total = out[0].bits + out[1].bits + out[2].bits;
    CHECK(total == 6 * 64 * (16 + 16));  // 1536 bytes
}

TEST_CASE("matmul shape mismatch is an argument error") {
    auto p = default_params();
    PoolPlan plan;
    plan.matrix_shapes = {{2, 2, 2}};
    auto dir = fresh_dir("shape");
    dealer_generate(p, plan, 7, dir);
    run_engines(p, dir, 42, [&](Engine& e) -> int {
        RingMatrix x(2, 3);
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 2, 3);
        RingMatrix y(2, 2);
        SharedMatrix sy = e.party() == 0 ? e.share_input(y) : e.receive_input(0, 2, 2);
        CHECK_THROWS_AS(e.matmul(sx, sy), ArgumentError);
        return 0;
    });
}

TEST_CASE("truncation error stays within one ulp") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    const size_t trials = 100000;
    PoolPlan plan;
    plan.trunc_pairs = trials + 2;
    auto dir = fresh_dir("trunc");
    dealer_generate(p, plan, 8, dir);

    CounterRng rng(4, 9, "data");
    // signed magnitudes below 2^{ell - sigma - 2}
    RingMatrix z = random_matrix(rg, 500, 200, rng, 54);
    auto out = run_engines(p, dir, 43, [&](Engine& e) {
        SharedMatrix sz = e.party() == 0 ? e.share_input(z) : e.receive_input(0, 500, 200);
        RingMatrix zt = e.open(e.trunc(sz));

        RingMatrix fixed(1, 2);
        fixed[0] = u64{3} << 40;
        fixed[1] = 0;
        SharedMatrix sf = e.party() == 0 ? e.share_input(fixed) : e.receive_input(0, 1, 2);
        RingMatrix ft = e.open(e.trunc(sf));
        i64 d0 = rg.to_signed(ft[0]) - (3ll << 20);
        i64 d1 = rg.to_signed(ft[1]);
        CHECK(d0 >= -1);
        CHECK(d0 <= 1);
        CHECK(d1 >= -1);
        CHECK(d1 <= 0);
        return zt;
    });
    double total_abs = 0;
    for (size_t i = 0; i < z.size(); ++i) {
        i64 want = rg.to_signed(z[i]) >> p.frac_bits;
        i64 got = rg.to_signed(out[0][i]);
        i64 err = got - want;
        CHECK(err >= -1);
        CHECK(err <= 1);
        total_abs += std::abs(double(err));
        CHECK(out[0][i] == out[1][i]);
    }
    CHECK(total_abs / double(z.size()) < 0.6);
}

TEST_CASE("share conversion examples and round trip") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    PoolPlan plan;
    plan.vmt = 4;
    auto dir = fresh_dir("conv");
    dealer_generate(p, plan, 9, dir);

    CounterRng rng(5, 9, "data");
    RingMatrix x = random_matrix(rg, 100, 100, rng);
    auto sums = run_engines(p, dir, 44, [&](Engine& e) -> std::pair<RingMatrix, RingMatrix> {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 100, 100);
        AddMatrix a = e.v2a(sx);
        SharedMatrix back = e.a2v(a);
        RingMatrix y = e.open(back);
        return {a.main, y};
    });
    // additive shares sum to the secret; a2v(v2a(x)) reconstructs to x
    for (size_t i = 0; i < x.size(); ++i) {
        u64 s = rg.add(rg.add(sums[0].first[i], sums[1].first[i]), sums[2].first[i]);
        CHECK(s == x[i]);
    }
    CHECK(sums[0].second == x);
    CHECK(sums[1].second == x);

    // the worked single-value example: shares (7, 4, 6) with c = (1, -2, 1)
    ShareQuad quad = share_value(p.matrix, 5, 1, 2);
    CHECK(quad == ShareQuad{7, 4, 6, 10});
    u64 a0 = rg.mul(p.coef.c0, quad[0]);
    u64 a1 = rg.mul(p.coef.c1, quad[1]);
    u64 a2 = rg.mul(p.coef.c2, quad[2]);
    CHECK(a0 == 7);
    CHECK(a1 == rg.from_signed(-8));
    CHECK(a2 == 6);
    CHECK(rg.add(rg.add(a0, a1), a2) == 5);
    // 2PC conversion: c' = (1, -3, 1) over shares (7, 4, 10)
    u64 b0 = rg.mul(p.coef.cp0, quad[0]);
    u64 b1 = rg.mul(p.coef.cp1, quad[1]);
    u64 b3 = rg.mul(p.coef.cp3, quad[3]);
    CHECK(b1 == rg.from_signed(-12));
    CHECK(rg.add(rg.add(b0, b1), b3) == 5);
}

TEST_CASE("a2v fast path under an all-odd-c matrix consumes k shares") {
    DomainParams p;
    p.ell = 64;
    p.frac_bits = 20;
    p.sigma = 8;
    Ring rg(64);
    p.matrix.ell = 64;
    p.matrix.rows = {{{rg.from_signed(-1), rg.from_signed(-1), rg.from_signed(-1)},
                      {1, 1, 0},
                      {1, 0, 1},
                      {4, 1, 3}}};
    p.coef = validate_matrix(p.matrix);
    REQUIRE(((p.coef.c0 & p.coef.c1 & p.coef.c2) & 1) == 1);

    PoolPlan plan;
    plan.kshare = 64;
    auto dir = fresh_dir("fastpath");
    dealer_generate(p, plan, 10, dir);

    CounterRng rng(6, 9, "data");
    RingMatrix x = random_matrix(rg, 8, 8, rng);
    auto out = run_engines(p, dir, 45, [&](Engine& e) {
        CHECK(e.a2v_fast_path());
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 8, 8);
        AddMatrix a = e.v2a(sx);
        SharedMatrix back = e.a2v(a);
        // the alternate share must also be usable: switch to 2PC and open
        e.raise_drop();
        if (!e.is_live()) return RingMatrix();
        return e.open(back);
    });
    CHECK(out[0] == x);
    CHECK(out[1] == x);
}

TEST_CASE("msb extraction is exhaustively correct at ell = 8") {
    auto p = make_params(8, 4, 2);
    Ring rg(8);
    const size_t splits = 100;
    PoolPlan plan;
    plan.booltriple3 = Engine::msb_triple_words(8, 3) * 256 * splits + 64;
    auto dir = fresh_dir("msb");
    dealer_generate(p, plan, 11, dir);

    // forced additive splits of every secret
    CounterRng srng(7, 9, "splits");
    std::array<RingMatrix, 3> addends{RingMatrix(256, splits), RingMatrix(256, splits),
                                      RingMatrix(256, splits)};
    for (size_t s = 0; s < 256; ++s)
        for (size_t j = 0; j < splits; ++j) {
            u64 a = srng.next_ring(rg), b = srng.next_ring(rg);
            addends[0].at(s, j) = a;
            addends[1].at(s, j) = b;
            addends[2].at(s, j) = rg.sub(u64(s), rg.add(a, b));
        }
    auto out = run_engines(p, dir, 46, [&](Engine& e) {
        AddMatrix mine;
        mine.main = addends[e.party()];
        BoolMatrix b = e.msb(mine);
        return b.words;
    });
    for (size_t s = 0; s < 256; ++s)
        for (size_t j = 0; j < splits; ++j) {
            u64 bit =
                (out[0][s * splits + j] ^ out[1][s * splits + j] ^ out[2][s * splits + j]) & 1;
            CHECK(bit == u64(s) >> 7);
        }
}

TEST_CASE("bit2a is exact for both bit values") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    PoolPlan plan;
    plan.dabit3 = 20000 + 2;
    auto dir = fresh_dir("bit2a");
    dealer_generate(p, plan, 12, dir);

    // random bit pattern, boolean-shared by forcing party words
    CounterRng rng(8, 9, "bits");
    size_t n = 10000;
    std::array<std::vector<u64>, 3> words;
    std::vector<u64> clear(n);
    for (size_t i = 0; i < n; ++i) {
        u64 b0 = rng.next() & 1, b1 = rng.next() & 1, b2 = rng.next() & 1;
        words[0].push_back(b0);
        words[1].push_back(b1);
        words[2].push_back(b2);
        clear[i] = b0 ^ b1 ^ b2;
    }
    auto out = run_engines(p, dir, 47, [&](Engine& e) {
        BoolMatrix b;
        b.rows = n;
        b.cols = 1;
        b.words = words[e.party()];
        AddMatrix a = e.bit2a(b);
        return a.main;
    });
    for (size_t i = 0; i < n; ++i) {
        u64 sum = rg.add(rg.add(out[0][i], out[1][i]), out[2][i]);
        CHECK(sum == clear[i]);
    }
}

namespace {
PoolPlan relu_plan(const DomainParams& p, size_t elems, int addends) {
    PoolPlan plan;
    plan.booltriple3 = Engine::msb_triple_words(p.ell, addends) * elems + 64;
    plan.dabit3 = elems + 8;
    plan.vmt = elems + 8;
    plan.kshare = elems + 8;
    return plan;
}

PoolPlan sigmoid_pool_plan(const DomainParams& p, size_t elems, int addends) {
    PoolPlan plan;
    plan.booltriple3 =
        Engine::msb_triple_words(p.ell, addends) * 2 * elems + (2 * elems + 63) / 64 + 64;
    plan.dabit3 = 2 * elems + 8;
    plan.vmt = elems + 8;
    plan.kshare = 2 * elems + 8;
    return plan;
}

u64 sigmoid_oracle(const Ring& rg, const FixedCodec& codec, u64 x) {
    double v = codec.decode(x);
    if (v <= -0.5) return 0;
    if (v >= 0.5) return codec.encode(1.0);
    return rg.add(x, codec.encode(0.5));
}
}  // namespace

TEST_CASE("relu matches the plaintext oracle exactly") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    FixedCodec codec = p.codec();
    size_t n = 10000;
    auto dir = fresh_dir("relu");
    dealer_generate(p, relu_plan(p, n + 2, 3), 13, dir);

    CounterRng rng(9, 9, "data");
    RingMatrix x = random_matrix(rg, 100, 100, rng, 31);  // inside (-2^30, 2^30)
    auto out = run_engines(p, dir, 48, [&](Engine& e) {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 100, 100);
        RingMatrix big = e.open(e.relu(sx));

        RingMatrix two(1, 2);
        two[0] = codec.encode(-3.0);
        two[1] = codec.encode(5.25);
        SharedMatrix st = e.party() == 0 ? e.share_input(two) : e.receive_input(0, 1, 2);
        RingMatrix small = e.open(e.relu(st));
        CHECK(small[0] == 0);
        CHECK(small[1] == codec.encode(5.25));
        return big;
    });
    for (size_t i = 0; i < x.size(); ++i) {
        u64 want = rg.msb(x[i]) ? 0 : x[i];
        CHECK(out[0][i] == want);
        CHECK(out[1][i] == want);
        CHECK(out[2][i] == want);
    }
}

TEST_CASE("sigmoid equals the piecewise form at representable points") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    FixedCodec codec = p.codec();
    size_t n = 10000;
    auto dir = fresh_dir("sigmoid");
    dealer_generate(p, sigmoid_pool_plan(p, n + 3, 3), 14, dir);

    CounterRng rng(10, 9, "data");
    RingMatrix x = random_matrix(rg, 100, 100, rng, 24);  // a few units around zero
    auto out = run_engines(p, dir, 49, [&](Engine& e) {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 100, 100);
        RingMatrix big = e.open(e.sigmoid(sx));

        RingMatrix probe(1, 3);
        probe[0] = codec.encode(-1.0);
        probe[1] = codec.encode(0.0);
        probe[2] = codec.encode(2.0);
        SharedMatrix sp = e.party() == 0 ? e.share_input(probe) : e.receive_input(0, 1, 3);
        RingMatrix small = e.open(e.sigmoid(sp));
        CHECK(small[0] == 0);
        CHECK(small[1] == codec.encode(0.5));
        CHECK(small[2] == codec.encode(1.0));
        return big;
    });
    for (size_t i = 0; i < x.size(); ++i) {
        u64 want = sigmoid_oracle(rg, codec, x[i]);
        CHECK(out[0][i] == want);
        CHECK(out[1][i] == want);
    }
}

TEST_CASE("2pc mode reproduces 3pc secrets on the same preprocessing") {
    auto p = default_params();
    Ring rg = p.matrix.ring();
    size_t n = 256;
    PoolPlan plan = sigmoid_pool_plan(p, 4 * n + 16, 3);
    {
        PoolPlan plan2 = sigmoid_pool_plan(p, 4 * n + 16, 2);
        plan.booltriple2 = plan2.booltriple3;
        plan.dabit2 = plan2.dabit3;
    }
    plan.trunc_pairs = n + 8;
    plan.matrix_shapes = {{16, 16, 16}};

    CounterRng rng(11, 9, "data");
    RingMatrix x = random_matrix(rg, 16, 16, rng, 30);
    RingMatrix y = random_matrix(rg, 16, 16, rng, 30);

    auto pipeline = [&](Engine& e) -> RingMatrix {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 16, 16);
        SharedMatrix sy = e.party() == 1 ? e.share_input(y) : e.receive_input(1, 16, 16);
        SharedMatrix prod = e.trunc(e.matmul(sx, sy));
        SharedMatrix act = e.relu(prod);
        auto got = e.reveal_to_p0(act);
        if (e.party() == 0) return *got;
        return RingMatrix();
    };

    auto dir3 = fresh_dir("mode3");
    dealer_generate(p, plan, 15, dir3);
    auto out3 = run_engines(p, dir3, 50, pipeline);

    auto dir2 = fresh_dir("mode2");
    dealer_generate(p, plan, 15, dir2);  // same seed: identical material
    auto out2 = run_engines(p, dir2, 50, [&](Engine& e) -> RingMatrix {
        e.raise_drop();
        if (!e.is_live()) return RingMatrix();
        return pipeline(e);
    });
    CHECK(out3[0] == out2[0]);
    CHECK(out3[0].rows() == 16);
}

TEST_CASE("double drop is rejected; dropped party refuses work") {
    auto p = default_params();
    run_engines(p, "", 51, [&](Engine& e) -> int {
        e.raise_drop();
        CHECK_THROWS_AS(e.raise_drop(), ArgumentError);
        if (e.party() == 2) {
            RingMatrix x(1, 1);
            CHECK_THROWS_AS(e.share_input(x), ArgumentError);
        }
        return 0;
    });
}

TEST_CASE("reveal delivers to the privileged party only") {
    auto p = default_params();
    RingMatrix x(2, 2);
    x[0] = 5;
    auto got = run_engines(p, "", 52, [&](Engine& e) -> std::pair<bool, u64> {
        SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 2, 2);
        auto out = e.reveal_to_p0(sx);
        // audit: assistants never receive reveal-kind frames
        u64 seen = 0;
        for (int src = 0; src < 3; ++src)
            seen += e.net().stats().frames_recv_kind[src][static_cast<int>(FrameKind::reveal)];
        if (e.party() != 0) CHECK(seen == 0);
        return {out.has_value(), out ? (*out)[0] : 0};
    });
    CHECK(got[0].first);
    CHECK(got[0].second == 5);
    CHECK(!got[1].first);
    CHECK(!got[2].first);
}

TEST_CASE("pool fingerprint mismatch is a desync") {
    auto p = default_params();
    PoolPlan plan;
    plan.vmt = 1;
    auto dir_a = fresh_dir("fpa"), dir_b = fresh_dir("fpb");
    dealer_generate(p, plan, 16, dir_a);
    dealer_generate(p, plan, 17, dir_b);
    // party 2 gets a pool from a different dealer run
    std::filesystem::rename(pool_file_name(dir_b, 2), pool_file_name(dir_a, 2));
    auto out = run_engines(p, dir_a, 53, [&](Engine& e) -> int {
        try {
            e.verify_pool();
            return 0;
        } catch (const ProtocolDesync&) {
            return 1;
        }
    });
    CHECK(out[0] + out[1] + out[2] >= 2);
}

TEST_CASE("2pc byte meters match the table rows") {
    auto p = default_params();
    PoolPlan plan;
    plan.matrix_shapes = {{4, 4, 4}};
    plan.trunc_pairs = 16;
    auto dir = fresh_dir("meter2");
    dealer_generate(p, plan, 18, dir);
    auto out = run_engines(p, dir, 54, [&](Engine& e) -> std::array<u64, 2> {
        e.raise_drop();
        if (!e.is_live()) return {0, 0};
        RingMatrix sq(4, 4);
        SharedMatrix sa = e.party() == 0 ? e.share_input(sq) : e.receive_input(0, 4, 4);
        u64 b0 = e.net().stats().total_bits_sent();
        SharedMatrix prod = e.matmul(sa, sa);
        u64 b1 = e.net().stats().total_bits_sent();
        SharedMatrix t = e.trunc(prod);
        (void)t;
        u64 b2 = e.net().stats().total_bits_sent();
        return {b1 - b0, b2 - b1};
    });
    CHECK(out[0][0] + out[1][0] == 3 * 64 * (16 + 16));  // matmul, 2PC
    CHECK(out[0][1] + out[1][1] == 64 * 16);             // truncation, 2PC
}
