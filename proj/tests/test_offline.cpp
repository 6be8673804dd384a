#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>

#include "pmpl/pool.hpp"
#include "pmpl/vmtgen.hpp"

using namespace pmpl;

namespace {

DomainParams test_params(unsigned ell = 64) {
    DomainParams p;
    p.ell = ell;
    p.frac_bits = ell > 24 ? 20 : 4;
    p.sigma = ell > 16 ? 8 : 2;
    p.matrix = reference_matrix(ell);
    p.coef = validate_matrix(p.matrix);
    return p;
}

std::string fresh_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("pmpl_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d.string();
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

u64 recon(const DomainParams& p, u64 s0, u64 s1, u64 s2) {
    return reconstruct3(p.matrix, p.coef, {0, s0}, {1, s1}, {2, s2});
}
u64 recon_alt(const DomainParams& p, u64 s0, u64 s1, u64 s3) {
    return reconstruct2(p.matrix, p.coef, {0, s0}, {1, s1}, {3, s3});
}

}  // namespace

TEST_CASE("dealer pools satisfy every invariant and validate") {
    auto p = test_params();
    PoolPlan plan;
    plan.vmt = 50;
    plan.matrix_shapes = {{2, 3, 2}, {1, 1, 1}};
    plan.trunc_pairs = 50;
    plan.dabit3 = 40;
    plan.dabit2 = 30;
    plan.booltriple3 = 40;
    plan.booltriple2 = 30;
    plan.kshare = 25;
    auto dir = fresh_dir("dealer");
    dealer_generate(p, plan, 12345, dir);
    CHECK(validate_pools(dir) == 50 + 50 + 40 + 30 + 40 + 30 + 25 + 2);

    // spot check: one triple under both reconstruction routes
    PoolReader r0(pool_file_name(dir, 0)), r1(pool_file_name(dir, 1)),
        r2(pool_file_name(dir, 2));
    auto a = r0.next_vmt(), b = r1.next_vmt(), c = r2.next_vmt();
    u64 u = recon(p, a.u, b.u, c.u), v = recon(p, a.v, b.v, c.v);
    CHECK(recon(p, a.h, b.h, c.h) == p.matrix.ring().mul(u, v));
    CHECK(recon_alt(p, a.u, b.u, a.u_alt) == u);

    auto t0 = r0.next_trunc(), t1 = r1.next_trunc(), t2 = r2.next_trunc();
    u64 r = recon(p, t0.r, t1.r, t2.r);
    CHECK(recon(p, t0.r_shift, t1.r_shift, t2.r_shift) == (r >> p.frac_bits));
    CHECK(r < (u64{1} << (p.ell - p.sigma)));
}

TEST_CASE("identical seed and config give byte-identical pools") {
    auto p = test_params();
    PoolPlan plan;
    plan.vmt = 20;
    plan.trunc_pairs = 10;
    plan.matrix_shapes = {{2, 2, 2}};
    plan.kshare = 5;
    auto d1 = fresh_dir("det1"), d2 = fresh_dir("det2"), d3 = fresh_dir("det3");
    dealer_generate(p, plan, 777, d1);
    dealer_generate(p, plan, 777, d2);
    dealer_generate(p, plan, 778, d3);
    for (unsigned party = 0; party < 3; ++party) {
        CHECK(slurp(pool_file_name(d1, party)) == slurp(pool_file_name(d2, party)));
        CHECK(slurp(pool_file_name(d1, party)) != slurp(pool_file_name(d3, party)));
    }
}

TEST_CASE("zero-count pools still carry valid headers") {
    auto p = test_params();
    auto dir = fresh_dir("empty");
    dealer_generate(p, PoolPlan{}, 1, dir);
    CHECK(validate_pools(dir) == 0);
    PoolReader r(pool_file_name(dir, 1));
    CHECK(r.header().party == 1);
    CHECK(r.header().params.ell == 64);
    CHECK(r.remaining(PoolKind::vmt) == 0);
    CHECK_THROWS_AS(r.next_vmt(), PreprocUnderflow);
}

TEST_CASE("pool exhaustion and shape mismatches are reported") {
    auto p = test_params();
    PoolPlan plan;
    plan.matrix_shapes = {{2, 2, 2}};
    auto dir = fresh_dir("exhaust");
    dealer_generate(p, plan, 5, dir);
    PoolReader r(pool_file_name(dir, 0));
    CHECK_THROWS_AS(r.next_matrix(3, 3, 3), ArgumentError);  // wrong shape
    auto item = r.next_matrix(2, 2, 2);
    CHECK(item.u.rows() == 2);
    CHECK_THROWS_AS(r.next_matrix(2, 2, 2), PreprocUnderflow);
}

TEST_CASE("k shares reconstruct identically under all routes and look uniform") {
    auto p = test_params(8);
    PoolPlan plan;
    plan.kshare = 100000;
    auto dir = fresh_dir("kshare");
    dealer_generate(p, plan, 31337, dir);
    PoolReader r0(pool_file_name(dir, 0)), r1(pool_file_name(dir, 1)),
        r2(pool_file_name(dir, 2));
    std::array<u64, 256> hist{};
    for (int i = 0; i < 100000; ++i) {
        auto a = r0.next_kshare(), b = r1.next_kshare(), c = r2.next_kshare();
        u64 k3 = recon(p, a.k, b.k, c.k);
        CHECK(recon_alt(p, a.k, b.k, a.k_alt) == k3);
        ++hist[k3];
    }
    // chi-squared uniformity at alpha = 0.01 (255 dof -> 310.5)
    double expect = 100000 / 256.0, chi = 0;
    for (u64 n : hist) chi += (n - expect) * (n - expect) / expect;
    CHECK(chi < 310.5);
}

TEST_CASE("crossterm oracle splits sum to the plaintext product") {
    Ring rg(64);
    DealerCrossterm oracle(rg, 9);
    auto f0 = std::async(std::launch::async,
                         [&] { return oracle.crossterm(0, 1, {2}, {3}); });
    auto f1 = std::async(std::launch::async,
                         [&] { return oracle.crossterm(1, 0, {5}, {7}); });
    u64 got = rg.add(f0.get()[0], f1.get()[0]);
    CHECK(got == 2 * 7 + 5 * 3);

    // zeros and a randomized batch
    auto z0 = std::async(std::launch::async,
                         [&] { return oracle.crossterm(0, 1, {0}, {0}); });
    auto z1 = std::async(std::launch::async,
                         [&] { return oracle.crossterm(1, 0, {0}, {0}); });
    CHECK(rg.add(z0.get()[0], z1.get()[0]) == 0);

    CounterRng rng(4, 0, "ct");
    std::vector<u64> u0(1000), v0(1000), u1(1000), v1(1000);
    for (size_t i = 0; i < 1000; ++i) {
        u0[i] = rng.next();
        v0[i] = rng.next();
        u1[i] = rng.next();
        v1[i] = rng.next();
    }
    auto g0 = std::async(std::launch::async,
                         [&] { return oracle.crossterm(0, 1, u0, v0); });
    auto g1 = std::async(std::launch::async,
                         [&] { return oracle.crossterm(1, 0, u1, v1); });
    auto s0 = g0.get(), s1 = g1.get();
    for (size_t i = 0; i < 1000; ++i)
        CHECK(rg.add(s0[i], s1[i]) == rg.reduce(u0[i] * v1[i] + u1[i] * v0[i]));
}

TEST_CASE("interactive triplet generation matches the plaintext expansion") {
    auto p = test_params();
    Ring rg = p.matrix.ring();
    DealerCrossterm oracle(rg, 10);
    auto mesh = make_inproc_mesh();

    std::array<std::future<std::vector<VmtItem>>, 3> futs;
    for (int party = 0; party < 3; ++party)
        futs[party] = std::async(std::launch::async, [&, party] {
            CounterRng rng(1000 + party, party, "vmtgen");
            return interactive_vmt(*mesh[party], p.matrix, rng, oracle, 100);
        });
    auto i0 = futs[0].get(), i1 = futs[1].get(), i2 = futs[2].get();
    REQUIRE(i0.size() == 100);
    for (size_t i = 0; i < 100; ++i) {
        u64 u = recon(p, i0[i].u, i1[i].u, i2[i].u);
        u64 v = recon(p, i0[i].v, i1[i].v, i2[i].v);
        u64 h = recon(p, i0[i].h, i1[i].h, i2[i].h);
        CHECK(h == rg.mul(u, v));
        CHECK(recon_alt(p, i0[i].h, i1[i].h, i0[i].h_alt) == h);
        CHECK(recon_alt(p, i0[i].u, i1[i].u, i0[i].u_alt) == u);
    }
}

TEST_CASE("interactive triplets with pinned contributions") {
    auto p = test_params();
    Ring rg = p.matrix.ring();
    DealerCrossterm oracle(rg, 11);
    auto mesh = make_inproc_mesh();

    // u_i = (1,2,3), v_i = (4,5,6) across parties, plus an all-zero lane
    std::array<std::future<std::vector<VmtItem>>, 3> futs;
    for (int party = 0; party < 3; ++party)
        futs[party] = std::async(std::launch::async, [&, party] {
            CounterRng rng(2000 + party, party, "vmtgen");
            std::vector<u64> u{static_cast<u64>(party + 1), 0};
            std::vector<u64> v{static_cast<u64>(party + 4), 0};
            return interactive_vmt_with(*mesh[party], p.matrix, rng, oracle, u, v);
        });
    auto i0 = futs[0].get(), i1 = futs[1].get(), i2 = futs[2].get();
    CHECK(recon(p, i0[0].u, i1[0].u, i2[0].u) == 6);
    CHECK(recon(p, i0[0].v, i1[0].v, i2[0].v) == 15);
    CHECK(recon(p, i0[0].h, i1[0].h, i2[0].h) == 90);
    CHECK(recon(p, i0[1].h, i1[1].h, i2[1].h) == 0);
}
