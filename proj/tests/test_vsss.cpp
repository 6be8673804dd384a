#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "pmpl/vsss.hpp"

using namespace pmpl;

namespace {

// independent oracle: phi(i) . (x, s1, s2) by direct expansion
u64 share_oracle(const PublicMatrix& pm, int idx, u64 x, u64 s1, u64 s2) {
    Ring rg = pm.ring();
    const auto& row = pm.rows[idx];
    return rg.add(rg.add(rg.mul(row[0], x), rg.mul(row[1], s1)), rg.mul(row[2], s2));
}

// a matrix with all-odd c coefficients; its cp1 comes out even, which makes
// it the mirror image of the reference matrix for fast-path testing
PublicMatrix all_odd_c_matrix(unsigned ell) {
    Ring rg(ell);
    PublicMatrix pm;
    pm.ell = ell;
    pm.rows = {{{rg.from_signed(-1), rg.from_signed(-1), rg.from_signed(-1)},
                {1, 1, 0},
                {1, 0, 1},
                {4, 1, 3}}};  // row1 + 3*row2
    return pm;
}

}  // namespace

TEST_CASE("reference matrix solves to the published coefficients") {
    for (unsigned ell : {8u, 64u}) {
        Ring rg(ell);
        PublicMatrix pm = reference_matrix(ell);
        Coefficients co = validate_matrix(pm);
        CHECK(co.c0 == 1);
        CHECK(co.c1 == rg.from_signed(-2));
        CHECK(co.c2 == 1);
        CHECK(co.cp0 == 1);
        CHECK(co.cp1 == rg.from_signed(-3));
        CHECK(co.cp3 == 1);
        CHECK(co.cpp0 == 1);
        CHECK(co.cpp2 == 3);
        CHECK(co.cpp3 == rg.from_signed(-2));
        CHECK(co.a1 == 1);
        CHECK(co.a2 == 1);
    }
}

TEST_CASE("validation rejects bad matrices with named restrictions") {
    PublicMatrix pm = reference_matrix(64);
    pm.rows[3] = pm.rows[0];  // alternate row must combine rows 1 and 2
    try {
        validate_matrix(pm);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        bool mentions2 = false;
        for (const auto& v : e.violations) mentions2 |= v.find("restriction-2") == 0;
        CHECK(mentions2);
    }

    PublicMatrix even;  // rows 0..2 singular mod 2
    even.ell = 64;
    even.rows = {{{2, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 1}}};
    try {
        validate_matrix(even);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        bool mentions1 = false;
        for (const auto& v : e.violations) mentions1 |= v.find("restriction-1") == 0;
        CHECK(mentions1);
    }

    // a matrix whose unauthorized pair {row0, row3} reaches the target
    PublicMatrix leaky;
    leaky.ell = 64;
    Ring rg(64);
    leaky.rows = {{{rg.from_signed(-1), rg.from_signed(-1), rg.from_signed(-1)},
                   {1, 1, 0},
                   {1, 0, 1},
                   {2, 1, 1}}};  // row1 + row2; row0 + row3 = (1,0,0)
    try {
        validate_matrix(leaky);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        bool mentions3 = false;
        for (const auto& v : e.violations) mentions3 |= v.find("restriction-3") == 0;
        CHECK(mentions3);
    }
}

TEST_CASE("the all-odd-c matrix validates and flips the parity pattern") {
    PublicMatrix pm = all_odd_c_matrix(64);
    Coefficients co = validate_matrix(pm);
    CHECK((co.c0 & 1) == 1);
    CHECK((co.c1 & 1) == 1);
    CHECK((co.c2 & 1) == 1);
    CHECK((co.cp1 & 1) == 0);  // at least one of c1, c'1 is always even
    CHECK((co.cp0 & 1) == 1);
    CHECK((co.cp3 & 1) == 1);
}

TEST_CASE("sharing examples from forced randomness") {
    PublicMatrix pm = reference_matrix(64);
    ShareQuad q = share_value(pm, 5, 0, 0);
    CHECK(q[0] == 5);
    CHECK(q[1] == 5);
    CHECK(q[2] == 10);
    CHECK(q[3] == 15);
    q = share_value(pm, 5, 1, 2);
    CHECK(q[0] == 7);
    CHECK(q[1] == 4);
    CHECK(q[2] == 6);
    CHECK(q[3] == 10);
    q = share_value(pm, 0, 0, 0);
    CHECK(q == ShareQuad{0, 0, 0, 0});
}

TEST_CASE("reconstruction identities, all three coefficient sets") {
    PublicMatrix pm = reference_matrix(64);
    Coefficients co = validate_matrix(pm);
    CHECK(reconstruct3(pm, co, {0, 7}, {1, 4}, {2, 6}) == 5);
    CHECK(reconstruct2(pm, co, {0, 7}, {1, 4}, {3, 10}) == 5);
    CHECK(reconstruct2(pm, co, {0, 7}, {2, 6}, {3, 10}) == 5);
    CHECK(reconstruct3(pm, co, {0, 0}, {1, 0}, {2, 0}) == 0);
    CHECK_THROWS_AS(reconstruct3(pm, co, {1, 0}, {1, 0}, {2, 0}), ArgumentError);
    CHECK_THROWS_AS(reconstruct2(pm, co, {0, 0}, {1, 0}, {2, 0}), ArgumentError);

    CounterRng rng(3, 0, "test");
    Ring rg(64);
    for (int i = 0; i < 10000; ++i) {
        u64 x = rng.next_ring(rg);
        ShareQuad q = share_value(pm, x, rng);
        CHECK(reconstruct3(pm, co, {0, q[0]}, {1, q[1]}, {2, q[2]}) == x);
        CHECK(reconstruct2(pm, co, {0, q[0]}, {1, q[1]}, {3, q[3]}) == x);
        CHECK(reconstruct2(pm, co, {0, q[0]}, {2, q[2]}, {3, q[3]}) == x);
        // alternate share consistency
        CHECK(q[3] == rg.add(rg.mul(co.a1, q[1]), rg.mul(co.a2, q[2])));
    }
}

TEST_CASE("linearity of the sharing") {
    PublicMatrix pm = reference_matrix(64);
    Coefficients co = validate_matrix(pm);
    Ring rg(64);
    CounterRng rng(5, 0, "test");
    for (int i = 0; i < 2000; ++i) {
        u64 x = rng.next_ring(rg), y = rng.next_ring(rg);
        u64 k1 = rng.next_ring(rg), k2 = rng.next_ring(rg);
        ShareQuad qx = share_value(pm, x, rng), qy = share_value(pm, y, rng);
        ShareQuad q;
        for (int j = 0; j < 4; ++j)
            q[j] = lincomb(rg, k1, {unsigned(j), qx[j]}, k2, {unsigned(j), qy[j]}).value;
        CHECK(reconstruct_quad(pm, co, q) == rg.add(rg.mul(k1, x), rg.mul(k2, y)));
    }
    // negation via k = -1
    ShareQuad qx = share_value(pm, 9, rng);
    ShareQuad q;
    for (int j = 0; j < 4; ++j)
        q[j] = lincomb(rg, rg.from_signed(-1), {unsigned(j), qx[j]}, 0, {unsigned(j), 0}).value;
    CHECK(reconstruct_quad(pm, co, q) == rg.from_signed(-9));
    CHECK_THROWS_AS(lincomb(rg, 1, {0, 1}, 1, {1, 1}), ArgumentError);
}

TEST_CASE("matrix sharing reduces to scalar sharing and round trips") {
    PublicMatrix pm = reference_matrix(64);
    Coefficients co = validate_matrix(pm);
    CounterRng rng(8, 0, "test");

    RingMatrix one(1, 1);
    one[0] = 5;
    // forced randomness path equals the scalar oracle
    MatrixSharing ms = share_matrix(pm, one, rng);
    u64 x = reconstruct3(pm, co, {0, ms.by_index[0][0]}, {1, ms.by_index[1][0]},
                         {2, ms.by_index[2][0]});
    CHECK(x == 5);

    RingMatrix zero(3, 2);
    CounterRng zrng(0, 0, "zeros");
    // zero matrix with any randomness reconstructs to zero
    MatrixSharing mz = share_matrix(pm, zero, zrng);
    CHECK(reconstruct_quad(pm, co, mz) == zero);

    RingMatrix eye(2, 2);
    eye.at(0, 0) = eye.at(1, 1) = 1;
    MatrixSharing me = share_matrix(pm, eye, rng);
    CHECK(reconstruct_quad(pm, co, me) == eye);

    RingMatrix empty;
    CHECK_THROWS_AS(share_matrix(pm, empty, rng), ArgumentError);
}

TEST_CASE("perfect secrecy by enumeration at ell = 8") {
    // joint distribution of the assistant pair, the privileged pair, and
    // each singleton is identical across secrets
    PublicMatrix pm = reference_matrix(8);
    std::array<u64, 3> secrets{0, 1, 17};
    using Hist = std::map<u64, u64>;
    std::array<Hist, 3> pair12, pair03;
    std::array<std::array<Hist, 4>, 3> single;
    for (int s = 0; s < 3; ++s) {
        for (u64 s1 = 0; s1 < 256; ++s1)
            for (u64 s2 = 0; s2 < 256; ++s2) {
                ShareQuad q = share_value(pm, secrets[s], s1, s2);
                ++pair12[s][(q[1] << 8) | q[2]];
                ++pair03[s][(q[0] << 8) | q[3]];
                for (int j = 0; j < 4; ++j) ++single[s][j][q[j]];
            }
    }
    CHECK(pair12[0] == pair12[1]);
    CHECK(pair12[0] == pair12[2]);
    CHECK(pair03[0] == pair03[1]);
    CHECK(pair03[0] == pair03[2]);
    for (int j = 0; j < 4; ++j) {
        CHECK(single[0][j] == single[1][j]);
        CHECK(single[0][j] == single[2][j]);
    }
}

TEST_CASE("share oracle agreement on random matrices") {
    PublicMatrix pm = reference_matrix(64);
    CounterRng rng(21, 0, "test");
    Ring rg(64);
    for (int i = 0; i < 500; ++i) {
        u64 x = rng.next_ring(rg), s1 = rng.next_ring(rg), s2 = rng.next_ring(rg);
        ShareQuad q = share_value(pm, x, s1, s2);
        for (int j = 0; j < 4; ++j) CHECK(q[j] == share_oracle(pm, j, x, s1, s2));
    }
}
