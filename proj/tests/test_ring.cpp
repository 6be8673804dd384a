#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmpl/ring.hpp"
#include "pmpl/rng.hpp"

using namespace pmpl;

namespace {
// arbitrary-precision signed oracle via __int128
i64 floor_div_pow2(i64 v, unsigned f) {
    __int128 x = v;
    __int128 d = __int128(1) << f;
    __int128 q = x / d;
    if (x % d != 0 && x < 0) --q;
    return static_cast<i64>(q);
}
}  // namespace

TEST_CASE("fixed point encode examples") {
    FixedCodec c(Ring(64), 20);
    CHECK(c.encode(0.0) == 0);
    CHECK(c.encode(1.5) == 1572864);                       // 1.5 * 2^20
    CHECK(c.encode(-1.0) == (~u64{0} - (1ull << 20) + 1)); // 2^64 - 2^20
    CHECK(c.decode(0) == 0.0);
    CHECK(c.decode(1572864) == 1.5);
    CHECK(c.decode(~u64{0} - (1ull << 20) + 1) == -1.0);
}

TEST_CASE("encode round trips") {
    FixedCodec c(Ring(64), 20);
    CounterRng rng(7, 0, "test");
    for (int i = 0; i < 2000; ++i) {
        // rationals with denominator dividing 2^20, inside the safe band
        i64 numer = static_cast<i64>(rng.next() % (1ull << 40)) - (1ll << 39);
        double q = static_cast<double>(numer) / (1 << 20);
        CHECK(c.decode(c.encode(q)) == q);
    }
    CHECK_THROWS_AS(c.encode(1e18), ArgumentError);
}

TEST_CASE("rounding is half away from zero") {
    FixedCodec c(Ring(64), 2);  // quarter steps
    CHECK(c.encode(0.125) == 1);    // 0.5 rounds up
    CHECK(c.encode(-0.125) == c.ring().from_signed(-1));
    CHECK(c.encode(0.124) == 0);
}

TEST_CASE("signed shift examples and oracle") {
    Ring r(64);
    CHECK(r.shift_right_signed(1ull << 22, 20) == 4);
    CHECK(r.shift_right_signed(r.from_signed(-(1ll << 21)), 20) == r.from_signed(-2));
    CHECK(r.shift_right_signed(5, 20) == 0);

    CounterRng rng(11, 0, "test");
    for (unsigned ell : {8u, 16u, 32u, 64u}) {
        Ring rg(ell);
        for (int i = 0; i < 2000; ++i) {
            unsigned f = static_cast<unsigned>(rng.next() % ell);
            u64 x = rng.next_ring(rg);
            i64 expect = floor_div_pow2(rg.to_signed(x), f);
            CHECK(rg.shift_right_signed(x, f) == rg.from_signed(expect));
        }
    }
}

TEST_CASE("odd inverse examples") {
    Ring r8(8);
    CHECK(Ring(64).inverse_odd(1) == 1);
    CHECK(r8.inverse_odd(3) == 171);  // 3 * 171 = 513 = 2*256 + 1
    CHECK_THROWS_AS(Ring(64).inverse_odd(2), ArgumentError);
}

TEST_CASE("odd inverse property at several widths") {
    for (unsigned ell : {8u, 16u, 64u}) {
        Ring rg(ell);
        CounterRng rng(13, ell, "test");
        for (int i = 0; i < 10000; ++i) {
            u64 x = rng.next_ring(rg) | 1;
            CHECK(rg.mul(x, rg.inverse_odd(x)) == 1);
        }
    }
}

TEST_CASE("ring laws on random inputs") {
    for (unsigned ell : {8u, 24u, 64u}) {
        Ring rg(ell);
        CounterRng rng(17, ell, "test");
        for (int i = 0; i < 5000; ++i) {
            u64 a = rng.next_ring(rg), b = rng.next_ring(rg), c = rng.next_ring(rg);
            CHECK(rg.add(a, b) == rg.add(b, a));
            CHECK(rg.mul(a, b) == rg.mul(b, a));
            CHECK(rg.add(rg.add(a, b), c) == rg.add(a, rg.add(b, c)));
            CHECK(rg.mul(rg.mul(a, b), c) == rg.mul(a, rg.mul(b, c)));
            CHECK(rg.mul(a, rg.add(b, c)) == rg.add(rg.mul(a, b), rg.mul(a, c)));
            CHECK(rg.add(a, rg.neg(a)) == 0);
        }
    }
}

TEST_CASE("two's complement view") {
    Ring r(8);
    CHECK(r.to_signed(0x80) == -128);
    CHECK(r.to_signed(0x7f) == 127);
    CHECK(r.from_signed(-1) == 0xff);
    CHECK(r.msb(0x80));
    CHECK(!r.msb(0x7f));
}

TEST_CASE("counter rng streams are keyed and reproducible") {
    CounterRng a(42, 1, "x"), b(42, 1, "x"), c(42, 2, "x"), d(42, 1, "y");
    for (int i = 0; i < 100; ++i) {
        u64 v = a.next();
        CHECK(v == b.next());
        CHECK(v != c.next());  // overwhelmingly likely
        CHECK(v != d.next());
    }
}

TEST_CASE("uniformity of a narrow stream (chi squared)") {
    // 10^5 draws over 256 buckets; 99% critical value for 255 dof is ~310.5
    Ring r8(8);
    CounterRng rng(99, 0, "chi");
    std::array<u64, 256> cnt{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++cnt[rng.next_ring(r8)];
    double expect = n / 256.0, chi = 0;
    for (u64 k : cnt) chi += (k - expect) * (k - expect) / expect;
    CHECK(chi < 310.5);
}
