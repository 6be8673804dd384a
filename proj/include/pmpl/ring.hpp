#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "pmpl/errors.hpp"

namespace pmpl {

using u64 = std::uint64_t;
using i64 = std::int64_t;

// Arithmetic over Z_{2^ell}, ell in [2, 64]. Values are stored in the low
// `ell` bits of a u64; every operation wraps and re-masks. The signed view is
// two's complement: residues >= 2^{ell-1} are negative.
class Ring {
  public:
    explicit Ring(unsigned ell = 64) : ell_(ell) {
        if (ell < 2 || ell > 64) throw ArgumentError("ring width must be in [2, 64]");
        mask_ = (ell == 64) ? ~u64{0} : ((u64{1} << ell) - 1);
        sign_bit_ = u64{1} << (ell - 1);
    }

    unsigned ell() const { return ell_; }
    u64 mask() const { return mask_; }

    u64 reduce(u64 x) const { return x & mask_; }
    u64 add(u64 a, u64 b) const { return (a + b) & mask_; }
    u64 sub(u64 a, u64 b) const { return (a - b) & mask_; }
    u64 mul(u64 a, u64 b) const { return (a * b) & mask_; }
    u64 neg(u64 a) const { return (0 - a) & mask_; }

    bool msb(u64 a) const { return (a & sign_bit_) != 0; }

    i64 to_signed(u64 a) const {
        a &= mask_;
        return msb(a) ? static_cast<i64>(a) - static_cast<i64>(mask_) - 1 : static_cast<i64>(a);
    }
    u64 from_signed(i64 v) const { return static_cast<u64>(v) & mask_; }

    // Floor division of the signed view by 2^f, re-encoded into the ring.
    u64 shift_right_signed(u64 a, unsigned f) const {
        if (f >= ell_) throw ArgumentError("shift amount out of range");
        i64 s = to_signed(a);
        // i64 >> is arithmetic on all supported targets; floor semantics.
        return from_signed(s >> f);
    }

    // 2-adic valuation; ell_ for zero.
    unsigned val2(u64 a) const {
        a &= mask_;
        if (a == 0) return ell_;
        unsigned v = 0;
        while ((a & 1) == 0) { a >>= 1; ++v; }
        return v;
    }

    // Multiplicative inverse of an odd element, by Newton lifting:
    // y <- y(2 - ay) doubles the number of correct low bits each step.
    u64 inverse_odd(u64 a) const {
        a &= mask_;
        if ((a & 1) == 0) throw ArgumentError("even element has no inverse mod 2^ell");
        u64 y = 1;
        for (int i = 0; i < 6; ++i) y = y * (2 - a * y);  // exact mod 2^64
        return y & mask_;
    }

  private:
    unsigned ell_;
    u64 mask_;
    u64 sign_bit_;
};

// Fixed-point codec: rationals scaled by 2^{frac_bits} and embedded in the ring.
class FixedCodec {
  public:
    FixedCodec() : FixedCodec(Ring(64), 20) {}
    FixedCodec(Ring ring, unsigned frac_bits) : ring_(ring), frac_(frac_bits) {
        if (frac_bits >= ring.ell()) throw ArgumentError("frac bits must be below ring width");
    }

    const Ring& ring() const { return ring_; }
    unsigned frac_bits() const { return frac_; }
    u64 one() const { return u64{1} << frac_; }

    // round-half-away-from-zero; |q| must stay below 2^{ell-1-frac}.
    u64 encode(double q) const {
        double scaled = q * static_cast<double>(one());
        double limit = std::ldexp(1.0, static_cast<int>(ring_.ell() - 1));
        if (!(std::fabs(scaled) < limit)) throw ArgumentError("value out of fixed-point range");
        double r = scaled >= 0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
        return ring_.from_signed(static_cast<i64>(r));
    }

    double decode(u64 x) const {
        return static_cast<double>(ring_.to_signed(x)) / static_cast<double>(one());
    }

  private:
    Ring ring_;
    unsigned frac_;
};

}  // namespace pmpl
