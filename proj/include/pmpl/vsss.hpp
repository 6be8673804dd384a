#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pmpl/matrix.hpp"
#include "pmpl/ring.hpp"
#include "pmpl/rng.hpp"

namespace pmpl {

// The 4x3 public matrix: one row per party plus the alternate row held by
// the privileged party. Row 3 must be a combination of rows 1 and 2.
struct PublicMatrix {
    unsigned ell = 64;
    std::array<std::array<u64, 3>, 4> rows{};

    Ring ring() const { return Ring(ell); }
};

// All reconstruction coefficients: c over {0,1,2}, cp over {0,1,3},
// cpp over {0,2,3}, plus the alternate-row combination (a1, a2).
struct Coefficients {
    u64 c0 = 0, c1 = 0, c2 = 0;
    u64 cp0 = 0, cp1 = 0, cp3 = 0;
    u64 cpp0 = 0, cpp2 = 0, cpp3 = 0;
    u64 a1 = 0, a2 = 0;

    std::array<u64, 11> packed() const {
        return {c0, c1, c2, cp0, cp1, cp3, cpp0, cpp2, cpp3, a1, a2};
    }
    static Coefficients from_packed(const std::array<u64, 11>& p) {
        return {p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9], p[10]};
    }
};

// One share of one secret: index 3 is the alternate share co-located with
// index 0 at the privileged party.
struct VShare {
    unsigned index = 0;
    u64 value = 0;
};

// A complete sharing, by index.
using ShareQuad = std::array<u64, 4>;

namespace linalg {
// Solve M x = b over Z_{2^ell} by elimination with minimum-2-adic-valuation
// pivoting. Returns the canonical solution (free 2-adic bits set to zero),
// or nullopt when some level of the 2-adic tower is unsolvable.
std::optional<std::vector<u64>> solve(const Ring& rg, std::vector<std::vector<u64>> m,
                                      std::vector<u64> b);
u64 det3(const Ring& rg, const std::array<std::array<u64, 3>, 3>& m);
}  // namespace linalg

// Checks the four restrictions (plus the odd-divisor requirement that the
// truncation protocols add) and solves for every coefficient set.
Coefficients validate_matrix(const PublicMatrix& pm);

// Protocol-level sharing: phi(i) . (x, s1, s2) for each index.
ShareQuad share_value(const PublicMatrix& pm, u64 x, u64 s1, u64 s2);
ShareQuad share_value(const PublicMatrix& pm, u64 x, CounterRng& rng);

struct MatrixSharing {
    std::array<RingMatrix, 4> by_index;
};

// Fig.-3 matrix sharing: flatten, stack two random rows, multiply by phi.
MatrixSharing share_matrix(const PublicMatrix& pm, const RingMatrix& x, CounterRng& rng);

u64 reconstruct3(const PublicMatrix& pm, const Coefficients& co, const VShare& s0,
                 const VShare& s1, const VShare& s2);
// {0,1,3} via cp, or {0,2,3} via cpp
u64 reconstruct2(const PublicMatrix& pm, const Coefficients& co, const VShare& sa,
                 const VShare& sb, const VShare& sc);

u64 reconstruct_quad(const PublicMatrix& pm, const Coefficients& co, const ShareQuad& q);
RingMatrix reconstruct_quad(const PublicMatrix& pm, const Coefficients& co,
                            const MatrixSharing& m);

VShare lincomb(const Ring& rg, u64 k1, const VShare& a, u64 k2, const VShare& b);

// Serialized public parameters as they appear in pool-file headers.
struct DomainParams {
    unsigned ell = 64;
    unsigned frac_bits = 20;
    unsigned sigma = 8;
    PublicMatrix matrix;
    Coefficients coef;

    FixedCodec codec() const { return FixedCodec(Ring(ell), frac_bits); }
};

// The concrete matrix the protocols default to.
PublicMatrix reference_matrix(unsigned ell);

}  // namespace pmpl
