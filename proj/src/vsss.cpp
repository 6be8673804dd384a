#include "pmpl/vsss.hpp"

#include <algorithm>

namespace pmpl {

namespace linalg {

u64 det3(const Ring& rg, const std::array<std::array<u64, 3>, 3>& m) {
    u64 d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
            m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
            m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    return rg.reduce(d);
}

std::optional<std::vector<u64>> solve(const Ring& rg, std::vector<std::vector<u64>> m,
                                      std::vector<u64> b) {
    const size_t nrows = m.size();
    const size_t ncols = nrows ? m[0].size() : 0;
    std::vector<size_t> pivot_row, pivot_col;
    std::vector<bool> row_used(nrows, false), col_used(ncols, false);

    for (;;) {
        // pick the remaining entry with minimal 2-adic valuation
        unsigned best_v = rg.ell() + 1;
        size_t br = 0, bc = 0;
        for (size_t r = 0; r < nrows; ++r) {
            if (row_used[r]) continue;
            for (size_t c = 0; c < ncols; ++c) {
                if (col_used[c] || rg.reduce(m[r][c]) == 0) continue;
                unsigned v = rg.val2(m[r][c]);
                if (v < best_v) { best_v = v; br = r; bc = c; }
            }
        }
        if (best_v > rg.ell()) break;  // no nonzero entries left

        row_used[br] = true;
        col_used[bc] = true;
        pivot_row.push_back(br);
        pivot_col.push_back(bc);

        u64 p = rg.reduce(m[br][bc]);
        unsigned pv = rg.val2(p);
        u64 p_odd_inv = rg.inverse_odd(p >> pv);
        for (size_t r = 0; r < nrows; ++r) {
            if (r == br) continue;
            u64 e = rg.reduce(m[r][bc]);
            if (e == 0) continue;
            // valuation of e is >= pv by pivot choice, so the quotient is exact
            u64 f = rg.mul(e >> pv, p_odd_inv);
            for (size_t c = 0; c < ncols; ++c) m[r][c] = rg.sub(m[r][c], rg.mul(f, m[br][c]));
            b[r] = rg.sub(b[r], rg.mul(f, b[br]));
        }
    }

    // rows without a pivot must have zero rhs
    for (size_t r = 0; r < nrows; ++r)
        if (!row_used[r] && rg.reduce(b[r]) != 0) return std::nullopt;

    // back-substitute in reverse pivot order
    std::vector<u64> x(ncols, 0);
    for (size_t k = pivot_row.size(); k-- > 0;) {
        size_t r = pivot_row[k], c = pivot_col[k];
        u64 rhs = b[r];
        for (size_t j = 0; j < ncols; ++j)
            if (j != c) rhs = rg.sub(rhs, rg.mul(m[r][j], x[j]));
        u64 p = rg.reduce(m[r][c]);
        unsigned pv = rg.val2(p);
        if (rg.val2(rhs) < pv) return std::nullopt;  // this 2-adic level has no solution
        if (rg.reduce(rhs) == 0) { x[c] = 0; continue; }
        // canonical representative: quotient taken in Z_{2^{ell-pv}}, high bits zero
        u64 q = rg.mul(rhs >> pv, rg.inverse_odd(p >> pv));
        if (pv > 0) q &= (u64{1} << (rg.ell() - pv)) - 1;
        x[c] = q;
    }
    return x;
}

}  // namespace linalg

namespace {

// columns are the chosen public vectors; solve for coefficients reproducing (1,0,0)
std::optional<std::vector<u64>> solve_target(const Ring& rg, const PublicMatrix& pm,
                                             const std::vector<int>& rows_in,
                                             const std::array<u64, 3>& target) {
    std::vector<std::vector<u64>> m(3, std::vector<u64>(rows_in.size()));
    for (size_t j = 0; j < rows_in.size(); ++j)
        for (size_t i = 0; i < 3; ++i) m[i][j] = rg.reduce(pm.rows[rows_in[j]][i]);
    return linalg::solve(rg, m, {target[0], target[1], target[2]});
}

}  // namespace

Coefficients validate_matrix(const PublicMatrix& pm) {
    Ring rg = pm.ring();
    std::vector<std::string> bad;
    Coefficients co;

    // restriction 1: rows 0..2 invertible (odd determinant) and (1,0,0) in their span
    std::array<std::array<u64, 3>, 3> top{pm.rows[0], pm.rows[1], pm.rows[2]};
    bool invertible = (linalg::det3(rg, top) & 1) != 0;
    if (!invertible) bad.push_back("restriction-1 (rows 0..2 must have odd determinant)");

    auto c = solve_target(rg, pm, {0, 1, 2}, {1, 0, 0});
    if (c) {
        co.c0 = (*c)[0]; co.c1 = (*c)[1]; co.c2 = (*c)[2];
        if (co.c0 == 0 || co.c1 == 0 || co.c2 == 0)
            bad.push_back("restriction-1 (coefficients c0..c2 must be nonzero)");
    } else if (invertible) {
        bad.push_back("restriction-1 ((1,0,0) not in the span of rows 0..2)");
    }

    // restriction 2: row 3 = a1*row1 + a2*row2 with both nonzero
    auto a = solve_target(rg, pm, {1, 2}, {pm.rows[3][0], pm.rows[3][1], pm.rows[3][2]});
    if (a) {
        co.a1 = (*a)[0]; co.a2 = (*a)[1];
        if (co.a1 == 0 || co.a2 == 0)
            bad.push_back("restriction-2 (alternate-row coefficients must be nonzero)");
    } else {
        bad.push_back("restriction-2 (row 3 is not a combination of rows 1 and 2)");
    }

    auto cp = solve_target(rg, pm, {0, 1, 3}, {1, 0, 0});
    if (cp) {
        co.cp0 = (*cp)[0]; co.cp1 = (*cp)[1]; co.cp3 = (*cp)[2];
        if (co.cp0 == 0 || co.cp1 == 0 || co.cp3 == 0)
            bad.push_back("restriction-2 (coefficients c'0,c'1,c'3 must be nonzero)");
    } else {
        bad.push_back("restriction-2 ((1,0,0) not in the span of rows 0,1,3)");
    }

    auto cpp = solve_target(rg, pm, {0, 2, 3}, {1, 0, 0});
    if (cpp) {
        co.cpp0 = (*cpp)[0]; co.cpp2 = (*cpp)[1]; co.cpp3 = (*cpp)[2];
        if (co.cpp0 == 0 || co.cpp2 == 0 || co.cpp3 == 0)
            bad.push_back("restriction-2 (coefficients c''0,c''2,c''3 must be nonzero)");
    } else {
        bad.push_back("restriction-2 ((1,0,0) not in the span of rows 0,2,3)");
    }

    // restriction 3: unauthorized sets must not span (1,0,0)
    if (solve_target(rg, pm, {0, 3}, {1, 0, 0}))
        bad.push_back("restriction-3 ((1,0,0) reachable from rows 0 and 3)");
    if (solve_target(rg, pm, {1, 2, 3}, {1, 0, 0}))
        bad.push_back("restriction-3 ((1,0,0) reachable from rows 1,2,3)");

    // restriction 4 holds by representation (entries are reduced residues);
    // the truncation protocols additionally need odd leading divisors.
    if (c && (co.c0 & 1) == 0) bad.push_back("odd-divisor (c0 must be odd)");
    if (cp && (co.cp0 & 1) == 0) bad.push_back("odd-divisor (c'0 must be odd)");

    if (!bad.empty()) throw ValidationError(std::move(bad));
    return co;
}

ShareQuad share_value(const PublicMatrix& pm, u64 x, u64 s1, u64 s2) {
    Ring rg = pm.ring();
    ShareQuad q;
    for (int i = 0; i < 4; ++i) {
        const auto& row = pm.rows[i];
        q[i] = rg.reduce(row[0] * x + row[1] * s1 + row[2] * s2);
    }
    return q;
}

ShareQuad share_value(const PublicMatrix& pm, u64 x, CounterRng& rng) {
    Ring rg = pm.ring();
    return share_value(pm, x, rng.next_ring(rg), rng.next_ring(rg));
}

MatrixSharing share_matrix(const PublicMatrix& pm, const RingMatrix& x, CounterRng& rng) {
    if (x.empty()) throw ArgumentError("cannot share an empty matrix");
    Ring rg = pm.ring();
    MatrixSharing out;
    for (auto& m : out.by_index) m = RingMatrix(x.rows(), x.cols());
    // stacked rows (x', s1, s2) of length n*d; shares are phi(k) times the stack
    for (size_t i = 0; i < x.size(); ++i) {
        u64 s1 = rng.next_ring(rg), s2 = rng.next_ring(rg);
        for (int k = 0; k < 4; ++k) {
            const auto& row = pm.rows[k];
            out.by_index[k][i] = rg.reduce(row[0] * x[i] + row[1] * s1 + row[2] * s2);
        }
    }
    return out;
}

u64 reconstruct3(const PublicMatrix& pm, const Coefficients& co, const VShare& s0,
                 const VShare& s1, const VShare& s2) {
    if (s0.index != 0 || s1.index != 1 || s2.index != 2)
        throw ArgumentError("reconstruct3 expects share indices {0,1,2}");
    Ring rg = pm.ring();
    return rg.reduce(co.c0 * s0.value + co.c1 * s1.value + co.c2 * s2.value);
}

u64 reconstruct2(const PublicMatrix& pm, const Coefficients& co, const VShare& sa,
                 const VShare& sb, const VShare& sc) {
    Ring rg = pm.ring();
    if (sa.index == 0 && sb.index == 1 && sc.index == 3)
        return rg.reduce(co.cp0 * sa.value + co.cp1 * sb.value + co.cp3 * sc.value);
    if (sa.index == 0 && sb.index == 2 && sc.index == 3)
        return rg.reduce(co.cpp0 * sa.value + co.cpp2 * sb.value + co.cpp3 * sc.value);
    throw ArgumentError("reconstruct2 expects share indices {0,1,3} or {0,2,3}");
}

u64 reconstruct_quad(const PublicMatrix& pm, const Coefficients& co, const ShareQuad& q) {
    return reconstruct3(pm, co, {0, q[0]}, {1, q[1]}, {2, q[2]});
}

RingMatrix reconstruct_quad(const PublicMatrix& pm, const Coefficients& co,
                            const MatrixSharing& m) {
    Ring rg = pm.ring();
    RingMatrix out(m.by_index[0].rows(), m.by_index[0].cols());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = rg.reduce(co.c0 * m.by_index[0][i] + co.c1 * m.by_index[1][i] +
                           co.c2 * m.by_index[2][i]);
    return out;
}

VShare lincomb(const Ring& rg, u64 k1, const VShare& a, u64 k2, const VShare& b) {
    if (a.index != b.index) throw ArgumentError("lincomb shares must have the same index");
    return {a.index, rg.reduce(k1 * a.value + k2 * b.value)};
}

PublicMatrix reference_matrix(unsigned ell) {
    Ring rg(ell);
    PublicMatrix pm;
    pm.ell = ell;
    pm.rows = {{{1, 0, 1},
                {1, 1, rg.from_signed(-1)},
                {2, 2, rg.from_signed(-3)},
                {3, 3, rg.from_signed(-4)}}};
    return pm;
}

}  // namespace pmpl
