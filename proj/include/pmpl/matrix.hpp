#pragma once

#include <cstddef>
#include <vector>

#include "pmpl/ring.hpp"

namespace pmpl {

// Dense row-major matrix of ring residues. The element type is always u64;
// reduction happens through the Ring passed to the mutating helpers.
class RingMatrix {
  public:
    RingMatrix() = default;
    RingMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), v_(rows * cols, 0) {}
    RingMatrix(size_t rows, size_t cols, std::vector<u64> data)
        : rows_(rows), cols_(cols), v_(std::move(data)) {
        if (v_.size() != rows * cols) throw ArgumentError("matrix data size mismatch");
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    u64& at(size_t r, size_t c) { return v_[r * cols_ + c]; }
    u64 at(size_t r, size_t c) const { return v_[r * cols_ + c]; }
    u64& operator[](size_t i) { return v_[i]; }
    u64 operator[](size_t i) const { return v_[i]; }

    std::vector<u64>& data() { return v_; }
    const std::vector<u64>& data() const { return v_; }

    bool same_shape(const RingMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool operator==(const RingMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && v_ == o.v_;
    }

    RingMatrix transposed() const {
        RingMatrix t(cols_, rows_);
        for (size_t r = 0; r < rows_; ++r)
            for (size_t c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
        return t;
    }

    RingMatrix rows_subset(const std::vector<size_t>& idx) const {
        RingMatrix out(idx.size(), cols_);
        for (size_t i = 0; i < idx.size(); ++i)
            for (size_t c = 0; c < cols_; ++c) out.at(i, c) = at(idx[i], c);
        return out;
    }

  private:
    size_t rows_ = 0, cols_ = 0;
    std::vector<u64> v_;
};

inline RingMatrix mat_add(const Ring& rg, const RingMatrix& a, const RingMatrix& b) {
    if (!a.same_shape(b)) throw ArgumentError("matrix addition shape mismatch");
    RingMatrix z(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) z[i] = rg.add(a[i], b[i]);
    return z;
}

inline RingMatrix mat_sub(const Ring& rg, const RingMatrix& a, const RingMatrix& b) {
    if (!a.same_shape(b)) throw ArgumentError("matrix subtraction shape mismatch");
    RingMatrix z(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) z[i] = rg.sub(a[i], b[i]);
    return z;
}

inline RingMatrix mat_scale(const Ring& rg, u64 k, const RingMatrix& a) {
    RingMatrix z(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) z[i] = rg.mul(k, a[i]);
    return z;
}

inline RingMatrix mat_mul(const Ring& rg, const RingMatrix& a, const RingMatrix& b) {
    if (a.cols() != b.rows()) throw ArgumentError("matrix product shape mismatch");
    RingMatrix z(a.rows(), b.cols());
    for (size_t r = 0; r < a.rows(); ++r) {
        for (size_t k = 0; k < a.cols(); ++k) {
            u64 arc = a.at(r, k);
            if (arc == 0) continue;
            for (size_t c = 0; c < b.cols(); ++c)
                z.at(r, c) += arc * b.at(k, c);  // wraps mod 2^64, reduced below
        }
    }
    for (size_t i = 0; i < z.size(); ++i) z[i] = rg.reduce(z[i]);
    return z;
}

inline RingMatrix mat_elemwise(const Ring& rg, const RingMatrix& a, const RingMatrix& b) {
    if (!a.same_shape(b)) throw ArgumentError("elementwise product shape mismatch");
    RingMatrix z(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) z[i] = rg.mul(a[i], b[i]);
    return z;
}

}  // namespace pmpl
