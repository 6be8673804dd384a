#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "pmpl/ring.hpp"

namespace pmpl {

namespace detail {
// 64-bit finalizer from splitmix64; full-period, passes the statistical tests
// we care about here. This generator provides reproducibility, not secrecy:
// a deployment would swap in AES-CTR behind the same interface.
inline u64 mix64(u64 z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline u64 fold(u64 key, u64 word) {
    return mix64(key ^ (word * 0xff51afd7ed558ccdULL));
}
}  // namespace detail

// Deterministic counter-mode generator keyed by (seed, party, purpose).
// Streams with distinct keys are independent; the same key always replays
// the same stream.
class CounterRng {
  public:
    CounterRng(u64 seed, unsigned party, std::string_view purpose) {
        u64 k = detail::mix64(seed);
        k = detail::fold(k, 0x70617274ULL + party);  // "part"
        for (char c : purpose) k = detail::fold(k, static_cast<u64>(static_cast<unsigned char>(c)));
        key_ = k;
    }

    u64 next() { return detail::fold(key_, counter_++); }

    u64 next_ring(const Ring& r) { return next() & r.mask(); }

    // uniform over [0, bound) by rejection on the top bits
    u64 next_below(u64 bound) {
        if (bound == 0) throw ArgumentError("bound must be positive");
        if ((bound & (bound - 1)) == 0) return next() & (bound - 1);
        u64 limit = ~u64{0} - (~u64{0} % bound + 1) % bound;
        u64 x;
        do { x = next(); } while (x > limit);
        return x % bound;
    }

    // uniform double in (lo, hi)
    double next_real(double lo, double hi) {
        double u = static_cast<double>(next() >> 11) / 9007199254740992.0;  // [0,1)
        return lo + (hi - lo) * u;
    }

    u64 key() const { return key_; }

  private:
    u64 key_ = 0;
    u64 counter_ = 0;
};

// 32-byte digest over a word stream; ties pool files of one dealer run together.
class Fingerprint {
  public:
    void absorb(u64 w) {
        for (auto& lane : state_) {
            lane = detail::fold(lane, w);
            w = detail::mix64(w + 0x632be59bd9b4e019ULL);
        }
    }
    void absorb_bytes(const void* p, size_t n) {
        auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) absorb(b[i]);
    }
    std::array<unsigned char, 32> digest() const {
        std::array<unsigned char, 32> out{};
        for (int i = 0; i < 4; ++i) {
            u64 w = detail::mix64(state_[i]);
            for (int j = 0; j < 8; ++j) out[i * 8 + j] = static_cast<unsigned char>(w >> (8 * j));
        }
        return out;
    }

  private:
    std::array<u64, 4> state_{0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL,
                              0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL};
};

}  // namespace pmpl
