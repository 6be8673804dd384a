#pragma once

#include <array>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "pmpl/matrix.hpp"
#include "pmpl/vsss.hpp"

namespace pmpl {

// Preprocessing material kinds, in file order. The 2-party flavors exist
// because additive/boolean sharings do not survive a drop; vector-space
// shared material (vmt, matrix, trunc, kshare) does.
enum class PoolKind : std::uint8_t {
    vmt = 1,
    matrix = 2,
    trunc_pair = 3,
    dabit3 = 4,
    dabit2 = 5,
    booltriple3 = 6,
    booltriple2 = 7,
    kshare = 8,
};
constexpr int kPoolKindCount = 8;

// Party-local views. The *_alt fields are meaningful only in P0's pool.
struct VmtItem { u64 u = 0, v = 0, h = 0, u_alt = 0, v_alt = 0, h_alt = 0; };

struct MatTripleItem {
    size_t n = 0, d = 0, m = 0;
    RingMatrix u, v, h, u_alt, v_alt, h_alt;
};

struct TruncPairItem {
    u64 r = 0, r_shift = 0;
    u64 bits = 0;  // boolean share word of the edabit bits; kept, not consumed
    u64 r_alt = 0, r_shift_alt = 0;
};

struct DaBitItem { u64 arith = 0; u64 boolean = 0; };  // boolean: bit 0

struct BoolTripleItem { u64 a = 0, b = 0, c = 0; };  // packed 64-lane AND triples

struct KShareItem { u64 k = 0, k_alt = 0; };

struct PoolPlan {
    u64 vmt = 0;
    std::vector<std::array<u64, 3>> matrix_shapes;  // (n, d, m) in consumption order
    u64 trunc_pairs = 0;
    u64 dabit3 = 0, dabit2 = 0;
    u64 booltriple3 = 0, booltriple2 = 0;
    u64 kshare = 0;

    PoolPlan& operator+=(const PoolPlan& o);
};

struct PoolHeader {
    DomainParams params;
    unsigned party = 0;
    std::array<unsigned char, 32> fingerprint{};
};

std::string pool_file_name(const std::string& dir, unsigned party);

// Deterministic: one (seed, plan, params) tuple produces byte-identical files.
void dealer_generate(const DomainParams& params, const PoolPlan& plan, u64 seed,
                     const std::string& dir);

std::array<unsigned char, 32> pool_fingerprint(const DomainParams& params, const PoolPlan& plan,
                                               u64 seed);

// Assembles one party's pool file from explicit items; the dealer is the
// usual producer, but interactively generated material can be persisted the
// same way and is indistinguishable to the online layer.
class PoolWriter {
  public:
    PoolWriter(DomainParams params, unsigned party, std::array<unsigned char, 32> fingerprint)
        : header_{std::move(params), party, fingerprint} {}

    void add_vmt(const VmtItem& it);
    void add_matrix(const MatTripleItem& it);
    void add_trunc(const TruncPairItem& it);
    void add_dabit(bool three_party, const DaBitItem& it);
    void add_booltriple(bool three_party, const BoolTripleItem& it);
    void add_kshare(const KShareItem& it);
    void write(const std::string& path) const;

  private:
    PoolHeader header_;
    std::array<std::vector<u64>, kPoolKindCount + 1> words_;
    std::array<u64, kPoolKindCount + 1> counts_{};
};

// Sequential consumer over one party's pool file. Cursors only advance.
class PoolReader {
  public:
    explicit PoolReader(const std::string& path);
    ~PoolReader();
    PoolReader(PoolReader&&) noexcept;
    PoolReader& operator=(PoolReader&&) noexcept;

    const PoolHeader& header() const { return header_; }
    u64 remaining(PoolKind k) const;

    VmtItem next_vmt();
    std::array<u64, 3> peek_matrix_shape();  // dims of the next matrix triple
    MatTripleItem next_matrix(size_t n, size_t d, size_t m);
    TruncPairItem next_trunc();
    DaBitItem next_dabit(bool three_party);
    BoolTripleItem next_booltriple(bool three_party);
    KShareItem next_kshare();

  private:
    struct Section;
    std::vector<u64> take(PoolKind k, size_t words, const char* what);
    PoolHeader header_;
    std::FILE* f_ = nullptr;
    std::unique_ptr<Section[]> sections_;
};

// Dealer-side full view of every generated secret, for validators and the
// mask-synchronized training oracle. Reconstructs from all three files.
struct PoolTrace {
    std::vector<std::array<u64, 2>> trunc_secrets;  // (r, r >> frac) per pair
    DomainParams params;
};

PoolTrace load_pool_trace(const std::string& dir);

// Cross-checks every item of a dealer run against its type invariant.
// Returns the number of items checked; throws on the first violation.
u64 validate_pools(const std::string& dir);

}  // namespace pmpl
