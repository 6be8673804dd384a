#pragma once

#include <optional>

#include "pmpl/pool.hpp"
#include "pmpl/transport.hpp"
#include "pmpl/vsss.hpp"

namespace pmpl {

enum class Mode { three_party, two_party_after_drop };

// Party-local view of a <.>-shared matrix. `alt` carries the index-3 share
// and is populated only at the privileged party.
struct SharedMatrix {
    RingMatrix main, alt;
    size_t rows() const { return main.rows(); }
    size_t cols() const { return main.cols(); }
};

// Party-local view of an additively shared matrix. In 2PC mode the
// privileged party contributes two addends (indices 0 and 3); `alt` holds
// the second one.
struct AddMatrix {
    RingMatrix main, alt;
    size_t rows() const { return main.rows(); }
    size_t cols() const { return main.cols(); }
};

// XOR-shared bits, one packed word per element. Adder circuits use all ell
// lanes of a word; single-bit values live in lane 0.
struct BoolMatrix {
    size_t rows = 0, cols = 0;
    std::vector<u64> words;
    size_t size() const { return words.size(); }
};

// One party's protocol engine. Operations are strictly sequenced; a session
// owns its transport and pool cursors. The same code runs at every party
// (SPMD) and branches on the role internally.
class Engine {
  public:
    Engine(int party, DomainParams params, Transport& net, PoolReader* pool, u64 seed);

    int party() const { return me_; }
    Mode mode() const { return mode_; }
    const DomainParams& params() const { return params_; }
    const FixedCodec& codec() const { return codec_; }
    const Ring& ring() const { return ring_; }
    Transport& net() { return *net_; }

    // Compares pool fingerprints across live parties; one round.
    void verify_pool();

    // Cooperative drop signal: the mode switches before the next operation.
    // Only P2 may leave, and only once.
    void raise_drop();
    // Maps an observed socket close on P2's links to the same signal.
    bool poll_peer_drop();
    bool is_live() const { return !(me_ == 2 && mode_ == Mode::two_party_after_drop); }

    // local linear layer
    SharedMatrix add(const SharedMatrix& a, const SharedMatrix& b) const;
    SharedMatrix sub(const SharedMatrix& a, const SharedMatrix& b) const;
    SharedMatrix scale(u64 k, const SharedMatrix& a) const;
    SharedMatrix add_public(const SharedMatrix& a, u64 k) const;  // every entry + k
    SharedMatrix transpose(const SharedMatrix& a) const;
    SharedMatrix rows_subset(const SharedMatrix& a, const std::vector<size_t>& idx) const;

    // input distribution and openings
    SharedMatrix share_input(const RingMatrix& x);
    SharedMatrix receive_input(int owner, size_t rows, size_t cols);
    RingMatrix open(const SharedMatrix& x);
    std::optional<RingMatrix> reveal_to_p0(const SharedMatrix& x);

    // preprocessed multiplicative layer
    SharedMatrix matmul(const SharedMatrix& x, const SharedMatrix& y);
    SharedMatrix mul_elem(const SharedMatrix& x, const SharedMatrix& y);
    SharedMatrix trunc(const SharedMatrix& z);

    // share conversions
    AddMatrix v2a(const SharedMatrix& x) const;
    SharedMatrix a2v(const AddMatrix& x);
    BoolMatrix msb(const AddMatrix& x);
    AddMatrix bit2a(const BoolMatrix& b);
    BoolMatrix bool_not(const BoolMatrix& b) const;
    BoolMatrix bool_and_bits(const BoolMatrix& a, const BoolMatrix& b);  // lane 0 only

    // activation pipelines; gate_out receives the <1 xor sign(x)> bit matrix
    SharedMatrix relu(const SharedMatrix& x, SharedMatrix* gate_out = nullptr);
    SharedMatrix sigmoid(const SharedMatrix& x);

    // Per-element boolean-triple words one msb extraction consumes.
    static u64 msb_triple_words(unsigned ell, int addend_count);

    // True when Protocol-5 style coefficient division applies in this mode.
    bool a2v_fast_path() const;

  private:
    struct OpenedPair;
    std::vector<int> live_peers() const;
    int addend_count() const { return mode_ == Mode::three_party ? 3 : 2; }
    RingMatrix open_impl(const RingMatrix& main, const RingMatrix& alt, FrameKind kind);
    std::vector<BoolMatrix> bool_share_addends(const AddMatrix& x);
    BoolMatrix bool_add(const BoolMatrix& a, const BoolMatrix& b);
    // batched AND over full words; consumes one triple word per element per gate
    void bool_and_layer(const std::vector<const BoolMatrix*>& lhs,
                        const std::vector<const BoolMatrix*>& rhs,
                        std::vector<BoolMatrix*> out);
    u32 next_tag() { return tag_++; }
    void require_live() const;

    int me_;
    DomainParams params_;
    Ring ring_;
    FixedCodec codec_;
    Mode mode_ = Mode::three_party;
    Transport* net_;
    PoolReader* pool_;
    CounterRng rng_;
    u32 tag_ = 1;
};

}  // namespace pmpl
