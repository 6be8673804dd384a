#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <vector>

#include "pmpl/rng.hpp"

namespace pmpl {

using u32 = std::uint32_t;

// Frame kinds on the wire. One exchange uses one kind; the (tag, kind)
// sequence must be identical across parties for a schedule to be well formed.
enum class FrameKind : std::uint8_t {
    hello = 1,
    pool_check = 2,   // fingerprint comparison at session start
    input_share = 3,  // Protocol-1 share distribution
    open = 4,         // masked-value openings (e, f)
    trunc = 5,        // z - r shares towards P0
    reshare = 6,      // additive-to-vector conversion
    alt_mask = 7,     // masked shares for the alternate-share fast path
    bool_share = 8,   // boolean input sharing for the adder circuit
    bool_open = 9,    // AND-gate openings
    bit_open = 10,    // single-bit openings (bit2a)
    reveal = 11,      // model reveal towards P0 only
};

struct Frame {
    FrameKind kind{};
    std::vector<u64> words;  // ring elements, or packed bits
    u64 bits = 0;            // logical payload size for metering
};

// Payload-bit metering per Table-4 semantics: headers excluded, one ring
// element counts ell bits, boolean payloads count their exact bit width.
struct ChannelStats {
    std::array<u64, 3> bits_sent_to{};    // indexed by destination party
    std::array<u64, 3> frames_sent_to{};
    std::array<std::array<u64, 16>, 3> frames_recv_kind{};  // [source][kind]
    u64 rounds = 0;
    u64 schedule_hash = 0;

    u64 total_bits_sent() const { return bits_sent_to[0] + bits_sent_to[1] + bits_sent_to[2]; }
};

class Transport {
  public:
    virtual ~Transport() = default;

    // Rendezvous round: deliver `out` and block until a frame with this
    // (tag, kind) has arrived from every party in `expect`.
    virtual std::map<int, Frame> exchange(u32 tag, FrameKind kind, std::map<int, Frame> out,
                                          const std::set<int>& expect) = 0;

    // True once the peer's links are observed closed (TCP); in-process
    // transports never report this on their own.
    virtual bool peer_gone(int peer) = 0;

    // Tears the session down so peers blocked in exchange() fail fast
    // instead of waiting forever (used when a party aborts on error).
    virtual void abort_session() = 0;

    virtual int self() const = 0;

    const ChannelStats& stats() const { return stats_; }

  protected:
    void note_round(u32 tag, FrameKind kind) {
        ++stats_.rounds;
        stats_.schedule_hash =
            detail::fold(stats_.schedule_hash, (u64{tag} << 8) | static_cast<u64>(kind));
    }

    ChannelStats stats_;
};

// Shared mailbox for three in-process parties. Queues are FIFO per directed
// link; a head-of-queue tag mismatch means the schedules diverged.
class InProcHub {
  public:
    void put(int src, int dst, u32 tag, Frame f);
    Frame take(int dst, int src, u32 tag, FrameKind kind);
    void poison();

  private:
    struct Entry { u32 tag; Frame frame; };
    std::mutex mu_;
    std::condition_variable cv_;
    bool poisoned_ = false;
    std::array<std::array<std::deque<Entry>, 3>, 3> q_;  // [src][dst]
};

class InProcTransport : public Transport {
  public:
    InProcTransport(int self, std::shared_ptr<InProcHub> hub)
        : self_(self), hub_(std::move(hub)) {}

    std::map<int, Frame> exchange(u32 tag, FrameKind kind, std::map<int, Frame> out,
                                  const std::set<int>& expect) override;
    bool peer_gone(int) override { return false; }
    void abort_session() override { hub_->poison(); }
    int self() const override { return self_; }

  private:
    int self_;
    std::shared_ptr<InProcHub> hub_;
};

// One mesh = three transports over a common hub.
std::array<std::unique_ptr<Transport>, 3> make_inproc_mesh();

struct TcpPeers {
    std::array<std::string, 3> host{};
    std::array<int, 3> port{};
};

// TCP endpoint for one party. Listens on its own port; for every pair the
// higher-numbered party dials the lower one. Reader threads drain each link
// into a mailbox so inline blocking sends cannot deadlock. No encryption:
// channels are assumed secure at deployment.
class TcpTransport : public Transport {
  public:
    TcpTransport(int self, const TcpPeers& peers, const std::array<u64, 2>& session_id,
                 int timeout_ms = 15000);
    ~TcpTransport() override;

    std::map<int, Frame> exchange(u32 tag, FrameKind kind, std::map<int, Frame> out,
                                  const std::set<int>& expect) override;
    bool peer_gone(int peer) override;
    void abort_session() override { shutdown(); }
    int self() const override { return self_; }

    // Close all links; the peers observe EOF and may map it to a drop signal.
    void shutdown();

  private:
    struct Impl;
    int self_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pmpl
