#include "pmpl/transport.hpp"

#include "pmpl/errors.hpp"

namespace pmpl {

void InProcHub::put(int src, int dst, u32 tag, Frame f) {
    {
        std::lock_guard<std::mutex> lk(mu_);
        q_[src][dst].push_back({tag, std::move(f)});
    }
    cv_.notify_all();
}

void InProcHub::poison() {
    {
        std::lock_guard<std::mutex> lk(mu_);
        poisoned_ = true;
    }
    cv_.notify_all();
}

Frame InProcHub::take(int dst, int src, u32 tag, FrameKind kind) {
    std::unique_lock<std::mutex> lk(mu_);
    auto& q = q_[src][dst];
    cv_.wait(lk, [&] { return !q.empty() || poisoned_; });
    if (q.empty()) throw TransportError("session aborted by a peer");
    Entry e = std::move(q.front());
    if (e.tag != tag)
        throw ProtocolDesync("round tag mismatch: expected " + std::to_string(tag) + ", got " +
                             std::to_string(e.tag));
    if (e.frame.kind != kind) throw ProtocolDesync("frame kind mismatch within round");
    q.pop_front();
    return std::move(e.frame);
}

std::map<int, Frame> InProcTransport::exchange(u32 tag, FrameKind kind, std::map<int, Frame> out,
                                               const std::set<int>& expect) {
    note_round(tag, kind);
    for (auto& [dst, f] : out) {
        f.kind = kind;
        stats_.bits_sent_to[dst] += f.bits;
        stats_.frames_sent_to[dst] += 1;
        hub_->put(self_, dst, tag, std::move(f));
    }
    std::map<int, Frame> in;
    for (int src : expect) {
        Frame f = hub_->take(self_, src, tag, kind);
        stats_.frames_recv_kind[src][static_cast<int>(kind)] += 1;
        in.emplace(src, std::move(f));
    }
    return in;
}

std::array<std::unique_ptr<Transport>, 3> make_inproc_mesh() {
    auto hub = std::make_shared<InProcHub>();
    return {std::make_unique<InProcTransport>(0, hub), std::make_unique<InProcTransport>(1, hub),
            std::make_unique<InProcTransport>(2, hub)};
}

}  // namespace pmpl
