#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <thread>

#include "pmpl/errors.hpp"
#include "pmpl/transport.hpp"

namespace pmpl {

namespace {

void write_all(int fd, const void* buf, size_t n) {
    const char* p = static_cast<const char*>(buf);
    while (n > 0) {
        ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w <= 0) throw TransportError("send failed (peer closed?)");
        p += w;
        n -= static_cast<size_t>(w);
    }
}

// returns false on clean EOF at a frame boundary
bool read_all(int fd, void* buf, size_t n, bool at_boundary) {
    char* p = static_cast<char*>(buf);
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::recv(fd, p + got, n - got, 0);
        if (r == 0) {
            if (at_boundary && got == 0) return false;
            throw TransportError("connection closed mid-frame");
        }
        if (r < 0) throw TransportError("recv failed");
        got += static_cast<size_t>(r);
    }
    return true;
}

void put_u32(std::vector<unsigned char>& b, u32 v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace

struct TcpTransport::Impl {
    struct Entry { u32 tag; Frame frame; };

    std::array<int, 3> fd{-1, -1, -1};
    std::array<std::thread, 3> readers;
    std::array<std::deque<Entry>, 3> inbox;
    std::array<bool, 3> closed{false, false, false};
    std::mutex mu;
    std::condition_variable cv;
    std::array<u64, 2> session{};
    int self = 0;

    void reader_loop(int peer) {
        try {
            for (;;) {
                unsigned char hdr[16 + 1 + 4 + 1 + 4];
                if (!read_all(fd[peer], hdr, sizeof hdr, true)) break;
                u64 sid0 = 0, sid1 = 0;
                std::memcpy(&sid0, hdr, 8);
                std::memcpy(&sid1, hdr + 8, 8);
                if (sid0 != session[0] || sid1 != session[1])
                    throw ProtocolDesync("frame carries a foreign session id");
                Entry e;
                unsigned sender = hdr[16];
                u32 tag;
                std::memcpy(&tag, hdr + 17, 4);
                e.tag = tag;
                e.frame.kind = static_cast<FrameKind>(hdr[21]);
                u32 payload_len;
                std::memcpy(&payload_len, hdr + 22, 4);
                if (payload_len % 8 != 0) throw ProtocolDesync("payload not word aligned");
                if (sender != static_cast<unsigned>(peer))
                    throw ProtocolDesync("sender id does not match link");
                e.frame.words.resize(payload_len / 8);
                if (payload_len > 0) read_all(fd[peer], e.frame.words.data(), payload_len, false);
                {
                    std::lock_guard<std::mutex> lk(mu);
                    inbox[peer].push_back(std::move(e));
                }
                cv.notify_all();
            }
        } catch (const std::exception&) {
            // fall through to closed-marking; the consumer reports the error
        }
        {
            std::lock_guard<std::mutex> lk(mu);
            closed[peer] = true;
        }
        cv.notify_all();
    }
};

TcpTransport::TcpTransport(int self, const TcpPeers& peers, const std::array<u64, 2>& session_id,
                           int timeout_ms)
    : self_(self), impl_(std::make_unique<Impl>()) {
    impl_->session = session_id;
    impl_->self = self;

    int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<uint16_t>(peers.port[self]));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(listener);
        throw TransportError("bind failed on port " + std::to_string(peers.port[self]));
    }
    ::listen(listener, 4);

    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);

    // dial every lower-numbered peer, retrying until the listener is up
    for (int peer = 0; peer < self; ++peer) {
        int fd = -1;
        for (;;) {
            fd = ::socket(AF_INET, SOCK_STREAM, 0);
            sockaddr_in pa{};
            pa.sin_family = AF_INET;
            pa.sin_port = htons(static_cast<uint16_t>(peers.port[peer]));
            if (::inet_pton(AF_INET, peers.host[peer].c_str(), &pa.sin_addr) != 1) {
                ::close(fd);
                ::close(listener);
                throw TransportError("bad peer address " + peers.host[peer]);
            }
            if (::connect(fd, reinterpret_cast<sockaddr*>(&pa), sizeof pa) == 0) break;
            ::close(fd);
            if (std::chrono::steady_clock::now() > deadline) {
                ::close(listener);
                throw TransportError("timeout connecting to party " + std::to_string(peer));
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        unsigned char hello[17];
        std::memcpy(hello, session_id.data(), 16);
        hello[16] = static_cast<unsigned char>(self);
        write_all(fd, hello, sizeof hello);
        impl_->fd[peer] = fd;
    }

    // accept every higher-numbered peer
    int expected = 2 - self;
    while (expected > 0) {
        pollfd pfd{listener, POLLIN, 0};
        int remain = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          deadline - std::chrono::steady_clock::now())
                                          .count());
        if (remain <= 0 || ::poll(&pfd, 1, remain) <= 0) {
            ::close(listener);
            throw TransportError("timeout waiting for peers to connect");
        }
        int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) continue;
        unsigned char hello[17];
        read_all(fd, hello, sizeof hello, false);
        u64 s0, s1;
        std::memcpy(&s0, hello, 8);
        std::memcpy(&s1, hello + 8, 8);
        int who = hello[16];
        if (s0 != session_id[0] || s1 != session_id[1] || who <= self || who > 2) {
            ::close(fd);
            ::close(listener);
            throw TransportError("unexpected hello during mesh setup");
        }
        impl_->fd[who] = fd;
        --expected;
    }
    ::close(listener);

    for (int peer = 0; peer < 3; ++peer) {
        if (peer == self) continue;
        int one2 = 1;
        ::setsockopt(impl_->fd[peer], IPPROTO_TCP, TCP_NODELAY, &one2, sizeof one2);
        impl_->readers[peer] = std::thread([this, peer] { impl_->reader_loop(peer); });
    }
}

TcpTransport::~TcpTransport() { shutdown(); }

void TcpTransport::shutdown() {
    for (int peer = 0; peer < 3; ++peer) {
        if (impl_->fd[peer] >= 0) ::shutdown(impl_->fd[peer], SHUT_RDWR);
    }
    for (int peer = 0; peer < 3; ++peer) {
        if (impl_->readers[peer].joinable()) impl_->readers[peer].join();
        if (impl_->fd[peer] >= 0) {
            ::close(impl_->fd[peer]);
            impl_->fd[peer] = -1;
        }
    }
}

bool TcpTransport::peer_gone(int peer) {
    std::lock_guard<std::mutex> lk(impl_->mu);
    return impl_->closed[peer] && impl_->inbox[peer].empty();
}

std::map<int, Frame> TcpTransport::exchange(u32 tag, FrameKind kind, std::map<int, Frame> out,
                                            const std::set<int>& expect) {
    note_round(tag, kind);
    for (auto& [dst, f] : out) {
        f.kind = kind;
        std::vector<unsigned char> hdr;
        hdr.reserve(26);
        for (u64 s : impl_->session)
            for (int i = 0; i < 8; ++i) hdr.push_back(static_cast<unsigned char>(s >> (8 * i)));
        hdr.push_back(static_cast<unsigned char>(self_));
        put_u32(hdr, tag);
        hdr.push_back(static_cast<unsigned char>(kind));
        put_u32(hdr, static_cast<u32>(f.words.size() * 8));
        write_all(impl_->fd[dst], hdr.data(), hdr.size());
        if (!f.words.empty()) write_all(impl_->fd[dst], f.words.data(), f.words.size() * 8);
        stats_.bits_sent_to[dst] += f.bits;
        stats_.frames_sent_to[dst] += 1;
    }
    std::map<int, Frame> in;
    for (int src : expect) {
        std::unique_lock<std::mutex> lk(impl_->mu);
        impl_->cv.wait(lk, [&] { return !impl_->inbox[src].empty() || impl_->closed[src]; });
        if (impl_->inbox[src].empty())
            throw ProtocolDesync("party " + std::to_string(src) +
                                 " absent without a drop signal");
        auto e = std::move(impl_->inbox[src].front());
        impl_->inbox[src].pop_front();
        lk.unlock();
        if (e.tag != tag)
            throw ProtocolDesync("round tag mismatch: expected " + std::to_string(tag) +
                                 ", got " + std::to_string(e.tag));
        if (e.frame.kind != kind) throw ProtocolDesync("frame kind mismatch within round");
        stats_.frames_recv_kind[src][static_cast<int>(kind)] += 1;
        in.emplace(src, std::move(e.frame));
    }
    return in;
}

}  // namespace pmpl
