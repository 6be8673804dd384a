#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <future>
#include <thread>

#include "pmpl/errors.hpp"
#include "pmpl/transport.hpp"

using namespace pmpl;

namespace {

// run one callable per party over a fresh in-process mesh
template <typename F>
auto run_parties(F&& fn) {
    auto mesh = make_inproc_mesh();
    using R = decltype(fn(0, *mesh[0]));
    std::array<std::future<R>, 3> futs;
    for (int p = 0; p < 3; ++p)
        futs[p] = std::async(std::launch::async, [&, p] { return fn(p, *mesh[p]); });
    std::array<R, 3> out{futs[0].get(), futs[1].get(), futs[2].get()};
    return out;
}

Frame words_frame(std::vector<u64> w, unsigned ell) {
    Frame f;
    f.bits = w.size() * ell;
    f.words = std::move(w);
    return f;
}

}  // namespace

TEST_CASE("echo round meters payload bits per direction") {
    auto stats = run_parties([](int me, Transport& t) {
        std::map<int, Frame> out;
        std::set<int> expect;
        for (int p = 0; p < 3; ++p) {
            if (p == me) continue;
            out.emplace(p, words_frame({u64(me)}, 64));
            expect.insert(p);
        }
        auto in = t.exchange(1, FrameKind::open, std::move(out), expect);
        for (auto& [src, f] : in) {
            REQUIRE(f.words.size() == 1);
            CHECK(f.words[0] == u64(src));
        }
        return t.stats();
    });
    for (int p = 0; p < 3; ++p) {
        CHECK(stats[p].rounds == 1);
        for (int q = 0; q < 3; ++q)
            CHECK(stats[p].bits_sent_to[q] == (q == p ? 0u : 64u));
    }
    // identical (tag, kind) sequences hash identically
    CHECK(stats[0].schedule_hash == stats[1].schedule_hash);
    CHECK(stats[1].schedule_hash == stats[2].schedule_hash);
}

TEST_CASE("mismatched round tags raise a desync error") {
    auto ok = run_parties([](int me, Transport& t) -> int {
        try {
            u32 tag = me == 2 ? 7u : 1u;  // party 2 diverges
            std::map<int, Frame> out;
            std::set<int> expect;
            for (int p = 0; p < 3; ++p)
                if (p != me) {
                    out.emplace(p, words_frame({1}, 64));
                    expect.insert(p);
                }
            t.exchange(tag, FrameKind::open, std::move(out), expect);
            return 0;
        } catch (const ProtocolDesync&) {
            return 1;
        }
    });
    CHECK(ok[0] + ok[1] + ok[2] >= 2);  // both honest parties notice
}

TEST_CASE("exchanges after a drop exclude party 2") {
    auto stats = run_parties([](int me, Transport& t) {
        // round 1: everyone
        std::map<int, Frame> out;
        std::set<int> expect;
        for (int p = 0; p < 3; ++p)
            if (p != me) {
                out.emplace(p, words_frame({u64(me)}, 64));
                expect.insert(p);
            }
        t.exchange(1, FrameKind::open, std::move(out), expect);
        // round 2: only parties 0 and 1
        if (me != 2) {
            int peer = 1 - me;
            auto in = t.exchange(2, FrameKind::open,
                                 {{peer, words_frame({u64(me)}, 64)}}, {peer});
            CHECK(in.at(peer).words[0] == u64(peer));
        }
        return t.stats();
    });
    CHECK(stats[2].rounds == 1);
    CHECK(stats[0].rounds == 2);
    CHECK(stats[0].bits_sent_to[2] == 64);
    CHECK(stats[1].bits_sent_to[2] == 64);
}

TEST_CASE("tcp mesh carries the same traffic as the in-process mesh") {
    TcpPeers peers;
    peers.host = {"127.0.0.1", "127.0.0.1", "127.0.0.1"};
    peers.port = {35711, 35712, 35713};
    std::array<u64, 2> sid{0x1234, 0x5678};

    auto protocol = [](int me, Transport& t) {
        // two rounds of unequal sizes
        std::map<int, Frame> out;
        std::set<int> expect;
        for (int p = 0; p < 3; ++p)
            if (p != me) {
                out.emplace(p, words_frame({u64(me), u64(me) + 1, u64(me) + 2}, 64));
                expect.insert(p);
            }
        auto in1 = t.exchange(1, FrameKind::open, std::move(out), expect);
        for (auto& [src, f] : in1) CHECK(f.words[0] == u64(src));
        if (me == 0) {
            auto in = t.exchange(2, FrameKind::trunc, {}, {1, 2});
            CHECK(in.at(1).words.size() == 2);
        } else {
            t.exchange(2, FrameKind::trunc, {{0, words_frame({u64(me), 9}, 64)}}, {});
        }
        return t.stats();
    };

    std::array<std::future<ChannelStats>, 3> futs;
    for (int p = 0; p < 3; ++p)
        futs[p] = std::async(std::launch::async, [&, p] {
            TcpTransport t(p, peers, sid);
            auto s = protocol(p, t);
            t.shutdown();
            return s;
        });
    std::array<ChannelStats, 3> tcp_stats{futs[0].get(), futs[1].get(), futs[2].get()};
    auto inproc_stats = run_parties(protocol);

    for (int p = 0; p < 3; ++p) {
        CHECK(tcp_stats[p].total_bits_sent() == inproc_stats[p].total_bits_sent());
        CHECK(tcp_stats[p].rounds == inproc_stats[p].rounds);
        CHECK(tcp_stats[p].schedule_hash == inproc_stats[p].schedule_hash);
    }
}

TEST_CASE("unreachable peer times out") {
    TcpPeers peers;
    peers.host = {"127.0.0.1", "127.0.0.1", "127.0.0.1"};
    peers.port = {35721, 35722, 35723};
    // party 1 alone: dialing party 0 never succeeds
    CHECK_THROWS_AS(TcpTransport(1, peers, {1, 2}, 300), TransportError);
}

TEST_CASE("socket close on party 2 is observable") {
    TcpPeers peers;
    peers.host = {"127.0.0.1", "127.0.0.1", "127.0.0.1"};
    peers.port = {35731, 35732, 35733};
    std::array<u64, 2> sid{1, 2};
    auto fut0 = std::async(std::launch::async, [&] {
        TcpTransport t(0, peers, sid);
        while (!t.peer_gone(2)) std::this_thread::sleep_for(std::chrono::milliseconds(5));
        return true;
    });
    auto fut1 = std::async(std::launch::async, [&] {
        TcpTransport t(1, peers, sid);
        while (!t.peer_gone(2)) std::this_thread::sleep_for(std::chrono::milliseconds(5));
        return true;
    });
    auto fut2 = std::async(std::launch::async, [&] {
        TcpTransport t(2, peers, sid);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        t.shutdown();
        return true;
    });
    CHECK(fut0.get());
    CHECK(fut1.get());
    CHECK(fut2.get());
}
