#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>

#include "pmpl/localsim.hpp"
#include "pmpl/vmtgen.hpp"

using namespace pmpl;

namespace {

struct CommonOpts {
    unsigned ell = 64, ellf = 20, sigma = 8;
    u64 seed = 1;

    DomainParams params() const {
        if (ellf >= ell) throw ArgumentError("ell_f must be below ell");
        if (sigma < 2 || sigma >= ell) throw ArgumentError("sigma must be in [2, ell)");
        DomainParams p;
        p.ell = ell;
        p.frac_bits = ellf;
        p.sigma = sigma;
        p.matrix = reference_matrix(ell);
        p.coef = validate_matrix(p.matrix);
        return p;
    }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--ell", o.ell, "ring width in bits");
    cmd->add_option("--ellf", o.ellf, "fractional bits");
    cmd->add_option("--sigma", o.sigma, "truncation mask slack bits");
    cmd->add_option("--seed", o.seed, "master seed");
}

void apply_env_seed(CommonOpts& o) {
    if (const char* s = std::getenv("PMPL_SEED")) o.seed = std::strtoull(s, nullptr, 10);
}

// matrix file: whitespace-separated integers, four rows of three
PublicMatrix load_matrix_file(const std::string& path, unsigned ell) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open matrix file: " + path);
    std::vector<i64> vals;
    std::string tok;
    while (f >> tok) vals.push_back(std::stoll(tok));
    if (vals.size() != 12)
        throw ParseError("unsupported shape: expected a 4x3 matrix, found " +
                         std::to_string(vals.size()) + " entries");
    PublicMatrix pm;
    pm.ell = ell;
    Ring rg(ell);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) pm.rows[r][c] = rg.from_signed(vals[r * 3 + c]);
    return pm;
}

int cmd_matrix_check(const std::string& path, const CommonOpts& o) {
    PublicMatrix pm = load_matrix_file(path, o.ell);
    Coefficients co = validate_matrix(pm);
    Ring rg(o.ell);
    auto show = [&](const char* name, u64 v) {
        std::cout << "  " << name << " = " << v << " (" << rg.to_signed(v) << ")\n";
    };
    std::cout << "matrix ok at ell=" << o.ell << "; reconstruction coefficients:\n";
    show("c0", co.c0);
    show("c1", co.c1);
    show("c2", co.c2);
    show("c'0", co.cp0);
    show("c'1", co.cp1);
    show("c'3", co.cp3);
    show("c''0", co.cpp0);
    show("c''2", co.cpp2);
    show("c''3", co.cpp3);
    show("a1", co.a1);
    show("a2", co.a2);
    return 0;
}

struct TrainOpts {
    std::string role = "local-sim";
    std::string transport = "inproc";
    std::string peers;
    std::string pool = "pools";
    std::string model = "logistic";
    size_t batch = 128;
    double lr = 0.1;
    size_t epochs = 1;
    i64 drop_at = -1;
    std::string data;
    std::string format = "idx";
    std::string out = "model.bin";
    size_t samples = 0;  // 0 = all rows
    size_t dim = 784;    // dealer sizing only
};

void add_train_opts(CLI::App* cmd, TrainOpts& t, bool with_net) {
    if (with_net) {
        cmd->add_option("--role", t.role, "p0|p1|p2|local-sim");
        cmd->add_option("--transport", t.transport, "inproc|tcp");
        cmd->add_option("--peers", t.peers, "host:port,host:port,host:port");
    }
    cmd->add_option("--pool", t.pool, "preprocessing pool directory");
    cmd->add_option("--model", t.model, "linear|logistic|bpnn");
    cmd->add_option("--batch", t.batch, "batch size");
    cmd->add_option("--lr", t.lr, "learning rate");
    cmd->add_option("--epochs", t.epochs, "epochs");
    cmd->add_option("--drop-at", t.drop_at, "iteration at which P2 drops (-1 never)");
    cmd->add_option("--data", t.data, "idx directory or csv file");
    cmd->add_option("--format", t.format, "idx|csv");
    cmd->add_option("--out", t.out, "model output path (P0)");
    cmd->add_option("--samples", t.samples, "cap on training samples (0 = all)");
    cmd->add_option("--dim", t.dim, "feature count (dealer sizing)");
}

TrainConfig to_train_config(const TrainOpts& t, u64 seed) {
    TrainConfig cfg;
    cfg.model = model_kind_from_name(t.model);
    cfg.batch = t.batch;
    cfg.lr = t.lr;
    cfg.epochs = t.epochs;
    cfg.seed = seed;
    if (t.drop_at >= 0) cfg.drop_at = static_cast<size_t>(t.drop_at);
    return cfg;
}

Dataset load_data(const TrainOpts& t, const FixedCodec& codec, bool test_split) {
    bool one_hot = t.model == "bpnn";
    if (t.format == "idx") {
        std::string img =
            t.data + (test_split ? "/t10k-images-idx3-ubyte" : "/train-images-idx3-ubyte");
        std::string lab =
            t.data + (test_split ? "/t10k-labels-idx1-ubyte" : "/train-labels-idx1-ubyte");
        return load_idx(img, lab, codec, one_hot, test_split ? 0 : t.samples);
    }
    if (t.format == "csv") return load_csv(t.data, codec, one_hot, test_split ? 0 : t.samples);
    throw ArgumentError("unknown data format: " + t.format);
}

int cmd_dealer_gen(const TrainOpts& t, const CommonOpts& o) {
    DomainParams p = o.params();
    TrainConfig cfg = to_train_config(t, o.seed);
    size_t label_cols = cfg.model == ModelKind::bpnn ? 10 : 1;
    PoolPlan plan;
    if (t.samples > 0) plan = plan_for_training(p, cfg, t.samples, t.dim, label_cols);
    dealer_generate(p, plan, o.seed, t.pool);
    u64 items = validate_pools(t.pool);
    std::cout << "dealt " << plan.matrix_shapes.size() << " matrix triples, " << plan.vmt
              << " scalar triples, " << plan.trunc_pairs << " truncation pairs ("
              << items << " fixed-size items validated)\n";
    return 0;
}

TcpPeers parse_peers(const std::string& spec) {
    TcpPeers peers;
    std::stringstream ss(spec);
    std::string item;
    int idx = 0;
    while (std::getline(ss, item, ',') && idx < 3) {
        auto colon = item.rfind(':');
        if (colon == std::string::npos) throw ArgumentError("peers must be host:port triples");
        peers.host[idx] = item.substr(0, colon);
        peers.port[idx] = std::stoi(item.substr(colon + 1));
        ++idx;
    }
    if (idx != 3) throw ArgumentError("exactly three peers required");
    return peers;
}

int cmd_train(const TrainOpts& t, const CommonOpts& o) {
    DomainParams p = o.params();
    FixedCodec codec = p.codec();
    TrainConfig cfg = to_train_config(t, o.seed);

    if (t.role == "local-sim") {
        Dataset train = load_data(t, codec, false);
        if (!std::filesystem::exists(pool_file_name(t.pool, 0))) {
            std::cout << "dealing pools into " << t.pool << "\n";
            PoolPlan plan =
                plan_for_training(p, cfg, train.size(), train.dim(), train.label_cols());
            dealer_generate(p, plan, o.seed, t.pool);
        }
        SimOutcome sim = run_local_sim(p, train, cfg, t.pool, o.seed);
        if (!sim.model) throw Error("training returned no model");
        if (cfg.drop_at)
            std::cout << "mode switch: 2pc from iteration " << *cfg.drop_at << "\n";
        export_model(*sim.model, codec, t.out);
        std::cout << "model written to " << t.out << "\n";
        if (t.format == "idx") {
            Dataset test = load_data(t, codec, true);
            std::cout << "test accuracy: "
                      << evaluate(*sim.model, cfg.model, test, codec) * 100.0 << "%\n";
        } else {
            std::cout << "train accuracy: "
                      << evaluate(*sim.model, cfg.model, train, codec) * 100.0 << "%\n";
        }
        u64 bits = 0;
        for (auto& s : sim.stats) bits += s.total_bits_sent();
        std::cout << "online payload: " << bits / 8 << " bytes, " << sim.stats[0].rounds
                  << " rounds at p0\n";
        return 0;
    }

    int me = t.role == "p0" ? 0 : t.role == "p1" ? 1 : t.role == "p2" ? 2 : -1;
    if (me < 0) throw ArgumentError("role must be p0, p1, p2, or local-sim");
    if (t.transport != "tcp") throw ArgumentError("per-party roles need --transport tcp");
    std::array<u64, 2> sid{detail::mix64(o.seed), detail::mix64(o.seed + 1)};
    TcpTransport net(me, parse_peers(t.peers), sid);
    PoolReader pool(pool_file_name(t.pool, static_cast<unsigned>(me)));
    Engine e(me, p, net, &pool, o.seed);
    e.verify_pool();

    // every party contributes its own rows; mesh order fixes the layout
    Dataset mine = load_data(t, codec, false);
    Frame f;
    f.words = {mine.size()};
    f.bits = 64;
    std::map<int, Frame> out;
    std::set<int> expect;
    for (int q = 0; q < 3; ++q)
        if (q != me) {
            out.emplace(q, f);
            expect.insert(q);
        }
    auto counts = net.exchange(0x7ffffff0u, FrameKind::hello, std::move(out), expect);
    std::array<size_t, 3> rows{};
    rows[me] = mine.size();
    for (auto& [src, g] : counts) rows[src] = g.words.at(0);

    Dataset assembled;
    size_t total = rows[0] + rows[1] + rows[2];
    assembled.features = RingMatrix(total, mine.dim());
    assembled.labels = RingMatrix(total, mine.label_cols());
    assembled.owner.resize(total);
    size_t at = 0;
    for (int q = 0; q < 3; ++q) {
        for (size_t r = 0; r < rows[q]; ++r) {
            assembled.owner[at + r] = q;
            if (q == me) {
                for (size_t c = 0; c < mine.dim(); ++c)
                    assembled.features.at(at + r, c) = mine.features.at(r, c);
                for (size_t c = 0; c < mine.label_cols(); ++c)
                    assembled.labels.at(at + r, c) = mine.labels.at(r, c);
            }
        }
        at += rows[q];
    }
    SharedDataset ds = share_dataset(e, assembled);
    auto model = train_party(e, ds, cfg);
    if (cfg.drop_at) std::cout << "mode switch: 2pc from iteration " << *cfg.drop_at << "\n";
    if (me == 0 && model) {
        export_model(*model, codec, t.out);
        std::cout << "model written to " << t.out << "\n";
    } else {
        std::cout << "no model artifact at this role\n";
    }
    net.shutdown();
    return 0;
}

// ---- bench: measured rounds/bits next to the closed forms ----

struct BenchRow {
    std::string name;
    u64 rounds = 0, bits = 0;
    u64 expect_bits = 0, expect_rounds = 0;
    std::string formula;
    bool asserted = true;
};

int cmd_bench(const CommonOpts& o) {
    DomainParams p = o.params();
    FixedCodec codec = p.codec();
    u64 ell = p.ell;
    std::string dir = (std::filesystem::temp_directory_path() / "pmpl_bench_pools").string();
    const std::vector<size_t> sizes{1, 4, 16};
    const size_t act = 64;  // activation batch

    PoolPlan plan;
    for (int mode = 0; mode < 2; ++mode)
        for (size_t n : sizes)
            for (size_t d : sizes)
                for (size_t m : sizes) plan.matrix_shapes.push_back({n, d, m});
    for (size_t n : sizes)
        for (size_t m : sizes) plan.trunc_pairs += 2 * n * m;
    plan.booltriple3 = Engine::msb_triple_words(ell, 3) * 3 * act + (act + ell - 1) / ell + 16;
    plan.booltriple2 = Engine::msb_triple_words(ell, 2) * 3 * act + (act + ell - 1) / ell + 16;
    plan.dabit3 = 3 * act + 8;
    plan.dabit2 = 3 * act + 8;
    plan.vmt = 2 * act + 8;
    dealer_generate(p, plan, o.seed, dir);

    std::vector<BenchRow> rows;
    std::mutex mu;
    std::array<std::pair<u64, u64>, 3> delta;  // (bits, rounds) per party

    auto session = [&](Engine& e) {
        auto measure = [&](auto fn) {
            u64 b0 = e.net().stats().total_bits_sent(), r0 = e.net().stats().rounds;
            fn();
            std::lock_guard<std::mutex> lk(mu);
            delta[e.party()] = {e.net().stats().total_bits_sent() - b0,
                                e.net().stats().rounds - r0};
        };
        auto record = [&](const std::string& name, u64 eb, u64 er, const std::string& formula,
                          bool asserted) {
            if (e.party() != 0) return;
            BenchRow row;
            row.name = name;
            row.bits = delta[0].first + delta[1].first + delta[2].first;
            row.rounds = delta[0].second;
            row.expect_bits = eb;
            row.expect_rounds = er;
            row.formula = formula;
            row.asserted = asserted;
            rows.push_back(row);
        };
        auto barrier = [&] {  // keep parties aligned between measurements
            std::map<int, Frame> out;
            std::set<int> expect;
            Frame f;
            f.words = {0};
            f.bits = 0;
            int peers = e.mode() == Mode::three_party ? 3 : 2;
            for (int q = 0; q < peers; ++q)
                if (q != e.party() && !(q == 2 && peers == 2)) {
                    out.emplace(q, f);
                    expect.insert(q);
                }
            if (e.party() == 2 && peers == 2) return;
            e.net().exchange(0x7ffffff1u + static_cast<u32>(rows.size()), FrameKind::hello,
                             std::move(out), expect);
        };
        (void)barrier;

        for (int mode = 0; mode < 2; ++mode) {
            if (mode == 1) {
                e.raise_drop();
                if (!e.is_live()) return;
            }
            std::string tag = mode == 0 ? "3pc" : "2pc";
            u64 scale = mode == 0 ? 6 : 3;
            for (size_t n : sizes)
                for (size_t d : sizes)
                    for (size_t m : sizes) {
                        RingMatrix x(n, d), y(d, m);
                        SharedMatrix sx =
                            e.party() == 0 ? e.share_input(x) : e.receive_input(0, n, d);
                        SharedMatrix sy =
                            e.party() == 0 ? e.share_input(y) : e.receive_input(0, d, m);
                        measure([&] { e.matmul(sx, sy); });
                        record("matmul " + tag + " " + std::to_string(n) + "x" +
                                   std::to_string(d) + "x" + std::to_string(m),
                               scale * ell * (n * d + d * m), 1,
                               mode == 0 ? "6l(nd+dm)" : "3l(nd+dm)", true);
                    }
            for (size_t n : sizes)
                for (size_t m : sizes) {
                    RingMatrix z(n, m);
                    SharedMatrix sz = e.party() == 0 ? e.share_input(z) : e.receive_input(0, n, m);
                    measure([&] { e.trunc(sz); });
                    record("trunc " + tag + " " + std::to_string(n) + "x" + std::to_string(m),
                           (mode == 0 ? 2 : 1) * ell * n * m, 1, mode == 0 ? "2lnm" : "lnm",
                           true);
                    measure([&] { e.add(sz, sz); });
                    record("matadd " + tag + " " + std::to_string(n) + "x" + std::to_string(m),
                           0, 0, "0", true);
                }
            {
                RingMatrix v(1, act);
                for (size_t i = 0; i < act; ++i) v[i] = codec.encode(i % 2 ? 1.5 : -1.5);
                SharedMatrix sv = e.party() == 0 ? e.share_input(v) : e.receive_input(0, 1, act);
                measure([&] { e.relu(sv); });
                std::ostringstream f1;
                f1 << (mode == 0 ? 18 : 8) * ell + (mode == 0 ? 4 : 2) * ell * 6 << " per elem";
                record("relu " + tag + " x" + std::to_string(act), 0, 0,
                       mode == 0 ? "paper 18l+4l*log2(l)" : "paper 8l+2l*log2(l)", false);
                measure([&] { e.sigmoid(sv); });
                record("sigmoid " + tag + " x" + std::to_string(act), 0, 0,
                       mode == 0 ? "paper 38l+8l*log2(l)" : "paper 18l+4l*log2(l)", false);
            }
        }
    };
    run_three_engines(p, dir, o.seed, session);

    bool all_ok = true;
    std::cout << std::left << std::setw(22) << "building block" << std::setw(9) << "rounds"
              << std::setw(14) << "bits" << std::setw(14) << "closed form" << "status\n";
    for (auto& r : rows) {
        std::ostringstream status;
        if (r.asserted) {
            bool ok = r.bits == r.expect_bits && r.rounds == r.expect_rounds;
            all_ok &= ok;
            status << (ok ? "PASS" : "FAIL");
        } else {
            status << "reported (not asserted; construction differs), formula " << r.formula;
        }
        std::cout << std::left << std::setw(22) << r.name << std::setw(9) << r.rounds
                  << std::setw(14) << r.bits << std::setw(14)
                  << (r.asserted ? std::to_string(r.expect_bits) : std::string("-")) << status.str()
                  << "\n";
    }
    if (!all_ok) throw ValidationError({"a benchmarked cost deviates from its closed form"});
    std::cout << "all asserted rows match the closed forms\n";
    return 0;
}

// ---- verify: oracle equivalence per operation ----

int cmd_verify(const std::string& op, u64 trials, const CommonOpts& o) {
    DomainParams p = o.params();
    Ring rg = p.matrix.ring();
    FixedCodec codec = p.codec();
    std::string dir = (std::filesystem::temp_directory_path() / "pmpl_verify_pools").string();
    std::atomic<u64> mismatches{0};
    u64 checked = 0;

    if (op == "reconstruct") {
        CounterRng rng(o.seed, 0, "verify");
        for (u64 i = 0; i < trials; ++i) {
            u64 x = rng.next_ring(rg);
            ShareQuad q = share_value(p.matrix, x, rng);
            bool ok = reconstruct3(p.matrix, p.coef, {0, q[0]}, {1, q[1]}, {2, q[2]}) == x &&
                      reconstruct2(p.matrix, p.coef, {0, q[0]}, {1, q[1]}, {3, q[3]}) == x &&
                      reconstruct2(p.matrix, p.coef, {0, q[0]}, {2, q[2]}, {3, q[3]}) == x;
            if (!ok) ++mismatches;
        }
        checked = trials;
    } else if (op == "mul") {
        size_t n = trials;
        PoolPlan plan;
        plan.vmt = n;
        dealer_generate(p, plan, o.seed, dir);
        CounterRng rng(o.seed, 0, "verify");
        RingMatrix x(1, n), y(1, n);
        for (auto& v : x.data()) v = rng.next_ring(rg);
        for (auto& v : y.data()) v = rng.next_ring(rg);
        run_three_engines(p, dir, o.seed, [&](Engine& e) {
            SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 1, n);
            SharedMatrix sy = e.party() == 0 ? e.share_input(y) : e.receive_input(0, 1, n);
            RingMatrix got = e.open(e.mul_elem(sx, sy));
            if (e.party() == 0)
                for (size_t i = 0; i < n; ++i)
                    if (got[i] != rg.mul(x[i], y[i])) ++mismatches;
        });
        checked = n;
    } else if (op == "trunc") {
        size_t n = trials;
        PoolPlan plan;
        plan.trunc_pairs = n;
        dealer_generate(p, plan, o.seed, dir);
        CounterRng rng(o.seed, 0, "verify");
        RingMatrix z(1, n);
        unsigned clamp = p.ell - p.sigma - 2;
        for (auto& v : z.data()) {
            v = rng.next_ring(rg) & ((u64{1} << clamp) - 1);
            if (v & (u64{1} << (clamp - 1))) v = rg.neg(v & ((u64{1} << (clamp - 1)) - 1));
        }
        run_three_engines(p, dir, o.seed, [&](Engine& e) {
            SharedMatrix sz = e.party() == 0 ? e.share_input(z) : e.receive_input(0, 1, n);
            RingMatrix got = e.open(e.trunc(sz));
            if (e.party() == 0)
                for (size_t i = 0; i < n; ++i) {
                    i64 err = rg.to_signed(got[i]) - (rg.to_signed(z[i]) >> p.frac_bits);
                    if (err < -1 || err > 1) ++mismatches;
                }
        });
        checked = n;
    } else if (op == "msb") {
        // exhaustive at ell = 8 regardless of the session width
        DomainParams p8;
        p8.ell = 8;
        p8.frac_bits = 4;
        p8.sigma = 2;
        p8.matrix = reference_matrix(8);
        p8.coef = validate_matrix(p8.matrix);
        Ring r8(8);
        size_t splits = std::max<u64>(1, trials / 256);
        PoolPlan plan;
        plan.booltriple3 = Engine::msb_triple_words(8, 3) * 256 * splits;
        dealer_generate(p8, plan, o.seed, dir);
        CounterRng rng(o.seed, 0, "verify");
        std::array<RingMatrix, 3> addends{RingMatrix(256, splits), RingMatrix(256, splits),
                                          RingMatrix(256, splits)};
        for (size_t s = 0; s < 256; ++s)
            for (size_t j = 0; j < splits; ++j) {
                u64 a = rng.next_ring(r8), b = rng.next_ring(r8);
                addends[0].at(s, j) = a;
                addends[1].at(s, j) = b;
                addends[2].at(s, j) = r8.sub(u64(s), r8.add(a, b));
            }
        std::array<std::vector<u64>, 3> outs;
        std::mutex mu;
        run_three_engines(p8, dir, o.seed, [&](Engine& e) {
            AddMatrix mine;
            mine.main = addends[e.party()];
            BoolMatrix b = e.msb(mine);
            std::lock_guard<std::mutex> lk(mu);
            outs[e.party()] = b.words;
        });
        for (size_t s = 0; s < 256; ++s)
            for (size_t j = 0; j < splits; ++j) {
                u64 bit = (outs[0][s * splits + j] ^ outs[1][s * splits + j] ^
                           outs[2][s * splits + j]) &
                          1;
                if (bit != (s >> 7)) ++mismatches;
            }
        checked = 256 * splits;
    } else if (op == "relu" || op == "sigmoid" || op == "bit2a") {
        size_t n = trials;
        PoolPlan plan;
        plan.booltriple3 =
            Engine::msb_triple_words(p.ell, 3) * 2 * n + (n + p.ell - 1) / p.ell + 8;
        plan.dabit3 = 2 * n + 8;
        plan.vmt = n + 8;
        dealer_generate(p, plan, o.seed, dir);
        CounterRng rng(o.seed, 0, "verify");
        RingMatrix x(1, n);
        for (auto& v : x.data()) {
            v = rng.next_ring(rg) & ((u64{1} << 25) - 1);
            if (v & (u64{1} << 24)) v = rg.neg(v & ((u64{1} << 24) - 1));
        }
        run_three_engines(p, dir, o.seed, [&](Engine& e) {
            SharedMatrix sx = e.party() == 0 ? e.share_input(x) : e.receive_input(0, 1, n);
            if (op == "bit2a") {
                AddMatrix a = e.v2a(sx);
                BoolMatrix b = e.msb(a);
                AddMatrix conv = e.bit2a(b);
                RingMatrix got = e.open(e.a2v(conv));
                if (e.party() == 0)
                    for (size_t i = 0; i < n; ++i)
                        if (got[i] != (rg.msb(x[i]) ? 1u : 0u)) ++mismatches;
                return;
            }
            RingMatrix got = e.open(op == "relu" ? e.relu(sx) : e.sigmoid(sx));
            if (e.party() == 0)
                for (size_t i = 0; i < n; ++i) {
                    u64 want;
                    if (op == "relu") {
                        want = rg.msb(x[i]) ? 0 : x[i];
                    } else {
                        double v = codec.decode(x[i]);
                        want = v <= -0.5 ? 0
                               : v >= 0.5 ? codec.encode(1.0)
                                          : rg.add(x[i], codec.encode(0.5));
                    }
                    if (got[i] != want) ++mismatches;
                }
        });
        checked = n;
    } else {
        throw ArgumentError("unknown op: " + op +
                            " (expected reconstruct|mul|trunc|msb|bit2a|relu|sigmoid)");
    }

    std::cout << op << ": " << checked << " trials, " << mismatches.load() << " mismatches\n";
    if (mismatches.load() > 0) throw ValidationError({"oracle mismatch in " + op});
    return 0;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"privileged-party three-party learning over vector space secret sharing"};
    app.set_config("--config", "", "flat key=value configuration file");
    app.require_subcommand(1);

    CommonOpts common;
    std::string matrix_path, verify_op = "mul";
    u64 verify_trials = 10000;
    TrainOpts topts;

    auto* mc = app.add_subcommand("matrix-check", "validate a public matrix candidate");
    mc->add_option("matrix", matrix_path, "path to a 4x3 integer matrix file")->required();
    add_common(mc, common);

    auto* dg = app.add_subcommand("dealer-gen", "generate preprocessing pools");
    add_train_opts(dg, topts, false);
    add_common(dg, common);

    auto* tr = app.add_subcommand("train", "secret-shared training");
    add_train_opts(tr, topts, true);
    add_common(tr, common);

    auto* be = app.add_subcommand("bench", "measure building-block costs against closed forms");
    add_common(be, common);

    auto* ve = app.add_subcommand("verify", "oracle-equivalence checks");
    ve->add_option("--op", verify_op, "reconstruct|mul|trunc|msb|bit2a|relu|sigmoid");
    ve->add_option("--trials", verify_trials, "number of trials");
    add_common(ve, common);

    app.parse(argc, argv);
    apply_env_seed(common);

    if (mc->parsed()) return cmd_matrix_check(matrix_path, common);
    if (dg->parsed()) return cmd_dealer_gen(topts, common);
    if (tr->parsed()) return cmd_train(topts, common);
    if (be->parsed()) return cmd_bench(common);
    if (ve->parsed()) return cmd_verify(verify_op, verify_trials, common);
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const CLI::ParseError& e) {
        CLI::App dummy;
        int code = dummy.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
