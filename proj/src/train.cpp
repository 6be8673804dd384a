#include "pmpl/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pmpl/errors.hpp"

namespace pmpl {

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "linear") return ModelKind::linear;
    if (name == "logistic") return ModelKind::logistic;
    if (name == "bpnn") return ModelKind::bpnn;
    throw ArgumentError("unknown model kind: " + name);
}

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::linear: return "linear";
        case ModelKind::logistic: return "logistic";
        case ModelKind::bpnn: return "bpnn";
    }
    return "?";
}

std::vector<size_t> batch_order(u64 seed, size_t epoch, size_t n) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    CounterRng rng(seed, static_cast<unsigned>(epoch), "batch-order");
    for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
    return idx;
}

namespace {

std::vector<std::pair<size_t, size_t>> weight_shapes(const TrainConfig& cfg, size_t dim,
                                                     size_t label_cols) {
    if (cfg.model != ModelKind::bpnn) return {{dim, 1}};
    std::vector<std::pair<size_t, size_t>> s;
    size_t prev = dim;
    for (size_t h : cfg.hidden) {
        s.push_back({prev, h});
        prev = h;
    }
    s.push_back({prev, label_cols});
    return s;
}

}  // namespace

std::vector<RingMatrix> initial_weights(const FixedCodec& codec, const TrainConfig& cfg,
                                        size_t dim, size_t label_cols) {
    CounterRng rng(cfg.seed, 0, "weight-init");
    std::vector<RingMatrix> out;
    for (auto [r, c] : weight_shapes(cfg, dim, label_cols)) {
        RingMatrix w(r, c);
        for (auto& x : w.data()) x = codec.encode(rng.next_real(-0.01, 0.01));
        out.push_back(std::move(w));
    }
    return out;
}

PoolPlan plan_for_training(const DomainParams& params, const TrainConfig& cfg, size_t n,
                           size_t dim, size_t label_cols) {
    PoolPlan plan;
    Coefficients co = params.coef;
    bool fast3 = ((co.c0 & co.c1 & co.c2) & 1) != 0;
    u64 msb3 = Engine::msb_triple_words(params.ell, 3);
    u64 msb2 = Engine::msb_triple_words(params.ell, 2);
    size_t B = cfg.batch;
    size_t iters = cfg.iterations(n);

    auto add_relu = [&](size_t elems) {
        plan.booltriple3 += msb3 * elems;
        plan.booltriple2 += msb2 * elems;
        plan.dabit3 += elems;
        plan.dabit2 += elems;
        if (fast3) plan.kshare += elems;
        plan.vmt += elems;
    };
    auto add_sigmoid = [&](size_t elems) {
        plan.booltriple3 += msb3 * 2 * elems + (elems + params.ell - 1) / params.ell;
        plan.booltriple2 += msb2 * 2 * elems + (elems + params.ell - 1) / params.ell;
        plan.dabit3 += 2 * elems;
        plan.dabit2 += 2 * elems;
        if (fast3) plan.kshare += 2 * elems;
        plan.vmt += elems;
    };

    for (size_t t = 0; t < iters; ++t) {
        if (cfg.model != ModelKind::bpnn) {
            plan.matrix_shapes.push_back({B, dim, 1});
            plan.trunc_pairs += B;
            if (cfg.model == ModelKind::logistic) add_sigmoid(B);
            plan.matrix_shapes.push_back({dim, B, 1});
            plan.trunc_pairs += 2 * dim;
        } else {
            size_t h1 = cfg.hidden.at(0), h2 = cfg.hidden.at(1), out = label_cols;
            plan.matrix_shapes.push_back({B, dim, h1});
            plan.trunc_pairs += B * h1;
            add_relu(B * h1);
            plan.matrix_shapes.push_back({B, h1, h2});
            plan.trunc_pairs += B * h2;
            add_relu(B * h2);
            plan.matrix_shapes.push_back({B, h2, out});
            plan.trunc_pairs += B * out;
            // error propagation
            plan.matrix_shapes.push_back({B, out, h2});
            plan.trunc_pairs += B * h2;
            plan.vmt += B * h2;
            plan.matrix_shapes.push_back({B, h2, h1});
            plan.trunc_pairs += B * h1;
            plan.vmt += B * h1;
            // weight gradients
            plan.matrix_shapes.push_back({h2, B, out});
            plan.trunc_pairs += 2 * h2 * out;
            plan.matrix_shapes.push_back({h1, B, h2});
            plan.trunc_pairs += 2 * h1 * h2;
            plan.matrix_shapes.push_back({dim, B, h1});
            plan.trunc_pairs += 2 * dim * h1;
        }
    }
    return plan;
}

SharedDataset share_dataset(Engine& e, const Dataset& full) {
    size_t n = full.size(), d = full.dim(), lc = full.label_cols();
    SharedDataset out;
    out.features.main = RingMatrix(n, d);
    out.labels.main = RingMatrix(n, lc);
    if (e.party() == 0) {
        out.features.alt = RingMatrix(n, d);
        out.labels.alt = RingMatrix(n, lc);
    }
    for (int owner = 0; owner < 3; ++owner) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < n; ++i)
            if (full.owner[i] == owner) idx.push_back(i);
        if (idx.empty()) continue;
        SharedMatrix fx, fy;
        if (e.party() == owner) {
            fx = e.share_input(full.features.rows_subset(idx));
            fy = e.share_input(full.labels.rows_subset(idx));
        } else {
            fx = e.receive_input(owner, idx.size(), d);
            fy = e.receive_input(owner, idx.size(), lc);
        }
        auto scatter = [&](SharedMatrix& dst, const SharedMatrix& src, size_t cols) {
            for (size_t r = 0; r < idx.size(); ++r)
                for (size_t c = 0; c < cols; ++c) {
                    dst.main.at(idx[r], c) = src.main.at(r, c);
                    if (e.party() == 0) dst.alt.at(idx[r], c) = src.alt.at(r, c);
                }
        };
        scatter(out.features, fx, d);
        scatter(out.labels, fy, lc);
    }
    return out;
}

namespace {

std::vector<size_t> iteration_rows(const TrainConfig& cfg, size_t n, size_t iter) {
    size_t per_epoch = n / cfg.batch;
    size_t epoch = iter / per_epoch, slot = iter % per_epoch;
    auto order = batch_order(cfg.seed, epoch, n);
    return {order.begin() + static_cast<long>(slot * cfg.batch),
            order.begin() + static_cast<long>((slot + 1) * cfg.batch)};
}

}  // namespace

std::optional<Model> train_party(Engine& e, const SharedDataset& ds, const TrainConfig& cfg) {
    const FixedCodec& codec = e.codec();
    size_t n = ds.features.rows(), dim = ds.features.cols(), lc = ds.labels.cols();
    size_t iters = cfg.iterations(n);
    u64 lr_scaled = codec.encode(cfg.lr / static_cast<double>(cfg.batch));

    // P0 owns the seeded initialization and shares it
    std::vector<SharedMatrix> w;
    for (auto& init : initial_weights(codec, cfg, dim, lc)) {
        w.push_back(e.party() == 0 ? e.share_input(init)
                                   : e.receive_input(0, init.rows(), init.cols()));
    }

    for (size_t t = 0; t < iters; ++t) {
        if (cfg.drop_at && *cfg.drop_at == t && e.mode() == Mode::three_party) e.raise_drop();
        if (!e.is_live()) return std::nullopt;
        e.poll_peer_drop();

        auto rows = iteration_rows(cfg, n, t);
        SharedMatrix xb = e.rows_subset(ds.features, rows);
        SharedMatrix yb = e.rows_subset(ds.labels, rows);

        if (cfg.model != ModelKind::bpnn) {
            SharedMatrix fwd = e.trunc(e.matmul(xb, w[0]));
            if (cfg.model == ModelKind::logistic) fwd = e.sigmoid(fwd);
            SharedMatrix diff = e.sub(fwd, yb);
            SharedMatrix grad = e.trunc(e.matmul(e.transpose(xb), diff));
            SharedMatrix upd = e.trunc(e.scale(lr_scaled, grad));
            w[0] = e.sub(w[0], upd);
        } else {
            SharedMatrix a1gate, a2gate;
            SharedMatrix a1 = e.relu(e.trunc(e.matmul(xb, w[0])), &a1gate);
            SharedMatrix a2 = e.relu(e.trunc(e.matmul(a1, w[1])), &a2gate);
            SharedMatrix a3 = e.trunc(e.matmul(a2, w[2]));
            SharedMatrix e3 = e.sub(a3, yb);
            SharedMatrix e2 = e.mul_elem(e.trunc(e.matmul(e3, e.transpose(w[2]))), a2gate);
            SharedMatrix e1 = e.mul_elem(e.trunc(e.matmul(e2, e.transpose(w[1]))), a1gate);
            SharedMatrix g3 = e.trunc(e.matmul(e.transpose(a2), e3));
            w[2] = e.sub(w[2], e.trunc(e.scale(lr_scaled, g3)));
            SharedMatrix g2 = e.trunc(e.matmul(e.transpose(a1), e2));
            w[1] = e.sub(w[1], e.trunc(e.scale(lr_scaled, g2)));
            SharedMatrix g1 = e.trunc(e.matmul(e.transpose(xb), e1));
            w[0] = e.sub(w[0], e.trunc(e.scale(lr_scaled, g1)));
        }
    }

    Model m;
    for (auto& wi : w) {
        auto revealed = e.reveal_to_p0(wi);
        if (revealed) m.weights.push_back(std::move(*revealed));
    }
    if (e.party() == 0) return m;
    return std::nullopt;
}

namespace {

// cleartext fixed-point machinery mirroring the protocol ops one for one
struct OracleCtx {
    Ring rg;
    FixedCodec codec;
    const PoolTrace* masks;
    size_t cursor = 0;

    RingMatrix trunc(const RingMatrix& z) {
        RingMatrix out(z.rows(), z.cols());
        for (size_t i = 0; i < z.size(); ++i) {
            if (masks) {
                if (cursor >= masks->trunc_secrets.size())
                    throw PreprocUnderflow("oracle mask trace exhausted");
                auto [r, rp] = masks->trunc_secrets[cursor++];
                out[i] = rg.add(rg.shift_right_signed(rg.sub(z[i], r), codec.frac_bits()), rp);
            } else {
                out[i] = rg.shift_right_signed(z[i], codec.frac_bits());
            }
        }
        return out;
    }

    RingMatrix relu(const RingMatrix& z, RingMatrix* gate_out = nullptr) {
        RingMatrix out(z.rows(), z.cols());
        RingMatrix gate(z.rows(), z.cols());
        for (size_t i = 0; i < z.size(); ++i) {
            gate[i] = rg.msb(z[i]) ? 0 : 1;
            out[i] = rg.mul(gate[i], z[i]);
        }
        if (gate_out) *gate_out = std::move(gate);
        return out;
    }

    RingMatrix sigmoid(const RingMatrix& z) {
        u64 half = codec.encode(0.5), one = codec.encode(1.0);
        RingMatrix out(z.rows(), z.cols());
        for (size_t i = 0; i < z.size(); ++i) {
            u64 xp = rg.add(z[i], half), xm = rg.sub(z[i], half);
            u64 b1 = rg.msb(xp) ? 1 : 0, b2 = rg.msb(xm) ? 1 : 0;
            u64 g = (1 ^ b1) & b2;
            out[i] = rg.add(rg.mul(g, xp), rg.mul(1 ^ b2, one));
        }
        return out;
    }
};

}  // namespace

Model oracle_train(const DomainParams& params, const Dataset& ds, const TrainConfig& cfg,
                   const PoolTrace* masks) {
    OracleCtx ctx{params.matrix.ring(), params.codec(), masks, 0};
    const Ring& rg = ctx.rg;
    size_t n = ds.size(), dim = ds.dim(), lc = ds.label_cols();
    u64 lr_scaled = ctx.codec.encode(cfg.lr / static_cast<double>(cfg.batch));

    std::vector<RingMatrix> w = initial_weights(ctx.codec, cfg, dim, lc);
    for (size_t t = 0; t < cfg.iterations(n); ++t) {
        auto rows = iteration_rows(cfg, n, t);
        RingMatrix xb = ds.features.rows_subset(rows);
        RingMatrix yb = ds.labels.rows_subset(rows);
        if (cfg.model != ModelKind::bpnn) {
            RingMatrix fwd = ctx.trunc(mat_mul(rg, xb, w[0]));
            if (cfg.model == ModelKind::logistic) fwd = ctx.sigmoid(fwd);
            RingMatrix diff = mat_sub(rg, fwd, yb);
            RingMatrix grad = ctx.trunc(mat_mul(rg, xb.transposed(), diff));
            RingMatrix upd = ctx.trunc(mat_scale(rg, lr_scaled, grad));
            w[0] = mat_sub(rg, w[0], upd);
        } else {
            RingMatrix g1m, g2m;
            RingMatrix a1 = ctx.relu(ctx.trunc(mat_mul(rg, xb, w[0])), &g1m);
            RingMatrix a2 = ctx.relu(ctx.trunc(mat_mul(rg, a1, w[1])), &g2m);
            RingMatrix a3 = ctx.trunc(mat_mul(rg, a2, w[2]));
            RingMatrix e3 = mat_sub(rg, a3, yb);
            RingMatrix e2 =
                mat_elemwise(rg, ctx.trunc(mat_mul(rg, e3, w[2].transposed())), g2m);
            RingMatrix e1 =
                mat_elemwise(rg, ctx.trunc(mat_mul(rg, e2, w[1].transposed())), g1m);
            RingMatrix g3 = ctx.trunc(mat_mul(rg, a2.transposed(), e3));
            w[2] = mat_sub(rg, w[2], ctx.trunc(mat_scale(rg, lr_scaled, g3)));
            RingMatrix g2 = ctx.trunc(mat_mul(rg, a1.transposed(), e2));
            w[1] = mat_sub(rg, w[1], ctx.trunc(mat_scale(rg, lr_scaled, g2)));
            RingMatrix g1 = ctx.trunc(mat_mul(rg, xb.transposed(), e1));
            w[0] = mat_sub(rg, w[0], ctx.trunc(mat_scale(rg, lr_scaled, g1)));
        }
    }
    return Model{std::move(w)};
}

FloatModel float_train_bpnn(const Dataset& ds, const TrainConfig& cfg, const FixedCodec& codec) {
    size_t n = ds.size(), dim = ds.dim(), lc = ds.label_cols();
    auto shapes = weight_shapes(cfg, dim, lc);
    FloatModel m;
    m.shapes = shapes;
    for (auto& init : initial_weights(codec, cfg, dim, lc)) {
        std::vector<double> w(init.size());
        for (size_t i = 0; i < init.size(); ++i) w[i] = codec.decode(init[i]);
        m.weights.push_back(std::move(w));
    }
    auto feats = decode_features(ds, codec);
    std::vector<std::vector<double>> labs(n, std::vector<double>(lc));
    for (size_t i = 0; i < n; ++i)
        for (size_t c = 0; c < lc; ++c) labs[i][c] = codec.decode(ds.labels.at(i, c));

    auto matmulf = [](const std::vector<double>& a, size_t ar, size_t ac,
                      const std::vector<double>& b, size_t bc) {
        std::vector<double> z(ar * bc, 0.0);
        for (size_t r = 0; r < ar; ++r)
            for (size_t k = 0; k < ac; ++k) {
                double v = a[r * ac + k];
                if (v == 0) continue;
                for (size_t c = 0; c < bc; ++c) z[r * bc + c] += v * b[k * bc + c];
            }
        return z;
    };

    double rate = cfg.lr / static_cast<double>(cfg.batch);
    size_t h1 = cfg.hidden.at(0), h2 = cfg.hidden.at(1);
    for (size_t t = 0; t < cfg.iterations(n); ++t) {
        auto rows = iteration_rows(cfg, n, t);
        size_t B = rows.size();
        std::vector<double> xb(B * dim), yb(B * lc);
        for (size_t r = 0; r < B; ++r) {
            for (size_t c = 0; c < dim; ++c) xb[r * dim + c] = feats[rows[r]][c];
            for (size_t c = 0; c < lc; ++c) yb[r * lc + c] = labs[rows[r]][c];
        }
        auto relu = [](std::vector<double>& v, std::vector<double>& gate) {
            gate.resize(v.size());
            for (size_t i = 0; i < v.size(); ++i) {
                gate[i] = v[i] >= 0 ? 1.0 : 0.0;
                v[i] *= gate[i];
            }
        };
        std::vector<double> a1 = matmulf(xb, B, dim, m.weights[0], h1), gate1;
        relu(a1, gate1);
        std::vector<double> a2 = matmulf(a1, B, h1, m.weights[1], h2), gate2;
        relu(a2, gate2);
        std::vector<double> a3 = matmulf(a2, B, h2, m.weights[2], lc);
        std::vector<double> e3(B * lc);
        for (size_t i = 0; i < e3.size(); ++i) e3[i] = a3[i] - yb[i];

        auto transpose = [](const std::vector<double>& a, size_t r, size_t c) {
            std::vector<double> t(a.size());
            for (size_t i = 0; i < r; ++i)
                for (size_t j = 0; j < c; ++j) t[j * r + i] = a[i * c + j];
            return t;
        };
        std::vector<double> e2 = matmulf(e3, B, lc, transpose(m.weights[2], h2, lc), h2);
        for (size_t i = 0; i < e2.size(); ++i) e2[i] *= gate2[i];
        std::vector<double> e1 = matmulf(e2, B, h2, transpose(m.weights[1], h1, h2), h1);
        for (size_t i = 0; i < e1.size(); ++i) e1[i] *= gate1[i];

        auto update = [&](std::vector<double>& w, const std::vector<double>& a, size_t ac,
                          const std::vector<double>& err, size_t ec) {
            auto grad = matmulf(transpose(a, B, ac), ac, B, err, ec);
            for (size_t i = 0; i < w.size(); ++i) w[i] -= rate * grad[i];
        };
        update(m.weights[2], a2, h2, e3, lc);
        update(m.weights[1], a1, h1, e2, h2);
        update(m.weights[0], xb, dim, e1, h1);
    }
    return m;
}

namespace {

std::vector<std::vector<double>> decode_model(const Model& m, const FixedCodec& codec) {
    std::vector<std::vector<double>> out;
    for (const auto& w : m.weights) {
        std::vector<double> v(w.size());
        for (size_t i = 0; i < w.size(); ++i) v[i] = codec.decode(w[i]);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

double evaluate(const Model& m, ModelKind kind, const Dataset& test, const FixedCodec& codec) {
    auto feats = decode_features(test, codec);
    auto labels = decode_labels(test, codec);
    auto w = decode_model(m, codec);
    size_t hit = 0;
    if (kind != ModelKind::bpnn) {
        for (size_t i = 0; i < feats.size(); ++i) {
            double s = 0;
            for (size_t j = 0; j < feats[i].size(); ++j) s += feats[i][j] * w[0][j];
            int pred = kind == ModelKind::linear ? (s >= 0.5) : (s >= 0.0);
            hit += pred == labels[i];
        }
    } else {
        FloatModel fm;
        fm.weights = w;
        return evaluate_float(fm, test, codec);
    }
    return static_cast<double>(hit) / static_cast<double>(feats.size());
}

double evaluate_float(const FloatModel& m, const Dataset& test, const FixedCodec& codec) {
    auto feats = decode_features(test, codec);
    auto labels = decode_labels(test, codec);
    size_t hit = 0;
    size_t dim = feats[0].size();
    std::vector<size_t> widths;
    size_t prev = dim;
    for (const auto& w : m.weights) {
        widths.push_back(w.size() / prev);
        prev = widths.back();
    }
    for (size_t i = 0; i < feats.size(); ++i) {
        std::vector<double> act = feats[i];
        size_t in = dim;
        for (size_t layer = 0; layer < m.weights.size(); ++layer) {
            size_t out = widths[layer];
            std::vector<double> next(out, 0.0);
            for (size_t k = 0; k < in; ++k) {
                double v = act[k];
                if (v == 0) continue;
                for (size_t c = 0; c < out; ++c) next[c] += v * m.weights[layer][k * out + c];
            }
            if (layer + 1 < m.weights.size())
                for (auto& v : next) v = v >= 0 ? v : 0.0;
            act = std::move(next);
            in = out;
        }
        int pred = static_cast<int>(std::max_element(act.begin(), act.end()) - act.begin());
        hit += pred == labels[i];
    }
    return static_cast<double>(hit) / static_cast<double>(feats.size());
}

void export_model(const Model& m, const FixedCodec& codec, const std::string& path) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw Error("cannot write model file: " + path);
    for (const auto& w : m.weights)
        for (u64 v : w.data()) {
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
            bin.write(reinterpret_cast<char*>(b), 8);
        }
    std::ofstream txt(path + ".txt");
    for (const auto& w : m.weights) {
        for (size_t r = 0; r < w.rows(); ++r) {
            for (size_t c = 0; c < w.cols(); ++c)
                txt << (c ? " " : "") << codec.decode(w.at(r, c));
            txt << "\n";
        }
        txt << "\n";
    }
}

Model import_model(const std::string& path, const TrainConfig& cfg, size_t dim,
                   size_t label_cols) {
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw ParseError("cannot open model file: " + path);
    Model m;
    for (auto [r, c] : weight_shapes(cfg, dim, label_cols)) {
        RingMatrix w(r, c);
        for (auto& v : w.data()) {
            unsigned char b[8];
            bin.read(reinterpret_cast<char*>(b), 8);
            if (!bin) throw ParseError("model file truncated");
            v = 0;
            for (int i = 0; i < 8; ++i) v |= u64{b[i]} << (8 * i);
        }
        m.weights.push_back(std::move(w));
    }
    return m;
}

}  // namespace pmpl
