#include "pmpl/pool.hpp"

#include <cstring>
#include <filesystem>

#include "pmpl/errors.hpp"
#include "pmpl/rng.hpp"

namespace pmpl {

namespace {

constexpr char kMagic[8] = {'P', 'M', 'P', 'L', 'P', 'O', 'O', 'L'};
constexpr std::uint16_t kVersion = 1;

// header: magic, version u16, ell u8, ellf u8, sigma u8, party u8,
// phi rows 12*u64, coefficients 11*u64, fingerprint 32 bytes
constexpr size_t kHeaderBytes = 8 + 2 + 4 + 12 * 8 + 11 * 8 + 32;

void put_u64(std::vector<unsigned char>& b, u64 v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

u64 get_u64(const unsigned char* p) {
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= u64{p[i]} << (8 * i);
    return v;
}

std::vector<unsigned char> encode_header(const PoolHeader& h) {
    std::vector<unsigned char> b;
    b.reserve(kHeaderBytes);
    b.insert(b.end(), kMagic, kMagic + 8);
    b.push_back(static_cast<unsigned char>(kVersion & 0xff));
    b.push_back(static_cast<unsigned char>(kVersion >> 8));
    b.push_back(static_cast<unsigned char>(h.params.ell));
    b.push_back(static_cast<unsigned char>(h.params.frac_bits));
    b.push_back(static_cast<unsigned char>(h.params.sigma));
    b.push_back(static_cast<unsigned char>(h.party));
    for (const auto& row : h.params.matrix.rows)
        for (u64 v : row) put_u64(b, v);
    for (u64 v : h.params.coef.packed()) put_u64(b, v);
    b.insert(b.end(), h.fingerprint.begin(), h.fingerprint.end());
    return b;
}

PoolHeader decode_header(const unsigned char* p, size_t n) {
    if (n < kHeaderBytes || std::memcmp(p, kMagic, 8) != 0)
        throw ParseError("not a pool file (bad magic)");
    if ((p[8] | (p[9] << 8)) != kVersion) throw ParseError("unsupported pool version");
    PoolHeader h;
    h.params.ell = p[10];
    h.params.frac_bits = p[11];
    h.params.sigma = p[12];
    h.party = p[13];
    h.params.matrix.ell = h.params.ell;
    size_t off = 14;
    for (auto& row : h.params.matrix.rows)
        for (auto& v : row) { v = get_u64(p + off); off += 8; }
    std::array<u64, 11> packed;
    for (auto& v : packed) { v = get_u64(p + off); off += 8; }
    h.params.coef = Coefficients::from_packed(packed);
    std::memcpy(h.fingerprint.data(), p + off, 32);
    return h;
}

// per-party fixed item widths in words; matrix items are variable
size_t item_words(PoolKind k, unsigned party) {
    bool p0 = party == 0;
    switch (k) {
        case PoolKind::vmt: return p0 ? 6 : 3;
        case PoolKind::trunc_pair: return p0 ? 5 : 3;
        case PoolKind::dabit3:
        case PoolKind::dabit2: return 2;
        case PoolKind::booltriple3:
        case PoolKind::booltriple2: return 3;
        case PoolKind::kshare: return p0 ? 2 : 1;
        case PoolKind::matrix: throw ArgumentError("matrix items are variable sized");
    }
    throw ArgumentError("unknown pool kind");
}

class FileSink {
  public:
    explicit FileSink(const std::string& path) {
        f_ = std::fopen(path.c_str(), "wb");
        if (!f_) throw Error("cannot open pool file for writing: " + path);
    }
    ~FileSink() {
        if (f_) std::fclose(f_);
    }
    void bytes(const void* p, size_t n) {
        if (std::fwrite(p, 1, n, f_) != n) throw Error("pool write failed");
    }
    void word(u64 v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void words(const std::vector<u64>& vs) {
        for (u64 v : vs) word(v);
    }
    void section_start(PoolKind k, u64 count) {
        unsigned char tag = static_cast<unsigned char>(k);
        bytes(&tag, 1);
        word(count);
    }

  private:
    std::FILE* f_;
};

}  // namespace

PoolPlan& PoolPlan::operator+=(const PoolPlan& o) {
    vmt += o.vmt;
    matrix_shapes.insert(matrix_shapes.end(), o.matrix_shapes.begin(), o.matrix_shapes.end());
    trunc_pairs += o.trunc_pairs;
    dabit3 += o.dabit3;
    dabit2 += o.dabit2;
    booltriple3 += o.booltriple3;
    booltriple2 += o.booltriple2;
    kshare += o.kshare;
    return *this;
}

std::string pool_file_name(const std::string& dir, unsigned party) {
    return dir + "/pool_p" + std::to_string(party) + ".bin";
}

std::array<unsigned char, 32> pool_fingerprint(const DomainParams& params, const PoolPlan& plan,
                                               u64 seed) {
    Fingerprint fp;
    fp.absorb(seed);
    fp.absorb(params.ell);
    fp.absorb(params.frac_bits);
    fp.absorb(params.sigma);
    for (const auto& row : params.matrix.rows)
        for (u64 v : row) fp.absorb(v);
    fp.absorb(plan.vmt);
    fp.absorb(plan.trunc_pairs);
    fp.absorb(plan.dabit3);
    fp.absorb(plan.dabit2);
    fp.absorb(plan.booltriple3);
    fp.absorb(plan.booltriple2);
    fp.absorb(plan.kshare);
    for (const auto& s : plan.matrix_shapes)
        for (u64 v : s) fp.absorb(v);
    return fp.digest();
}

void dealer_generate(const DomainParams& params, const PoolPlan& plan, u64 seed,
                     const std::string& dir) {
    if (params.sigma < 2 || params.sigma >= params.ell)
        throw ArgumentError("sigma must be in [2, ell)");
    std::filesystem::create_directories(dir);
    const PublicMatrix& pm = params.matrix;
    Ring rg = pm.ring();
    auto fpr = pool_fingerprint(params, plan, seed);

    std::array<std::unique_ptr<FileSink>, 3> out;
    for (unsigned p = 0; p < 3; ++p) {
        out[p] = std::make_unique<FileSink>(pool_file_name(dir, p));
        PoolHeader h{params, p, fpr};
        auto bytes = encode_header(h);
        out[p]->bytes(bytes.data(), bytes.size());
    }

    // vmt: full sharings of (u, v, h) with h = u*v
    {
        CounterRng rng(seed, 0, "dealer/vmt");
        for (auto& s : out) s->section_start(PoolKind::vmt, plan.vmt);
        for (u64 i = 0; i < plan.vmt; ++i) {
            u64 u = rng.next_ring(rg), v = rng.next_ring(rg);
            ShareQuad qu = share_value(pm, u, rng);
            ShareQuad qv = share_value(pm, v, rng);
            ShareQuad qh = share_value(pm, rg.mul(u, v), rng);
            for (unsigned p = 0; p < 3; ++p) {
                out[p]->word(qu[p]);
                out[p]->word(qv[p]);
                out[p]->word(qh[p]);
            }
            out[0]->word(qu[3]);
            out[0]->word(qv[3]);
            out[0]->word(qh[3]);
        }
    }

    // matrix triples, shaped per the consumption schedule
    {
        CounterRng rng(seed, 0, "dealer/matrix");
        for (auto& s : out) s->section_start(PoolKind::matrix, plan.matrix_shapes.size());
        for (const auto& shape : plan.matrix_shapes) {
            size_t n = shape[0], d = shape[1], m = shape[2];
            RingMatrix u(n, d), v(d, m);
            for (auto& x : u.data()) x = rng.next_ring(rg);
            for (auto& x : v.data()) x = rng.next_ring(rg);
            RingMatrix h = mat_mul(rg, u, v);
            MatrixSharing su = share_matrix(pm, u, rng);
            MatrixSharing sv = share_matrix(pm, v, rng);
            MatrixSharing sh = share_matrix(pm, h, rng);
            for (unsigned p = 0; p < 3; ++p) {
                out[p]->word(n);
                out[p]->word(d);
                out[p]->word(m);
                out[p]->words(su.by_index[p].data());
                out[p]->words(sv.by_index[p].data());
                out[p]->words(sh.by_index[p].data());
            }
            out[0]->words(su.by_index[3].data());
            out[0]->words(sv.by_index[3].data());
            out[0]->words(sh.by_index[3].data());
        }
    }

    // truncation pairs: r below 2^{ell-sigma}, r' = r >> frac, plus the
    // boolean-shared bit decomposition of r (retained for future use)
    {
        CounterRng rng(seed, 0, "dealer/trunc");
        for (auto& s : out) s->section_start(PoolKind::trunc_pair, plan.trunc_pairs);
        u64 bound = u64{1} << (params.ell - params.sigma);
        for (u64 i = 0; i < plan.trunc_pairs; ++i) {
            u64 r = rng.next_below(bound);
            u64 rp = r >> params.frac_bits;
            ShareQuad qr = share_value(pm, r, rng);
            ShareQuad qp = share_value(pm, rp, rng);
            u64 b1 = rng.next_ring(rg), b2 = rng.next_ring(rg);
            u64 b0 = (r ^ b1 ^ b2) & rg.mask();
            std::array<u64, 3> bitword{b0, b1, b2};
            for (unsigned p = 0; p < 3; ++p) {
                out[p]->word(qr[p]);
                out[p]->word(qp[p]);
                out[p]->word(bitword[p]);
            }
            out[0]->word(qr[3]);
            out[0]->word(qp[3]);
        }
    }

    // daBits: one random bit in both the boolean and the arithmetic domain
    {
        CounterRng rng(seed, 0, "dealer/dabit3");
        for (auto& s : out) s->section_start(PoolKind::dabit3, plan.dabit3);
        for (u64 i = 0; i < plan.dabit3; ++i) {
            u64 bit = rng.next() & 1;
            u64 b1 = rng.next() & 1, b2 = rng.next() & 1;
            u64 a1 = rng.next_ring(rg), a2 = rng.next_ring(rg);
            u64 b0 = bit ^ b1 ^ b2;
            u64 a0 = rg.sub(bit, rg.add(a1, a2));
            std::array<u64, 3> arith{a0, a1, a2}, boolsh{b0, b1, b2};
            for (int p = 0; p < 3; ++p) {
                out[p]->word(arith[p]);
                out[p]->word(boolsh[p]);
            }
        }
    }

    // 2-party flavor: counts differ per party (P2 holds none)
    {
        CounterRng rng(seed, 0, "dealer/dabit2");
        out[0]->section_start(PoolKind::dabit2, plan.dabit2);
        out[1]->section_start(PoolKind::dabit2, plan.dabit2);
        out[2]->section_start(PoolKind::dabit2, 0);
        for (u64 i = 0; i < plan.dabit2; ++i) {
            u64 bit = rng.next() & 1;
            u64 b1 = rng.next() & 1, a1 = rng.next_ring(rg);
            u64 b0 = bit ^ b1, a0 = rg.sub(bit, a1);
            out[0]->word(a0);
            out[0]->word(b0);
            out[1]->word(a1);
            out[1]->word(b1);
        }
    }

    // packed boolean AND triples
    auto gen_btrip = [&](PoolKind kind, u64 count, int parties, const char* purpose) {
        CounterRng rng(seed, 0, purpose);
        for (int p = 0; p < 3; ++p)
            out[p]->section_start(kind, p < parties ? count : 0);
        for (u64 i = 0; i < count; ++i) {
            u64 a = rng.next_ring(rg), b = rng.next_ring(rg);
            u64 c = a & b;
            u64 ax = 0, bx = 0, cx = 0;
            for (int p = 1; p < parties; ++p) {
                u64 as = rng.next_ring(rg), bs = rng.next_ring(rg), cs = rng.next_ring(rg);
                ax ^= as;
                bx ^= bs;
                cx ^= cs;
                out[p]->word(as);
                out[p]->word(bs);
                out[p]->word(cs);
            }
            out[0]->word(a ^ ax);
            out[0]->word(b ^ bx);
            out[0]->word(c ^ cx);
        }
    };
    gen_btrip(PoolKind::booltriple3, plan.booltriple3, 3, "dealer/btrip3");
    gen_btrip(PoolKind::booltriple2, plan.booltriple2, 2, "dealer/btrip2");

    // pre-shared random values k for the alternate-share fast path
    {
        CounterRng rng(seed, 0, "dealer/kshare");
        for (auto& s : out) s->section_start(PoolKind::kshare, plan.kshare);
        for (u64 i = 0; i < plan.kshare; ++i) {
            ShareQuad q = share_value(pm, rng.next_ring(rg), rng);
            for (unsigned p = 0; p < 3; ++p) out[p]->word(q[p]);
            out[0]->word(q[3]);
        }
    }
}

void PoolWriter::add_vmt(const VmtItem& it) {
    auto& w = words_[static_cast<int>(PoolKind::vmt)];
    w.insert(w.end(), {it.u, it.v, it.h});
    if (header_.party == 0) w.insert(w.end(), {it.u_alt, it.v_alt, it.h_alt});
    ++counts_[static_cast<int>(PoolKind::vmt)];
}

void PoolWriter::add_matrix(const MatTripleItem& it) {
    auto& w = words_[static_cast<int>(PoolKind::matrix)];
    w.insert(w.end(), {static_cast<u64>(it.n), static_cast<u64>(it.d), static_cast<u64>(it.m)});
    for (const auto* m : {&it.u, &it.v, &it.h}) w.insert(w.end(), m->data().begin(), m->data().end());
    if (header_.party == 0)
        for (const auto* m : {&it.u_alt, &it.v_alt, &it.h_alt})
            w.insert(w.end(), m->data().begin(), m->data().end());
    ++counts_[static_cast<int>(PoolKind::matrix)];
}

void PoolWriter::add_trunc(const TruncPairItem& it) {
    auto& w = words_[static_cast<int>(PoolKind::trunc_pair)];
    w.insert(w.end(), {it.r, it.r_shift, it.bits});
    if (header_.party == 0) w.insert(w.end(), {it.r_alt, it.r_shift_alt});
    ++counts_[static_cast<int>(PoolKind::trunc_pair)];
}

void PoolWriter::add_dabit(bool three_party, const DaBitItem& it) {
    int k = static_cast<int>(three_party ? PoolKind::dabit3 : PoolKind::dabit2);
    words_[k].insert(words_[k].end(), {it.arith, it.boolean});
    ++counts_[k];
}

void PoolWriter::add_booltriple(bool three_party, const BoolTripleItem& it) {
    int k = static_cast<int>(three_party ? PoolKind::booltriple3 : PoolKind::booltriple2);
    words_[k].insert(words_[k].end(), {it.a, it.b, it.c});
    ++counts_[k];
}

void PoolWriter::add_kshare(const KShareItem& it) {
    auto& w = words_[static_cast<int>(PoolKind::kshare)];
    w.push_back(it.k);
    if (header_.party == 0) w.push_back(it.k_alt);
    ++counts_[static_cast<int>(PoolKind::kshare)];
}

void PoolWriter::write(const std::string& path) const {
    FileSink out(path);
    auto hdr = encode_header(header_);
    out.bytes(hdr.data(), hdr.size());
    for (int k = 1; k <= kPoolKindCount; ++k) {
        out.section_start(static_cast<PoolKind>(k), counts_[k]);
        out.words(words_[k]);
    }
}

struct PoolReader::Section {
    u64 count = 0;
    u64 consumed = 0;
    long offset = 0;            // file offset of the next unread item
    std::vector<long> item_at;  // per-item offsets (matrix kind only)
};

PoolReader::PoolReader(const std::string& path) : sections_(new Section[kPoolKindCount + 1]) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) throw Error("cannot open pool file: " + path);
    unsigned char hdr[kHeaderBytes];
    if (std::fread(hdr, 1, sizeof hdr, f_) != sizeof hdr)
        throw ParseError("pool file truncated in header");
    header_ = decode_header(hdr, sizeof hdr);

    long pos = static_cast<long>(kHeaderBytes);
    for (int s = 0; s < kPoolKindCount; ++s) {
        if (std::fseek(f_, pos, SEEK_SET) != 0) throw ParseError("pool file truncated");
        unsigned char tag;
        unsigned char cnt[8];
        if (std::fread(&tag, 1, 1, f_) != 1 || std::fread(cnt, 1, 8, f_) != 8)
            throw ParseError("pool file truncated in section header");
        if (tag < 1 || tag > kPoolKindCount) throw ParseError("unknown pool section tag");
        Section& sec = sections_[tag];
        sec.count = get_u64(cnt);
        sec.offset = pos + 9;
        pos = sec.offset;
        if (static_cast<PoolKind>(tag) == PoolKind::matrix) {
            for (u64 i = 0; i < sec.count; ++i) {
                sec.item_at.push_back(pos);
                std::fseek(f_, pos, SEEK_SET);
                unsigned char dims[24];
                if (std::fread(dims, 1, 24, f_) != 24) throw ParseError("pool file truncated");
                u64 n = get_u64(dims), d = get_u64(dims + 8), m = get_u64(dims + 16);
                u64 words = n * d + d * m + n * m;
                if (header_.party == 0) words *= 2;
                pos += 24 + static_cast<long>(words * 8);
            }
        } else {
            pos += static_cast<long>(sec.count *
                                     item_words(static_cast<PoolKind>(tag), header_.party) * 8);
        }
    }
}

PoolReader::~PoolReader() {
    if (f_) std::fclose(f_);
}

PoolReader::PoolReader(PoolReader&& o) noexcept
    : header_(o.header_), f_(o.f_), sections_(std::move(o.sections_)) {
    o.f_ = nullptr;
}

PoolReader& PoolReader::operator=(PoolReader&& o) noexcept {
    if (this != &o) {
        if (f_) std::fclose(f_);
        header_ = o.header_;
        f_ = o.f_;
        sections_ = std::move(o.sections_);
        o.f_ = nullptr;
    }
    return *this;
}

u64 PoolReader::remaining(PoolKind k) const {
    const Section& s = sections_[static_cast<int>(k)];
    return s.count - s.consumed;
}

std::vector<u64> PoolReader::take(PoolKind k, size_t words, const char* what) {
    Section& s = sections_[static_cast<int>(k)];
    if (s.consumed >= s.count)
        throw PreprocUnderflow(std::string("preprocessing pool exhausted: ") + what);
    if (std::fseek(f_, s.offset, SEEK_SET) != 0) throw ParseError("pool seek failed");
    std::vector<u64> out(words);
    std::vector<unsigned char> buf(words * 8);
    if (std::fread(buf.data(), 1, buf.size(), f_) != buf.size())
        throw ParseError("pool file truncated in payload");
    for (size_t i = 0; i < words; ++i) out[i] = get_u64(buf.data() + i * 8);
    s.offset += static_cast<long>(words * 8);
    ++s.consumed;
    return out;
}

VmtItem PoolReader::next_vmt() {
    auto w = take(PoolKind::vmt, item_words(PoolKind::vmt, header_.party), "vmt triples");
    VmtItem it{w[0], w[1], w[2], 0, 0, 0};
    if (header_.party == 0) { it.u_alt = w[3]; it.v_alt = w[4]; it.h_alt = w[5]; }
    return it;
}

std::array<u64, 3> PoolReader::peek_matrix_shape() {
    Section& s = sections_[static_cast<int>(PoolKind::matrix)];
    if (s.consumed >= s.count) throw PreprocUnderflow("preprocessing pool exhausted: matrix triples");
    std::fseek(f_, s.item_at[s.consumed], SEEK_SET);
    unsigned char dims[24];
    if (std::fread(dims, 1, 24, f_) != 24) throw ParseError("pool file truncated");
    return {get_u64(dims), get_u64(dims + 8), get_u64(dims + 16)};
}

MatTripleItem PoolReader::next_matrix(size_t n, size_t d, size_t m) {
    Section& s = sections_[static_cast<int>(PoolKind::matrix)];
    if (s.consumed >= s.count) throw PreprocUnderflow("preprocessing pool exhausted: matrix triples");
    long at = s.item_at[s.consumed];
    std::fseek(f_, at, SEEK_SET);
    unsigned char dims[24];
    if (std::fread(dims, 1, 24, f_) != 24) throw ParseError("pool file truncated");
    u64 fn = get_u64(dims), fd = get_u64(dims + 8), fm = get_u64(dims + 16);
    if (fn != n || fd != d || fm != m)
        throw ArgumentError("matrix triple shape mismatch: pool has " + std::to_string(fn) + "x" +
                            std::to_string(fd) + "x" + std::to_string(fm) + ", op needs " +
                            std::to_string(n) + "x" + std::to_string(d) + "x" + std::to_string(m));
    u64 per = n * d + d * m + n * m;
    u64 total = header_.party == 0 ? per * 2 : per;
    std::vector<unsigned char> buf(total * 8);
    if (std::fread(buf.data(), 1, buf.size(), f_) != buf.size())
        throw ParseError("pool file truncated in matrix triple");
    auto grab = [&](size_t& off, size_t r, size_t c) {
        RingMatrix mtx(r, c);
        for (size_t i = 0; i < r * c; ++i) mtx[i] = get_u64(buf.data() + (off + i) * 8);
        off += r * c;
        return mtx;
    };
    MatTripleItem it;
    it.n = n; it.d = d; it.m = m;
    size_t off = 0;
    it.u = grab(off, n, d);
    it.v = grab(off, d, m);
    it.h = grab(off, n, m);
    if (header_.party == 0) {
        it.u_alt = grab(off, n, d);
        it.v_alt = grab(off, d, m);
        it.h_alt = grab(off, n, m);
    }
    ++s.consumed;
    return it;
}

TruncPairItem PoolReader::next_trunc() {
    auto w = take(PoolKind::trunc_pair, item_words(PoolKind::trunc_pair, header_.party),
                  "truncation pairs");
    TruncPairItem it{w[0], w[1], w[2], 0, 0};
    if (header_.party == 0) { it.r_alt = w[3]; it.r_shift_alt = w[4]; }
    return it;
}

DaBitItem PoolReader::next_dabit(bool three_party) {
    PoolKind k = three_party ? PoolKind::dabit3 : PoolKind::dabit2;
    auto w = take(k, 2, three_party ? "daBits (3pc)" : "daBits (2pc)");
    return {w[0], w[1]};
}

BoolTripleItem PoolReader::next_booltriple(bool three_party) {
    PoolKind k = three_party ? PoolKind::booltriple3 : PoolKind::booltriple2;
    auto w = take(k, 3, three_party ? "boolean triples (3pc)" : "boolean triples (2pc)");
    return {w[0], w[1], w[2]};
}

KShareItem PoolReader::next_kshare() {
    auto w = take(PoolKind::kshare, item_words(PoolKind::kshare, header_.party), "k shares");
    KShareItem it{w[0], 0};
    if (header_.party == 0) it.k_alt = w[1];
    return it;
}

namespace {

struct AllPools {
    std::array<PoolReader, 3> r;
};

u64 recon(const PoolHeader& h, u64 s0, u64 s1, u64 s2) {
    return reconstruct3(h.params.matrix, h.params.coef, {0, s0}, {1, s1}, {2, s2});
}

}  // namespace

PoolTrace load_pool_trace(const std::string& dir) {
    PoolReader p0(pool_file_name(dir, 0)), p1(pool_file_name(dir, 1)),
        p2(pool_file_name(dir, 2));
    PoolTrace tr;
    tr.params = p0.header().params;
    u64 n = p0.remaining(PoolKind::trunc_pair);
    tr.trunc_secrets.reserve(n);
    for (u64 i = 0; i < n; ++i) {
        auto a = p0.next_trunc();
        auto b = p1.next_trunc();
        auto c = p2.next_trunc();
        tr.trunc_secrets.push_back({recon(p0.header(), a.r, b.r, c.r),
                                    recon(p0.header(), a.r_shift, b.r_shift, c.r_shift)});
    }
    return tr;
}

u64 validate_pools(const std::string& dir) {
    std::array<PoolReader, 3> r{PoolReader(pool_file_name(dir, 0)),
                                PoolReader(pool_file_name(dir, 1)),
                                PoolReader(pool_file_name(dir, 2))};
    const PoolHeader& h = r[0].header();
    const PublicMatrix& pm = h.params.matrix;
    const Coefficients& co = h.params.coef;
    Ring rg = pm.ring();
    for (unsigned p = 0; p < 3; ++p) {
        if (r[p].header().party != p) throw ValidationError({"pool file party mismatch"});
        if (r[p].header().fingerprint != h.fingerprint)
            throw ValidationError({"pool fingerprints differ across parties"});
    }
    u64 checked = 0;
    auto check = [](bool ok, const char* what) {
        if (!ok) throw ValidationError({std::string("pool item invalid: ") + what});
    };
    auto recon2p = [&](u64 s0, u64 s1, u64 s3) {
        return reconstruct2(pm, co, {0, s0}, {1, s1}, {3, s3});
    };

    for (u64 i = r[0].remaining(PoolKind::vmt); i-- > 0;) {
        auto a = r[0].next_vmt(), b = r[1].next_vmt(), c = r[2].next_vmt();
        u64 u = recon(h, a.u, b.u, c.u), v = recon(h, a.v, b.v, c.v), hh = recon(h, a.h, b.h, c.h);
        check(hh == rg.mul(u, v), "vmt h != u*v");
        check(recon2p(a.u, b.u, a.u_alt) == u, "vmt alternate-route mismatch");
        check(recon2p(a.h, b.h, a.h_alt) == hh, "vmt alternate-route mismatch (h)");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::trunc_pair); i-- > 0;) {
        auto a = r[0].next_trunc(), b = r[1].next_trunc(), c = r[2].next_trunc();
        u64 rr = recon(h, a.r, b.r, c.r), rp = recon(h, a.r_shift, b.r_shift, c.r_shift);
        check(rr < (u64{1} << (h.params.ell - h.params.sigma)), "trunc mask out of range");
        check(rp == rr >> h.params.frac_bits, "trunc pair relation broken");
        check(((a.bits ^ b.bits ^ c.bits) & rg.mask()) == rr, "edabit bits do not match r");
        check(recon2p(a.r, b.r, a.r_alt) == rr, "trunc alternate-route mismatch");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::dabit3); i-- > 0;) {
        auto a = r[0].next_dabit(true), b = r[1].next_dabit(true), c = r[2].next_dabit(true);
        u64 bit = (a.boolean ^ b.boolean ^ c.boolean) & 1;
        u64 sum = rg.add(rg.add(a.arith, b.arith), c.arith);
        check(sum == bit, "daBit domains disagree");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::dabit2); i-- > 0;) {
        auto a = r[0].next_dabit(false), b = r[1].next_dabit(false);
        u64 bit = (a.boolean ^ b.boolean) & 1;
        check(rg.add(a.arith, b.arith) == bit, "2pc daBit domains disagree");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::booltriple3); i-- > 0;) {
        auto a = r[0].next_booltriple(true), b = r[1].next_booltriple(true),
             c = r[2].next_booltriple(true);
        check(((a.a ^ b.a ^ c.a) & (a.b ^ b.b ^ c.b)) == (a.c ^ b.c ^ c.c),
              "boolean triple AND relation broken");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::booltriple2); i-- > 0;) {
        auto a = r[0].next_booltriple(false), b = r[1].next_booltriple(false);
        check(((a.a ^ b.a) & (a.b ^ b.b)) == (a.c ^ b.c), "2pc boolean triple broken");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::kshare); i-- > 0;) {
        auto a = r[0].next_kshare(), b = r[1].next_kshare(), c = r[2].next_kshare();
        u64 k = recon(h, a.k, b.k, c.k);
        check(recon2p(a.k, b.k, a.k_alt) == k, "k-share alternate-route mismatch");
        ++checked;
    }
    for (u64 i = r[0].remaining(PoolKind::matrix); i-- > 0;) {
        auto shape = r[0].peek_matrix_shape();
        auto a = r[0].next_matrix(shape[0], shape[1], shape[2]);
        auto b = r[1].next_matrix(shape[0], shape[1], shape[2]);
        auto c = r[2].next_matrix(shape[0], shape[1], shape[2]);
        auto reconm = [&](const RingMatrix& m0, const RingMatrix& m1, const RingMatrix& m2) {
            RingMatrix z(m0.rows(), m0.cols());
            for (size_t j = 0; j < z.size(); ++j)
                z[j] = rg.reduce(co.c0 * m0[j] + co.c1 * m1[j] + co.c2 * m2[j]);
            return z;
        };
        RingMatrix u = reconm(a.u, b.u, c.u), v = reconm(a.v, b.v, c.v),
                   hh = reconm(a.h, b.h, c.h);
        check(mat_mul(rg, u, v) == hh, "matrix triple H != U x V");
        ++checked;
    }
    return checked;
}

}  // namespace pmpl
