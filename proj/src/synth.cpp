#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "pmpl/data.hpp"
#include "pmpl/errors.hpp"
#include "pmpl/rng.hpp"

namespace pmpl {

namespace {

struct Seg {
    double x1, y1, x2, y2;
};

// stroke skeletons per digit class, in unit coordinates (origin top-left)
std::vector<Seg> digit_strokes(int d) {
    auto arc = [](double cx, double cy, double rx, double ry, double a0, double a1, int steps) {
        std::vector<Seg> out;
        for (int i = 0; i < steps; ++i) {
            double t0 = a0 + (a1 - a0) * i / steps, t1 = a0 + (a1 - a0) * (i + 1) / steps;
            out.push_back({cx + rx * std::cos(t0), cy + ry * std::sin(t0),
                           cx + rx * std::cos(t1), cy + ry * std::sin(t1)});
        }
        return out;
    };
    const double pi = 3.14159265358979;
    std::vector<Seg> s;
    switch (d) {
        case 0: return arc(0.5, 0.5, 0.28, 0.38, 0, 2 * pi, 14);
        case 1:
            s = {{0.35, 0.3, 0.52, 0.14}, {0.52, 0.14, 0.52, 0.86}};
            return s;
        case 2: {
            s = arc(0.5, 0.32, 0.25, 0.2, -pi, 0.35 * pi, 7);
            s.push_back({0.66, 0.45, 0.28, 0.84});
            s.push_back({0.28, 0.84, 0.74, 0.84});
            return s;
        }
        case 3: {
            s = arc(0.47, 0.3, 0.24, 0.17, -0.9 * pi, 0.5 * pi, 7);
            auto b = arc(0.47, 0.66, 0.26, 0.2, -0.5 * pi, 0.9 * pi, 7);
            s.insert(s.end(), b.begin(), b.end());
            return s;
        }
        case 4:
            s = {{0.62, 0.86, 0.62, 0.14}, {0.62, 0.14, 0.26, 0.6}, {0.26, 0.6, 0.78, 0.6}};
            return s;
        case 5: {
            s = {{0.7, 0.16, 0.34, 0.16}, {0.34, 0.16, 0.32, 0.46}};
            auto b = arc(0.48, 0.64, 0.24, 0.22, -0.6 * pi, 0.75 * pi, 8);
            s.insert(s.end(), b.begin(), b.end());
            return s;
        }
        case 6: {
            s = {{0.62, 0.14, 0.36, 0.5}};
            auto b = arc(0.5, 0.66, 0.2, 0.2, 0, 2 * pi, 10);
            s.insert(s.end(), b.begin(), b.end());
            return s;
        }
        case 7:
            s = {{0.26, 0.16, 0.74, 0.16}, {0.74, 0.16, 0.42, 0.86}};
            return s;
        case 8: {
            s = arc(0.5, 0.32, 0.2, 0.18, 0, 2 * pi, 10);
            auto b = arc(0.5, 0.68, 0.24, 0.2, 0, 2 * pi, 10);
            s.insert(s.end(), b.begin(), b.end());
            return s;
        }
        case 9: {
            s = arc(0.5, 0.34, 0.2, 0.2, 0, 2 * pi, 10);
            s.push_back({0.7, 0.4, 0.56, 0.86});
            return s;
        }
    }
    throw ArgumentError("digit class out of range");
}

double seg_dist(double px, double py, const Seg& s) {
    double vx = s.x2 - s.x1, vy = s.y2 - s.y1;
    double wx = px - s.x1, wy = py - s.y1;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
    double dx = px - (s.x1 + t * vx), dy = py - (s.y1 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

// gaussian via Box-Muller on the counter stream
double gauss(CounterRng& rng) {
    double u1 = (rng.next() >> 11) / 9007199254740992.0 + 1e-12;
    double u2 = (rng.next() >> 11) / 9007199254740992.0;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * 3.14159265358979 * u2);
}

void render(CounterRng& rng, int digit, unsigned char* out) {
    auto strokes = digit_strokes(digit);
    // per-sample affine jitter
    double theta = rng.next_real(-0.22, 0.22);
    double scale = rng.next_real(0.8, 1.12);
    double shear = rng.next_real(-0.15, 0.15);
    double tx = rng.next_real(-0.09, 0.09), ty = rng.next_real(-0.09, 0.09);
    double thick = rng.next_real(0.05, 0.075);
    double ct = std::cos(theta), st = std::sin(theta);
    for (auto& s : strokes) {
        auto jig = [&](double& x, double& y) {
            double cxp = x - 0.5, cyp = y - 0.5;
            double xr = scale * (ct * cxp - st * cyp) + shear * cyp;
            double yr = scale * (st * cxp + ct * cyp);
            x = xr + 0.5 + tx;
            y = yr + 0.5 + ty;
        };
        jig(s.x1, s.y1);
        jig(s.x2, s.y2);
    }
    for (int r = 0; r < 28; ++r) {
        for (int c = 0; c < 28; ++c) {
            double px = (c + 0.5) / 28.0, py = (r + 0.5) / 28.0;
            double best = 1e9;
            for (const auto& s : strokes) best = std::min(best, seg_dist(px, py, s));
            double v = std::exp(-(best * best) / (2 * thick * thick));
            v += 0.09 * gauss(rng);
            v = std::clamp(v, 0.0, 1.0);
            out[r * 28 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    }
}

void write_be32(std::ofstream& f, u32 v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<char*>(b), 4);
}

void write_split(const std::string& images, const std::string& labels, size_t n,
                 CounterRng& rng) {
    std::ofstream fi(images, std::ios::binary), fl(labels, std::ios::binary);
    if (!fi || !fl) throw Error("cannot write idx files");
    write_be32(fi, 0x00000803u);
    write_be32(fi, static_cast<u32>(n));
    write_be32(fi, 28);
    write_be32(fi, 28);
    write_be32(fl, 0x00000801u);
    write_be32(fl, static_cast<u32>(n));
    std::vector<unsigned char> img(28 * 28);
    for (size_t i = 0; i < n; ++i) {
        int digit = static_cast<int>(rng.next() % 10);
        render(rng, digit, img.data());
        fi.write(reinterpret_cast<char*>(img.data()), img.size());
        unsigned char lab = static_cast<unsigned char>(digit);
        fl.write(reinterpret_cast<char*>(&lab), 1);
    }
}

}  // namespace

void write_synthetic_digits(const std::string& dir, size_t train_n, size_t test_n, u64 seed) {
    std::filesystem::create_directories(dir);
    CounterRng tr(seed, 0, "digits/train"), te(seed, 0, "digits/test");
    write_split(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte", train_n, tr);
    write_split(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte", test_n, te);
}

}  // namespace pmpl
