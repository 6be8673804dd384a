#include "pmpl/data.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pmpl/errors.hpp"

namespace pmpl {

namespace {

u32 read_be32(std::istream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw ParseError("idx file truncated in header");
    return (u32{b[0]} << 24) | (u32{b[1]} << 16) | (u32{b[2]} << 8) | u32{b[3]};
}

RingMatrix labels_to_matrix(const std::vector<unsigned char>& raw, const FixedCodec& codec,
                            bool one_hot) {
    u64 one = codec.encode(1.0);
    if (!one_hot) {
        // binary task: digit "0" is the positive class
        RingMatrix y(raw.size(), 1);
        for (size_t i = 0; i < raw.size(); ++i) y[i] = raw[i] == 0 ? one : 0;
        return y;
    }
    RingMatrix y(raw.size(), 10);
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] > 9) throw ParseError("label out of range for a ten-class task");
        y.at(i, raw[i]) = one;
    }
    return y;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 const FixedCodec& codec, bool one_hot, size_t limit) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw ParseError("cannot open idx image file: " + images_path);
    if (read_be32(fi) != 0x00000803u) throw ParseError("bad idx image magic");
    size_t n = read_be32(fi), rows = read_be32(fi), cols = read_be32(fi);

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw ParseError("cannot open idx label file: " + labels_path);
    if (read_be32(fl) != 0x00000801u) throw ParseError("bad idx label magic");
    size_t nl = read_be32(fl);
    if (nl != n) throw ParseError("idx image/label counts disagree");
    if (limit && limit < n) n = limit;

    size_t d = rows * cols;
    Dataset ds;
    ds.features = RingMatrix(n, d);
    std::vector<unsigned char> px(d);
    for (size_t i = 0; i < n; ++i) {
        fi.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(d));
        if (!fi) throw ParseError("idx file truncated in pixel data");
        for (size_t j = 0; j < d; ++j) ds.features.at(i, j) = codec.encode(px[j] / 255.0);
    }
    std::vector<unsigned char> raw(n);
    fl.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!fl) throw ParseError("idx file truncated in label data");
    ds.labels = labels_to_matrix(raw, codec, one_hot);
    ds.owner.assign(n, 0);
    assign_owners_blocks(ds);
    return ds;
}

Dataset load_csv(const std::string& path, const FixedCodec& codec, bool one_hot, size_t limit) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open csv file: " + path);
    std::vector<std::vector<double>> rows;
    std::vector<unsigned char> labels;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t used = 0;
                double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                vals.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) { first = false; continue; }  // header row
            throw ParseError("non-numeric csv cell outside the header");
        }
        first = false;
        if (vals.size() < 2) throw ParseError("csv row needs features and a label");
        double lab = vals.back();
        vals.pop_back();
        if (!rows.empty() && vals.size() != rows[0].size())
            throw ParseError("csv rows have inconsistent width");
        rows.push_back(std::move(vals));
        labels.push_back(static_cast<unsigned char>(lab));
        if (limit && rows.size() >= limit) break;
    }
    if (rows.empty()) throw ParseError("csv file has no data rows");

    Dataset ds;
    ds.features = RingMatrix(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            ds.features.at(i, j) = codec.encode(rows[i][j]);
    if (one_hot) {
        ds.labels = labels_to_matrix(labels, codec, true);
    } else {
        // csv binary labels are taken literally (no digit-0 remapping)
        ds.labels = RingMatrix(labels.size(), 1);
        u64 one = codec.encode(1.0);
        for (size_t i = 0; i < labels.size(); ++i) ds.labels[i] = labels[i] ? one : 0;
    }
    ds.owner.assign(rows.size(), 0);
    assign_owners_blocks(ds);
    return ds;
}

void assign_owners_blocks(Dataset& ds) {
    size_t n = ds.size();
    for (size_t i = 0; i < n; ++i) ds.owner[i] = static_cast<int>(i * 3 / n);
}

std::vector<std::vector<double>> decode_features(const Dataset& ds, const FixedCodec& codec) {
    std::vector<std::vector<double>> out(ds.size(), std::vector<double>(ds.dim()));
    for (size_t i = 0; i < ds.size(); ++i)
        for (size_t j = 0; j < ds.dim(); ++j) out[i][j] = codec.decode(ds.features.at(i, j));
    return out;
}

std::vector<int> decode_labels(const Dataset& ds, const FixedCodec& codec) {
    std::vector<int> out(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        if (ds.label_cols() == 1) {
            out[i] = codec.decode(ds.labels.at(i, 0)) > 0.5 ? 1 : 0;
        } else {
            int best = 0;
            double bv = -1;
            for (size_t c = 0; c < ds.label_cols(); ++c) {
                double v = codec.decode(ds.labels.at(i, c));
                if (v > bv) {
                    bv = v;
                    best = static_cast<int>(c);
                }
            }
            out[i] = best;
        }
    }
    return out;
}

}  // namespace pmpl
