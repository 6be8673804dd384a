#pragma once

#include <string>
#include <vector>

#include "pmpl/matrix.hpp"
#include "pmpl/vsss.hpp"

namespace pmpl {

// Fixed-point encoded training data. Labels are one column (binary tasks)
// or a one-hot block. Each sample has an owning party.
struct Dataset {
    RingMatrix features;      // n x d
    RingMatrix labels;        // n x 1 or n x classes
    std::vector<int> owner;   // in {0, 1, 2}

    size_t size() const { return features.rows(); }
    size_t dim() const { return features.cols(); }
    size_t label_cols() const { return labels.cols(); }
};

// IDX ingestion (big-endian magic 0x803 for images, 0x801 for labels).
// Pixels are scaled by 1/255 before encoding. Binary tasks map digit 0 to
// label 1; one-hot tasks expand to ten columns.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 const FixedCodec& codec, bool one_hot, size_t limit = 0);

// CSV: optional header, features in all but the last column, label last.
Dataset load_csv(const std::string& path, const FixedCodec& codec, bool one_hot,
                 size_t limit = 0);

// Contiguous thirds by default: every party contributes a block of rows.
void assign_owners_blocks(Dataset& ds);

// Plain-double view used by evaluation code.
std::vector<std::vector<double>> decode_features(const Dataset& ds, const FixedCodec& codec);
std::vector<int> decode_labels(const Dataset& ds, const FixedCodec& codec);

// Deterministic MNIST-format surrogate: procedurally rendered digit strokes
// under affine jitter and pixel noise, written as the four standard IDX
// files. Real IDX data drops in through the same loader.
void write_synthetic_digits(const std::string& dir, size_t train_n, size_t test_n, u64 seed);

}  // namespace pmpl
