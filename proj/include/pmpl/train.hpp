#pragma once

#include <optional>
#include <string>

#include "pmpl/data.hpp"
#include "pmpl/engine.hpp"
#include "pmpl/pool.hpp"

namespace pmpl {

enum class ModelKind { linear, logistic, bpnn };

ModelKind model_kind_from_name(const std::string& name);
std::string model_kind_name(ModelKind k);

struct TrainConfig {
    ModelKind model = ModelKind::logistic;
    size_t batch = 128;
    double lr = 0.1;
    size_t epochs = 1;
    std::vector<size_t> hidden{128, 128};
    std::optional<size_t> drop_at;  // iteration at which P2 leaves
    u64 seed = 1;                   // public: init, batch order

    size_t iterations(size_t n) const { return epochs * (n / batch); }
};

// Revealed model: one weight matrix for the regressions, three for the net.
struct Model {
    std::vector<RingMatrix> weights;
};

// Public, seeded schedule pieces shared by the protocol run and the oracle.
std::vector<size_t> batch_order(u64 seed, size_t epoch, size_t n);
std::vector<RingMatrix> initial_weights(const FixedCodec& codec, const TrainConfig& cfg,
                                        size_t dim, size_t label_cols);

// Preprocessing demand for one full training run, both protocol modes
// covered so a drop at any iteration stays inside the same pools.
PoolPlan plan_for_training(const DomainParams& params, const TrainConfig& cfg, size_t n,
                           size_t dim, size_t label_cols);

// Secret-shares a dataset everyone holds in the clear (local-sim path):
// each party shares the rows it owns, and the shared rows are scattered
// back into dataset order.
struct SharedDataset {
    SharedMatrix features, labels;
};
SharedDataset share_dataset(Engine& e, const Dataset& full);

// One party's view of secret-shared training. Returns the revealed model at
// the privileged party, nullopt elsewhere (and at a dropped party).
std::optional<Model> train_party(Engine& e, const SharedDataset& ds, const TrainConfig& cfg);

// Cleartext fixed-point replay. With a mask trace from the run's pools the
// truncations round identically and the model matches bit for bit; without
// one, plain floor truncation is applied.
Model oracle_train(const DomainParams& params, const Dataset& ds, const TrainConfig& cfg,
                   const PoolTrace* masks);

// Double-precision baseline for the network accuracy comparison.
struct FloatModel {
    std::vector<std::vector<double>> weights;  // row-major, same shapes
    std::vector<std::pair<size_t, size_t>> shapes;
};
FloatModel float_train_bpnn(const Dataset& ds, const TrainConfig& cfg, const FixedCodec& codec);

// accuracy of a revealed model on a held-out set, evaluated in double
double evaluate(const Model& m, ModelKind kind, const Dataset& test, const FixedCodec& codec);
double evaluate_float(const FloatModel& m, const Dataset& test, const FixedCodec& codec);

// flat little-endian u64 dump plus a decoded text rendering alongside
void export_model(const Model& m, const FixedCodec& codec, const std::string& path);
Model import_model(const std::string& path, const TrainConfig& cfg, size_t dim,
                   size_t label_cols);

}  // namespace pmpl
