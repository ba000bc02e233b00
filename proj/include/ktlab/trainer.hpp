#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ktlab/dataio.hpp"
#include "ktlab/metrics.hpp"
#include "ktlab/model.hpp"

namespace ktlab {

// Summed binary cross-entropy over pooled transitions. Throws on an empty
// prediction set.
double masked_cross_entropy(const std::vector<PredictionRecord>& preds);

struct EpochRecord {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0; // summed over the epoch, auxiliary term included
    size_t train_predictions = 0;
    MetricsReport validation;
};

struct TrainOptions {
    int threads = 1;
    // Called after each epoch when set (progress logging).
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    Model model; // best-validation-AUC parameters
    std::vector<EpochRecord> history;
    int best_epoch = -1;
};

// Seeded training loop: per epoch, shuffle windows, accumulate gradients per
// batch, Adam step at the staircase-decayed rate, validation metrics, best
// checkpoint by validation AUC.
TrainResult train(Variant variant, const Hyperparameters& hp, const Dataset& train_ds,
                  const Dataset& val_ds, const TrainOptions& options = {});

// Pooled test metrics; pure function of (model, dataset).
MetricsReport evaluate(const Model& model, const Dataset& ds, int threads = 1);

// Pooled predictions, in window order (the evaluation primitive).
std::vector<PredictionRecord> collect_predictions(const Model& model, const Dataset& ds,
                                                  int threads = 1);

struct SeedRun {
    uint64_t seed = 0;
    MetricsReport test;
};

struct SeedAverage {
    std::vector<SeedRun> runs;
    MetricsReport mean; // auc defined only when defined on every run
};

// Repeats train+evaluate with seeds hp.seed, hp.seed+1, ... and averages the
// test metrics.
SeedAverage train_eval_seeds(Variant variant, const Hyperparameters& hp, const Dataset& train_ds,
                             const Dataset& val_ds, const Dataset& test_ds, int n_seeds,
                             const TrainOptions& options = {});

} // namespace ktlab
