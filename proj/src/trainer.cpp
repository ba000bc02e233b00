#include "ktlab/trainer.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "ktlab/errors.hpp"

namespace ktlab {

double masked_cross_entropy(const std::vector<PredictionRecord>& preds) {
    if (preds.empty()) {
        throw TrainingError("cross-entropy: empty prediction set");
    }
    double loss = 0.0;
    for (const auto& p : preds) {
        loss -= p.target == 1 ? std::log(p.prob) : std::log(1.0 - p.prob);
    }
    return loss;
}

namespace {

// Static contiguous partition; worker w owns one chunk and visits it in
// order, so merged results are independent of scheduling.
void parallel_for(size_t n, int threads, const std::function<void(size_t, int)>& fn) {
    const size_t workers =
        std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n));
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) {
            fn(i, 0);
        }
        return;
    }
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        const size_t begin = n * w / workers;
        const size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end, w] {
            try {
                for (size_t i = begin; i < end; ++i) {
                    fn(i, static_cast<int>(w));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

void append_window_predictions(const Tape& tape, const temporal::NextStepPrediction& pred,
                               std::vector<PredictionRecord>& out) {
    if (pred.count() == 0) {
        return;
    }
    const Tensor& pv = tape.val(pred.probs);
    for (size_t j = 0; j < pred.count(); ++j) {
        out.push_back(PredictionRecord{pv[j], pred.targets[j], pred.skills[j]});
    }
}

} // namespace

std::vector<PredictionRecord> collect_predictions(const Model& model, const Dataset& ds,
                                                  int threads) {
    const auto windows = flatten_windows(ds, static_cast<size_t>(model.hp().max_seq_len));
    std::vector<std::vector<PredictionRecord>> slots(windows.size());
    parallel_for(windows.size(), threads, [&](size_t i, int) {
        Tape tape;
        Rng unused(0); // evaluation mode draws nothing
        const auto fwd = model.forward(tape, windows[i], false, unused);
        append_window_predictions(tape, fwd.primary, slots[i]);
    });
    std::vector<PredictionRecord> pooled;
    for (auto& s : slots) {
        pooled.insert(pooled.end(), s.begin(), s.end());
    }
    return pooled;
}

MetricsReport evaluate(const Model& model, const Dataset& ds, int threads) {
    return compute_metrics(collect_predictions(model, ds, threads));
}

TrainResult train(Variant variant, const Hyperparameters& hp, const Dataset& train_ds,
                  const Dataset& val_ds, const TrainOptions& options) {
    hp.validate();
    if (train_ds.sequences.empty()) {
        throw DataError("train: training set is empty");
    }
    if (val_ds.sequences.empty()) {
        throw DataError("train: validation set is empty");
    }

    Model model(variant, hp, train_ds.skill_count());
    model.init_params(hp.seed);

    const auto k = static_cast<size_t>(hp.max_seq_len);
    const auto windows = flatten_windows(train_ds, k);
    const auto batch_size = static_cast<size_t>(hp.batch_size);
    const int threads = std::max(1, options.threads);

    AdamConfig adam;
    adam.learning_rate = hp.learning_rate;
    adam.decay_rate = hp.decay_rate;
    adam.decay_every_epochs = hp.decay_every_epochs;
    adam.decay_per_step = hp.decay_per_step;

    // Per-thread gradient buffers aligned with the parameter registry.
    std::vector<std::vector<Tensor>> buffers(static_cast<size_t>(threads));
    for (auto& buf : buffers) {
        buf.reserve(model.params().count());
        for (const auto& p : model.params().items()) {
            buf.emplace_back(p.value.shape());
        }
    }

    std::vector<size_t> order(windows.size());
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<EpochRecord> history;
    ParamSet best_params;
    double best_auc = -std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        adam.epoch = epoch;
        const double epoch_lr = adam.effective_learning_rate();
        Rng shuffle_rng(substream(hp.seed, "shuffle", static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        size_t epoch_preds = 0;
        const size_t n_batches = (windows.size() + batch_size - 1) / batch_size;
        for (size_t b = 0; b < n_batches; ++b) {
            const size_t begin = b * batch_size;
            const size_t end = std::min(windows.size(), begin + batch_size);

            model.params().zero_grads();
            for (auto& buf : buffers) {
                for (auto& t : buf) {
                    t.fill(0.0);
                }
            }
            std::vector<double> losses(end - begin, 0.0);
            std::vector<size_t> counts(end - begin, 0);

            parallel_for(end - begin, threads, [&](size_t i, int slot) {
                const size_t wi = order[begin + i];
                Tape tape;
                Rng dropout_rng(substream(hp.seed, "dropout", static_cast<uint64_t>(epoch), wi));
                const auto fwd = model.forward(tape, windows[wi], true, dropout_rng);
                if (fwd.loss == kNoVar) {
                    return;
                }
                tape.backward(fwd.loss);
                losses[i] = tape.val(fwd.loss)[0];
                counts[i] = fwd.primary.count() + fwd.aux.count();
                auto& buf = buffers[static_cast<size_t>(slot)];
                for (const auto& [id, pidx] : fwd.leaves) {
                    if (tape.grad_live(id)) {
                        buf[pidx].add_inplace(tape.grad(id));
                    }
                }
            });

            for (const auto& buf : buffers) {
                auto& items = model.params().items();
                for (size_t pidx = 0; pidx < items.size(); ++pidx) {
                    items[pidx].grad.add_inplace(buf[pidx]);
                }
            }

            double batch_loss = 0.0;
            for (double l : losses) {
                batch_loss += l;
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(b));
            }
            epoch_loss += batch_loss;
            for (size_t c : counts) {
                epoch_preds += c;
            }
            adam_step(model.params(), adam);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = epoch_lr;
        rec.train_loss = epoch_loss;
        rec.train_predictions = epoch_preds;
        rec.validation = evaluate(model, val_ds, threads);
        if (rec.validation.auc && *rec.validation.auc > best_auc) {
            best_auc = *rec.validation.auc;
            best_params = model.params();
            best_epoch = epoch;
        }
        history.push_back(rec);
        if (options.on_epoch) {
            options.on_epoch(history.back());
        }
    }

    if (best_epoch >= 0) {
        model.params() = best_params;
    }
    return TrainResult{std::move(model), std::move(history), best_epoch};
}

SeedAverage train_eval_seeds(Variant variant, const Hyperparameters& hp, const Dataset& train_ds,
                             const Dataset& val_ds, const Dataset& test_ds, int n_seeds,
                             const TrainOptions& options) {
    if (n_seeds < 1) {
        throw ConfigError("train_eval_seeds: need at least one seed");
    }
    SeedAverage out;
    double rmse = 0.0, acc = 0.0, r2 = 0.0, auc = 0.0;
    bool auc_defined = true;
    for (int i = 0; i < n_seeds; ++i) {
        Hyperparameters run_hp = hp;
        run_hp.seed = hp.seed + static_cast<uint64_t>(i);
        const TrainResult result = train(variant, run_hp, train_ds, val_ds, options);
        const MetricsReport test = evaluate(result.model, test_ds, options.threads);
        rmse += test.rmse;
        acc += test.acc;
        r2 += test.r2;
        if (test.auc) {
            auc += *test.auc;
        } else {
            auc_defined = false;
        }
        out.runs.push_back(SeedRun{run_hp.seed, test});
    }
    const auto n = static_cast<double>(n_seeds);
    out.mean.rmse = rmse / n;
    out.mean.acc = acc / n;
    out.mean.r2 = r2 / n;
    out.mean.auc = auc_defined ? std::optional<double>(auc / n) : std::nullopt;
    out.mean.predictions = out.runs.front().test.predictions;
    return out;
}

} // namespace ktlab
