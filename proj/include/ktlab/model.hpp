#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ktlab/dataio.hpp"
#include "ktlab/optim.hpp"
#include "ktlab/rng.hpp"
#include "ktlab/tape.hpp"
#include "ktlab/temporal.hpp"

namespace ktlab {

// Closed registry: the full model, the two baselines, and four ablations.
enum class Variant {
    DktStdrl,  // prior -> gated conv -> one-hot fusion -> BiLSTM
    Dkt,       // one-hot records -> forward LSTM
    Ckt,       // prior -> gated conv -> per-skill head
    DktTdrl,   // prior -> direct per-skill projection -> one-hot fusion -> BiLSTM
    DktSdrl1,  // full pipeline with a forward-only LSTM
    DktStdrrp, // prior reduced to the interaction embedding alone
    DktStdrrj, // fusion emits the spatial one-hot only (no record block)
};

inline constexpr std::array<Variant, 7> kAllVariants = {
    Variant::DktStdrl, Variant::Dkt,      Variant::Ckt,      Variant::DktTdrl,
    Variant::DktSdrl1, Variant::DktStdrrp, Variant::DktStdrrj,
};

std::string to_string(Variant v);
Variant parse_variant(const std::string& id); // throws ConfigError on unknown id

struct Hyperparameters {
    double learning_rate = 0.001;
    double decay_rate = 0.3;
    int decay_every_epochs = 8;
    int batch_size = 50;
    int epochs = 10;
    std::vector<int> conv_channels = {16, 50, 50};
    int conv_layers = 3;
    double conv_keep_prob = 0.2;
    int lstm_units = 30;
    double lstm_output_keep_prob = 0.3;
    int embedding_width = 50; // n
    int max_seq_len = 200;    // window length k
    int kernel_width = 4;     // conv kernel width
    uint64_t seed = 1;

    // Switches for ambiguous readings; defaults are the literal ones.
    bool decay_per_step = false;        // staircase over optimizer steps, not epochs
    bool complement_keep_probs = false; // read the keep probabilities as drop rates
    bool trainable_embedding = true;
    bool strict_causal_eval = false; // silence the backward direction at inference

    double effective_conv_keep() const {
        return complement_keep_probs ? 1.0 - conv_keep_prob : conv_keep_prob;
    }
    double effective_lstm_keep() const {
        return complement_keep_probs ? 1.0 - lstm_output_keep_prob : lstm_output_keep_prob;
    }

    void validate() const;
};

// A variant's composed forward graph plus its parameter set.
class Model {
public:
    Model(Variant variant, Hyperparameters hp, int skill_count);

    // Seeded initialization: uniform +/-0.05 for weights and kernels, zeros
    // for biases, drawn from the "init" substream in registry order.
    void init_params(uint64_t seed);

    Variant variant() const { return variant_; }
    const Hyperparameters& hp() const { return hp_; }
    int skill_count() const { return skill_count_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    bool uses_embedding() const { return variant_ != Variant::Dkt; }
    bool uses_full_prior() const {
        return uses_embedding() && variant_ != Variant::DktStdrrp;
    }
    bool uses_conv() const {
        return variant_ != Variant::Dkt && variant_ != Variant::DktTdrl;
    }
    bool uses_temporal() const { return variant_ != Variant::Ckt; }
    bool bidirectional() const {
        return uses_temporal() && variant_ != Variant::Dkt && variant_ != Variant::DktSdrl1;
    }
    // Width of the prior feature block feeding the conv stack / projection.
    size_t prior_width() const;
    // Width of the one-hot rows feeding the LSTM.
    size_t temporal_input_width() const;

    struct WindowForward {
        temporal::NextStepPrediction primary; // the model's output predictions
        temporal::NextStepPrediction aux;     // spatial-head training signal, when present
        VarId loss = kNoVar;                  // summed cross-entropy; kNoVar when no transitions
        // Sigmoid of the current-skill spatial score per valid step (the
        // binarization input), when the variant has a spatial head.
        std::vector<double> binarization;
        // Parameter leaves entered into the tape: (node id, params index).
        std::vector<std::pair<VarId, size_t>> leaves;
    };

    WindowForward forward(Tape& tape, const WindowRow& row, bool training, Rng& dropout_rng) const;

private:
    void build_params();

    Variant variant_;
    Hyperparameters hp_;
    int skill_count_;
    ParamSet params_;
};

} // namespace ktlab
