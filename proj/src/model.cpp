#include "ktlab/model.hpp"

#include <cmath>

#include "ktlab/errors.hpp"
#include "ktlab/fusion.hpp"
#include "ktlab/ops.hpp"
#include "ktlab/prior.hpp"
#include "ktlab/spatial.hpp"

namespace ktlab {

std::string to_string(Variant v) {
    switch (v) {
    case Variant::DktStdrl: return "dkt-stdrl";
    case Variant::Dkt: return "dkt";
    case Variant::Ckt: return "ckt";
    case Variant::DktTdrl: return "dkt-tdrl";
    case Variant::DktSdrl1: return "dkt-sdrl1";
    case Variant::DktStdrrp: return "dkt-stdrrp";
    case Variant::DktStdrrj: return "dkt-stdrrj";
    }
    throw ConfigError("unreachable variant");
}

Variant parse_variant(const std::string& id) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == id) {
            return v;
        }
    }
    throw ConfigError("unknown variant '" + id + "'");
}

void Hyperparameters::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("hp: learning_rate must be positive");
    }
    if (!(decay_rate > 0.0) || decay_rate > 1.0) {
        throw ConfigError("hp: decay_rate must be in (0, 1]");
    }
    if (decay_every_epochs < 1 || batch_size < 1 || epochs < 1) {
        throw ConfigError("hp: decay_every_epochs, batch_size, and epochs must be positive");
    }
    if (conv_layers < 1 || static_cast<size_t>(conv_layers) != conv_channels.size()) {
        throw ConfigError("hp: conv_channels must list one output width per conv layer");
    }
    for (int c : conv_channels) {
        if (c < 1) {
            throw ConfigError("hp: conv channel widths must be positive");
        }
    }
    if (!(conv_keep_prob > 0.0) || conv_keep_prob > 1.0 || !(lstm_output_keep_prob > 0.0) ||
        lstm_output_keep_prob > 1.0) {
        throw ConfigError("hp: keep probabilities must be in (0, 1]");
    }
    if (lstm_units < 1 || embedding_width < 1 || kernel_width < 1) {
        throw ConfigError("hp: lstm_units, embedding_width, and kernel_width must be positive");
    }
    if (max_seq_len < 2) {
        throw ConfigError("hp: max_seq_len must be at least 2");
    }
}

size_t Model::prior_width() const {
    const auto n = static_cast<size_t>(hp_.embedding_width);
    const auto m = static_cast<size_t>(skill_count_);
    return uses_full_prior() ? 4 * n + m : 2 * n;
}

size_t Model::temporal_input_width() const {
    const auto m = static_cast<size_t>(skill_count_);
    if (variant_ == Variant::Dkt || variant_ == Variant::DktStdrrj) {
        return 2 * m;
    }
    return 4 * m;
}

Model::Model(Variant variant, Hyperparameters hp, int skill_count)
    : variant_(variant), hp_(std::move(hp)), skill_count_(skill_count) {
    hp_.validate();
    if (skill_count_ < 1) {
        throw ConfigError("model: skill count must be positive");
    }
    if (uses_embedding() && hp_.embedding_width >= skill_count_) {
        throw ConfigError("model: embedding width n must be smaller than the skill count M (n=" +
                          std::to_string(hp_.embedding_width) +
                          ", M=" + std::to_string(skill_count_) + ")");
    }
    build_params();
}

void Model::build_params() {
    const auto m = static_cast<size_t>(skill_count_);
    const auto n = static_cast<size_t>(hp_.embedding_width);
    const auto g = static_cast<size_t>(hp_.lstm_units);
    const auto w = static_cast<size_t>(hp_.kernel_width);

    if (uses_embedding()) {
        params_.add("prior.embedding", {m, n});
        const size_t p = prior_width();
        params_.add("prior.fuse.value_weight", {p, p});
        params_.add("prior.fuse.value_bias", {p});
        params_.add("prior.fuse.gate_weight", {p, p});
        params_.add("prior.fuse.gate_bias", {p});
    }

    if (uses_conv()) {
        size_t cin = prior_width();
        for (int layer = 0; layer < hp_.conv_layers; ++layer) {
            const auto cout = static_cast<size_t>(hp_.conv_channels[static_cast<size_t>(layer)]);
            const std::string base = "spatial.conv" + std::to_string(layer + 1) + ".";
            params_.add(base + "value_kernel", {w, cin, cout});
            params_.add(base + "value_bias", {cout});
            params_.add(base + "gate_kernel", {w, cin, cout});
            params_.add(base + "gate_bias", {cout});
            cin = cout;
        }
        params_.add("score_proj.weight", {cin, m});
        params_.add("score_proj.bias", {m});
    } else if (variant_ == Variant::DktTdrl) {
        params_.add("score_proj.weight", {prior_width(), m});
        params_.add("score_proj.bias", {m});
    }

    if (uses_temporal()) {
        const size_t d = temporal_input_width();
        params_.add("temporal.fwd.input_weight", {d, 4 * g});
        params_.add("temporal.fwd.recurrent_weight", {g, 4 * g});
        params_.add("temporal.fwd.bias", {4 * g});
        if (bidirectional()) {
            params_.add("temporal.bwd.input_weight", {d, 4 * g});
            params_.add("temporal.bwd.recurrent_weight", {g, 4 * g});
            params_.add("temporal.bwd.bias", {4 * g});
        }
        const size_t h = bidirectional() ? 2 * g : g;
        params_.add("readout.weight", {h, m});
        params_.add("readout.bias", {m});
    }
}

void Model::init_params(uint64_t seed) {
    Rng rng(substream(seed, "init"));
    for (auto& p : params_.items()) {
        p.moment1.fill(0.0);
        p.moment2.fill(0.0);
        p.grad.fill(0.0);
        const bool is_bias = p.name.size() >= 4 && p.name.compare(p.name.size() - 4, 4, "bias") == 0;
        if (is_bias) {
            p.value.fill(0.0);
            continue;
        }
        for (size_t i = 0; i < p.value.size(); ++i) {
            p.value[i] = rng.uniform(-0.05, 0.05);
        }
    }
}

Model::WindowForward Model::forward(Tape& tape, const WindowRow& row, bool training,
                                    Rng& dropout_rng) const {
    WindowForward out;
    const size_t length = row.length;
    const int m = skill_count_;

    auto leaf = [&](const char* name) {
        for (size_t i = 0; i < params_.count(); ++i) {
            if (params_.items()[i].name == name) {
                const VarId id = tape.leaf(params_.items()[i].value);
                out.leaves.push_back({id, i});
                return id;
            }
        }
        throw ConfigError(std::string("model: missing parameter '") + name + "'");
    };

    // Spatial-side per-skill scores (every variant except dkt).
    VarId scores = kNoVar;
    if (uses_embedding()) {
        VarId table;
        if (hp_.trainable_embedding) {
            table = leaf("prior.embedding");
        } else {
            table = tape.leaf(params_.find("prior.embedding")->value); // frozen: not harvested
        }
        const VarId flis = prior::embed_interactions(tape, table, row);
        std::vector<VarId> parts;
        if (uses_full_prior()) {
            const VarId svec = prior::skill_vectors(tape, table, row);
            const VarId hrp = prior::historical_relevant_performance(tape, flis, svec, length);
            const VarId cpc = tape.constant(prior::concept_percent_correct(row, m));
            parts = {flis, hrp, cpc};
        } else {
            parts = {flis};
        }
        const auto fused =
            prior::fuse_prior(tape, parts, leaf("prior.fuse.value_weight"), leaf("prior.fuse.value_bias"),
                              leaf("prior.fuse.gate_weight"), leaf("prior.fuse.gate_bias"), length);
        VarId features = fused.fused;
        if (uses_conv()) {
            std::vector<spatial::ConvLayerVars> layers;
            layers.reserve(static_cast<size_t>(hp_.conv_layers));
            for (int layer = 0; layer < hp_.conv_layers; ++layer) {
                const std::string base = "spatial.conv" + std::to_string(layer + 1) + ".";
                layers.push_back(spatial::ConvLayerVars{
                    leaf((base + "value_kernel").c_str()), leaf((base + "value_bias").c_str()),
                    leaf((base + "gate_kernel").c_str()), leaf((base + "gate_bias").c_str())});
            }
            features = spatial::extract_spatial(tape, features, layers, hp_.effective_conv_keep(),
                                                training, dropout_rng, length);
        }
        scores = spatial::project_per_skill(tape, features, leaf("score_proj.weight"),
                                            leaf("score_proj.bias"), length);
    }

    if (variant_ == Variant::Ckt) {
        out.primary = temporal::predict_next(tape, scores, row);
        if (out.primary.count() > 0) {
            out.loss = ops::bce_sum(tape, out.primary.probs, out.primary.targets);
        }
        return out;
    }

    // Joint one-hot rows feeding the temporal path. The hard threshold makes
    // the spatial block data from here on: no gradient crosses it.
    std::vector<std::array<int, 2>> hot(row.window, {-1, -1});
    if (variant_ == Variant::Dkt) {
        const auto rec = fusion::record_hot_indices(row.skills, row.correct, m, length);
        for (size_t t = 0; t < length; ++t) {
            hot[t] = {rec[t], -1};
        }
    } else {
        std::vector<double> score_at_skill(length);
        const Tensor& sv = tape.val(scores);
        for (size_t t = 0; t < length; ++t) {
            score_at_skill[t] = sv.at(t, static_cast<size_t>(row.skills[t]));
        }
        const auto binarized = fusion::binarize_spatial(score_at_skill);
        out.binarization = binarized.activations;
        const auto sp = fusion::spatial_hot_indices(binarized.bits, row.skills, m, length);
        if (variant_ == Variant::DktStdrrj) {
            for (size_t t = 0; t < length; ++t) {
                hot[t] = {sp[t], -1};
            }
        } else {
            const auto rec = fusion::record_hot_indices(row.skills, row.correct, m, length);
            for (size_t t = 0; t < length; ++t) {
                hot[t] = {sp[t], 2 * m + rec[t]};
            }
        }
    }

    temporal::BiLstmVars lstm;
    lstm.bidirectional = bidirectional();
    lstm.suppress_backward = lstm.bidirectional && !training && hp_.strict_causal_eval;
    lstm.forward = ops::LstmVars{leaf("temporal.fwd.input_weight"),
                                 leaf("temporal.fwd.recurrent_weight"), leaf("temporal.fwd.bias")};
    if (lstm.bidirectional) {
        lstm.backward = ops::LstmVars{leaf("temporal.bwd.input_weight"),
                                      leaf("temporal.bwd.recurrent_weight"),
                                      leaf("temporal.bwd.bias")};
    }
    const VarId hidden = temporal::bilstm_encode_onehot(tape, hot, row.window, lstm, length,
                                                        hp_.effective_lstm_keep(), training,
                                                        dropout_rng);
    const VarId state =
        temporal::knowledge_state(tape, hidden, leaf("readout.weight"), leaf("readout.bias"), length);

    out.primary = temporal::predict_next(tape, state, row);
    VarId loss = kNoVar;
    if (out.primary.count() > 0) {
        loss = ops::bce_sum(tape, out.primary.probs, out.primary.targets);
    }
    if (scores != kNoVar) {
        // The threshold blocks gradients, so the spatial stack trains on its
        // own next-step cross-entropy, summed with the temporal loss.
        out.aux = temporal::predict_next(tape, scores, row);
        if (out.aux.count() > 0) {
            const VarId aux_loss = ops::bce_sum(tape, out.aux.probs, out.aux.targets);
            loss = loss == kNoVar ? aux_loss : ops::add_scalars(tape, loss, aux_loss);
        }
    }
    out.loss = loss;
    return out;
}

} // namespace ktlab
