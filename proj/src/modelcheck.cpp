#include "ktlab/modelcheck.hpp"

#include <cmath>

#include "ktlab/errors.hpp"
#include "ktlab/tape.hpp"

namespace ktlab {

namespace {

Hyperparameters tiny_config() {
    Hyperparameters hp;
    hp.embedding_width = 4;
    hp.max_seq_len = 9;
    hp.lstm_units = 5;
    hp.conv_channels = {2, 3, 3};
    hp.conv_layers = 3;
    hp.kernel_width = 2;
    return hp;
}

constexpr int kTinySkillCount = 7;
constexpr double kProbeScale = 0.7;
// Guard bands for a well-posed probe point. The binarization threshold sits
// at score 0 and the clip bounds at 1e-7: no finite-difference displacement
// may cross either. Gradients must also clear the double-precision noise
// floor of the difference quotient (about |loss| * eps / 2h), or the
// relative-error denominator floor turns rounding noise into false alarms.
constexpr double kBinarizationGuard = 2.5e-4; // |sigma(score) - 0.5|
constexpr double kProbGuard = 1e-3;
constexpr double kGradFloor = 3e-7;

std::vector<WindowRow> probe_windows(uint64_t seed) {
    Rng rng(substream(seed, "probe-data"));
    const size_t k = 9;
    const std::vector<size_t> lengths = {9, 7};
    std::vector<WindowRow> rows;
    for (size_t len : lengths) {
        WindowRow row;
        row.window = k;
        row.length = len;
        row.skills.assign(k, 0);
        row.correct.assign(k, 0);
        for (size_t t = 0; t < len; ++t) {
            row.skills[t] = static_cast<int>(rng.below(kTinySkillCount));
            row.correct[t] = rng.bernoulli(0.5) ? 1 : 0;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Computes analytic gradients into params().grad and checks every guard.
bool probe_is_well_posed(Model& model, const std::vector<WindowRow>& windows) {
    model.params().zero_grads();
    for (const auto& row : windows) {
        Tape tape;
        Rng unused(0);
        const auto fwd = model.forward(tape, row, false, unused);
        if (fwd.loss == kNoVar || !std::isfinite(tape.val(fwd.loss)[0])) {
            return false;
        }
        for (double activation : fwd.binarization) {
            if (std::abs(activation - 0.5) <= kBinarizationGuard) {
                return false;
            }
        }
        for (const auto* pred : {&fwd.primary, &fwd.aux}) {
            if (pred->count() == 0) {
                continue;
            }
            const Tensor& pv = tape.val(pred->probs);
            for (size_t i = 0; i < pv.size(); ++i) {
                if (pv[i] < kProbGuard || pv[i] > 1.0 - kProbGuard) {
                    return false;
                }
            }
        }
        tape.backward(fwd.loss);
        for (const auto& [id, pidx] : fwd.leaves) {
            if (tape.grad_live(id)) {
                model.params().items()[pidx].grad.add_inplace(tape.grad(id));
            }
        }
    }
    for (const auto& p : model.params().items()) {
        for (size_t i = 0; i < p.grad.size(); ++i) {
            const double g = std::abs(p.grad[i]);
            if (g != 0.0 && g < kGradFloor) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

FullModelCheck full_model_grad_check(uint64_t seed, double h) {
    Model model(Variant::DktStdrl, tiny_config(), kTinySkillCount);
    const auto windows = probe_windows(seed);

    int attempt = 0;
    for (;; ++attempt) {
        if (attempt >= 50) {
            throw NumericError("gradcheck: no probe point cleared the guard bands");
        }
        Rng rng(substream(seed, "probe", static_cast<uint64_t>(attempt)));
        for (auto& p : model.params().items()) {
            for (size_t i = 0; i < p.value.size(); ++i) {
                p.value[i] = rng.uniform(-kProbeScale, kProbeScale);
            }
        }
        if (probe_is_well_posed(model, windows)) {
            break; // analytic gradients are now in params().grad
        }
    }

    auto loss_fn = [&]() {
        double total = 0.0;
        for (const auto& row : windows) {
            Tape tape;
            Rng unused(0);
            const auto fwd = model.forward(tape, row, false, unused);
            total += tape.val(fwd.loss)[0];
        }
        return total;
    };

    FullModelCheck out;
    out.report = grad_check(loss_fn, model.params(), h);
    out.attempts = attempt + 1;
    out.parameters = model.params().total_size();
    return out;
}

} // namespace ktlab
