#include "ktlab/prior.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "ktlab/errors.hpp"
#include "ktlab/ops.hpp"

namespace ktlab::prior {

VarId embed_interactions(Tape& t, VarId table, const WindowRow& row) {
    const Tensor& tv = t.val(table);
    if (tv.rank() != 2) {
        throw NumericError("embed_interactions: table must be 2-D");
    }
    const size_t m = tv.dim(0), n = tv.dim(1), k = row.window;
    Tensor out({k, 2 * n});
    for (size_t tt = 0; tt < row.length; ++tt) {
        const int skill = row.skills[tt];
        if (skill < 0 || static_cast<size_t>(skill) >= m) {
            throw DataError("embed_interactions: skill index out of range");
        }
        const double* src = tv.data() + static_cast<size_t>(skill) * n;
        // correct answers fill the left half, incorrect the right half
        double* dst = out.data() + tt * 2 * n + (row.correct[tt] == 1 ? 0 : n);
        for (size_t j = 0; j < n; ++j) {
            dst[j] = src[j];
        }
    }
    return t.op(std::move(out), [table, skills = row.skills, correct = row.correct,
                                 length = row.length, n](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.grad(table);
        for (size_t tt = 0; tt < length; ++tt) {
            const double* src = g.data() + tt * 2 * n + (correct[tt] == 1 ? 0 : n);
            double* dst = gt.data() + static_cast<size_t>(skills[tt]) * n;
            for (size_t j = 0; j < n; ++j) {
                dst[j] += src[j];
            }
        }
    });
}

VarId skill_vectors(Tape& t, VarId table, const WindowRow& row) {
    return ops::gather_rows(t, table, row.skills, row.window, row.length);
}

VarId historical_relevant_performance(Tape& t, VarId embedded, VarId skill_vecs, size_t length) {
    const Tensor& ev = t.val(embedded);
    const Tensor& sv = t.val(skill_vecs);
    if (ev.rank() != 2 || sv.rank() != 2 || ev.dim(0) != sv.dim(0)) {
        throw NumericError("hrp: embedded/skill_vecs row mismatch");
    }
    const size_t k = ev.dim(0), two_n = ev.dim(1), n = sv.dim(1);
    if (length > k) {
        throw NumericError("hrp: length exceeds rows");
    }

    // weights(t, j) for j < t; rows 0..length-1, lower-triangular, zero
    // elsewhere. Kept for the backward pass.
    auto weights = std::make_shared<Tensor>(std::vector<size_t>{length, length});
    Tensor out({k, two_n});
    std::vector<double> rel;
    for (size_t tt = 1; tt < length; ++tt) {
        rel.assign(tt, 0.0);
        const double* st = sv.data() + tt * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < tt; ++j) {
            const double* sj = sv.data() + j * n;
            double dot = 0.0;
            for (size_t d = 0; d < n; ++d) {
                dot += sj[d] * st[d];
            }
            rel[j] = dot;
            mx = std::max(mx, dot);
        }
        double denom = 0.0;
        for (size_t j = 0; j < tt; ++j) {
            rel[j] = std::exp(rel[j] - mx);
            denom += rel[j];
        }
        double* wrow = weights->data() + tt * length;
        double* orow = out.data() + tt * two_n;
        for (size_t j = 0; j < tt; ++j) {
            const double w = rel[j] / denom;
            wrow[j] = w;
            const double* ej = ev.data() + j * two_n;
            for (size_t c = 0; c < two_n; ++c) {
                orow[c] += w * ej[c];
            }
        }
    }

    return t.op(std::move(out), [embedded, skill_vecs, weights, length, two_n, n](Tape& tp,
                                                                                  VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& ev2 = tp.val(embedded);
        const Tensor& sv2 = tp.val(skill_vecs);
        Tensor& ge = tp.grad(embedded);
        Tensor& gs = tp.grad(skill_vecs);
        std::vector<double> dw, drel;
        for (size_t tt = 1; tt < length; ++tt) {
            const double* grow = g.data() + tt * two_n;
            const double* wrow = weights->data() + tt * length;
            dw.assign(tt, 0.0);
            // d(out_t)/d(weight_j) = e_j ; d(out_t)/d(e_j) = w_j
            for (size_t j = 0; j < tt; ++j) {
                const double* ej = ev2.data() + j * two_n;
                double* gej = ge.data() + j * two_n;
                const double w = wrow[j];
                double acc = 0.0;
                for (size_t c = 0; c < two_n; ++c) {
                    acc += grow[c] * ej[c];
                    gej[c] += w * grow[c];
                }
                dw[j] = acc;
            }
            // softmax backward over the strict-past support
            double dot = 0.0;
            for (size_t j = 0; j < tt; ++j) {
                dot += wrow[j] * dw[j];
            }
            drel.assign(tt, 0.0);
            for (size_t j = 0; j < tt; ++j) {
                drel[j] = wrow[j] * (dw[j] - dot);
            }
            // relation(t, j) = s_j . s_t
            const double* st = sv2.data() + tt * n;
            double* gst = gs.data() + tt * n;
            for (size_t j = 0; j < tt; ++j) {
                const double dr = drel[j];
                if (dr == 0.0) {
                    continue;
                }
                const double* sj = sv2.data() + j * n;
                double* gsj = gs.data() + j * n;
                for (size_t d = 0; d < n; ++d) {
                    gsj[d] += dr * st[d];
                    gst[d] += dr * sj[d];
                }
            }
        }
    });
}

Tensor concept_percent_correct(const WindowRow& row, int skill_count) {
    const size_t k = row.window, m = static_cast<size_t>(skill_count);
    Tensor out({k, m});
    std::vector<int> attempts(m, 0), corrects(m, 0);
    for (size_t tt = 0; tt < row.length; ++tt) {
        double* orow = out.data() + tt * m;
        for (size_t s = 0; s < m; ++s) {
            if (attempts[s] > 0) {
                orow[s] = static_cast<double>(corrects[s]) / static_cast<double>(attempts[s]);
            }
        }
        const auto skill = static_cast<size_t>(row.skills[tt]);
        if (skill >= m) {
            throw DataError("concept_percent_correct: skill index out of range");
        }
        attempts[skill] += 1;
        corrects[skill] += row.correct[tt];
    }
    return out;
}

PriorFusion fuse_prior(Tape& t, const std::vector<VarId>& parts, VarId w_value, VarId b_value,
                       VarId w_gate, VarId b_gate, size_t length) {
    const VarId joint = parts.size() == 1 ? parts.front() : ops::concat_cols(t, parts, length);
    const VarId value = ops::affine(t, joint, w_value, b_value, length);
    const VarId gate = ops::affine(t, joint, w_gate, b_gate, length);
    return PriorFusion{joint, ops::glu(t, value, gate)};
}

} // namespace ktlab::prior
