#include "ktlab/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "ktlab/errors.hpp"

namespace ktlab::ops {

namespace {

double sigmoid_scalar(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

void require(bool cond, const char* msg) {
    if (!cond) {
        throw NumericError(msg);
    }
}

} // namespace

VarId affine(Tape& t, VarId x, VarId w, VarId b, size_t valid_rows) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    const Tensor& bv = t.val(b);
    require(xv.rank() == 2 && wv.rank() == 2 && bv.rank() == 1, "affine: rank mismatch");
    const size_t a_dim = xv.dim(1), b_dim = wv.dim(1);
    require(wv.dim(0) == a_dim && bv.dim(0) == b_dim, "affine: dimension mismatch");
    require(valid_rows <= xv.dim(0), "affine: valid_rows exceeds rows");

    Tensor out({xv.dim(0), b_dim});
    for (size_t i = 0; i < valid_rows; ++i) {
        double* orow = out.data() + i * b_dim;
        for (size_t j = 0; j < b_dim; ++j) {
            orow[j] = bv[j];
        }
        const double* xrow = xv.data() + i * a_dim;
        for (size_t aa = 0; aa < a_dim; ++aa) {
            const double xa = xrow[aa];
            if (xa == 0.0) {
                continue;
            }
            const double* wrow = wv.data() + aa * b_dim;
            for (size_t j = 0; j < b_dim; ++j) {
                orow[j] += xa * wrow[j];
            }
        }
    }

    return t.op(std::move(out), [x, w, b, valid_rows, a_dim, b_dim](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.val(x);
        const Tensor& wv2 = tp.val(w);
        Tensor& gx = tp.grad(x);
        Tensor& gw = tp.grad(w);
        Tensor& gb = tp.grad(b);
        for (size_t i = 0; i < valid_rows; ++i) {
            const double* grow = g.data() + i * b_dim;
            const double* xrow = xv2.data() + i * a_dim;
            double* gxrow = gx.data() + i * a_dim;
            for (size_t j = 0; j < b_dim; ++j) {
                gb[j] += grow[j];
            }
            for (size_t aa = 0; aa < a_dim; ++aa) {
                const double* wrow = wv2.data() + aa * b_dim;
                double* gwrow = gw.data() + aa * b_dim;
                double acc = 0.0;
                const double xa = xrow[aa];
                for (size_t j = 0; j < b_dim; ++j) {
                    acc += grow[j] * wrow[j];
                    gwrow[j] += xa * grow[j];
                }
                gxrow[aa] += acc;
            }
        }
    });
}

VarId concat_cols(Tape& t, const std::vector<VarId>& parts, size_t valid_rows) {
    require(!parts.empty(), "concat_cols: no inputs");
    const size_t k = t.val(parts.front()).dim(0);
    size_t total = 0;
    std::vector<size_t> widths;
    widths.reserve(parts.size());
    for (VarId p : parts) {
        const Tensor& pv = t.val(p);
        require(pv.rank() == 2 && pv.dim(0) == k, "concat_cols: row mismatch");
        widths.push_back(pv.dim(1));
        total += pv.dim(1);
    }

    Tensor out({k, total});
    size_t off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const Tensor& pv = t.val(parts[pi]);
        const size_t w = widths[pi];
        for (size_t i = 0; i < valid_rows; ++i) {
            const double* src = pv.data() + i * w;
            double* dst = out.data() + i * total + off;
            for (size_t j = 0; j < w; ++j) {
                dst[j] = src[j];
            }
        }
        off += w;
    }

    return t.op(std::move(out), [parts, widths, valid_rows, total](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        size_t off2 = 0;
        for (size_t pi = 0; pi < parts.size(); ++pi) {
            Tensor& gp = tp.grad(parts[pi]);
            const size_t w = widths[pi];
            for (size_t i = 0; i < valid_rows; ++i) {
                const double* src = g.data() + i * total + off2;
                double* dst = gp.data() + i * w;
                for (size_t j = 0; j < w; ++j) {
                    dst[j] += src[j];
                }
            }
            off2 += w;
        }
    });
}

VarId glu(Tape& t, VarId value, VarId gate) {
    const Tensor& vv = t.val(value);
    const Tensor& gv = t.val(gate);
    require(vv.same_shape(gv), "glu: shape mismatch");

    auto sig = std::make_shared<Tensor>(vv.shape());
    Tensor out(vv.shape());
    for (size_t i = 0; i < vv.size(); ++i) {
        const double s = sigmoid_scalar(gv[i]);
        (*sig)[i] = s;
        out[i] = vv[i] * s;
    }

    return t.op(std::move(out), [value, gate, sig](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vv2 = tp.val(value);
        Tensor& gval = tp.grad(value);
        Tensor& ggate = tp.grad(gate);
        for (size_t i = 0; i < g.size(); ++i) {
            const double s = (*sig)[i];
            gval[i] += g[i] * s;
            ggate[i] += g[i] * vv2[i] * s * (1.0 - s);
        }
    });
}

VarId sigmoid(Tape& t, VarId x) {
    const Tensor& xv = t.val(x);
    Tensor out(xv.shape());
    for (size_t i = 0; i < xv.size(); ++i) {
        out[i] = sigmoid_scalar(xv[i]);
    }
    return t.op(std::move(out), [x](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& ov = tp.val(self);
        Tensor& gx = tp.grad(x);
        for (size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * ov[i] * (1.0 - ov[i]);
        }
    });
}

VarId conv1d_causal(Tape& t, VarId input, VarId kernels, VarId bias, size_t valid_rows) {
    const Tensor& xv = t.val(input);
    const Tensor& kv = t.val(kernels);
    const Tensor& bv = t.val(bias);
    require(xv.rank() == 2 && kv.rank() == 3 && bv.rank() == 1, "conv1d_causal: rank mismatch");
    const size_t w = kv.dim(0), cin = kv.dim(1), cout = kv.dim(2);
    require(w >= 1, "conv1d_causal: kernel width must be >= 1");
    require(xv.dim(1) == cin && bv.dim(0) == cout, "conv1d_causal: dimension mismatch");
    require(valid_rows <= xv.dim(0), "conv1d_causal: valid_rows exceeds rows");

    Tensor out({xv.dim(0), cout});
    for (size_t tt = 0; tt < valid_rows; ++tt) {
        double* orow = out.data() + tt * cout;
        for (size_t co = 0; co < cout; ++co) {
            orow[co] = bv[co];
        }
        for (size_t dw = 0; dw < w; ++dw) {
            // left zero padding: source index t - w + 1 + dw
            const ptrdiff_t src = static_cast<ptrdiff_t>(tt + dw) - static_cast<ptrdiff_t>(w) + 1;
            if (src < 0) {
                continue;
            }
            const double* xrow = xv.data() + static_cast<size_t>(src) * cin;
            const double* kplane = kv.data() + dw * cin * cout;
            for (size_t ci = 0; ci < cin; ++ci) {
                const double xval = xrow[ci];
                if (xval == 0.0) {
                    continue;
                }
                const double* krow = kplane + ci * cout;
                for (size_t co = 0; co < cout; ++co) {
                    orow[co] += xval * krow[co];
                }
            }
        }
    }

    return t.op(std::move(out), [input, kernels, bias, valid_rows, w, cin, cout](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.val(input);
        const Tensor& kv2 = tp.val(kernels);
        Tensor& gx = tp.grad(input);
        Tensor& gk = tp.grad(kernels);
        Tensor& gb = tp.grad(bias);
        for (size_t tt = 0; tt < valid_rows; ++tt) {
            const double* grow = g.data() + tt * cout;
            for (size_t co = 0; co < cout; ++co) {
                gb[co] += grow[co];
            }
            for (size_t dw = 0; dw < w; ++dw) {
                const ptrdiff_t src = static_cast<ptrdiff_t>(tt + dw) - static_cast<ptrdiff_t>(w) + 1;
                if (src < 0) {
                    continue;
                }
                const double* xrow = xv2.data() + static_cast<size_t>(src) * cin;
                double* gxrow = gx.data() + static_cast<size_t>(src) * cin;
                const double* kplane = kv2.data() + dw * cin * cout;
                double* gkplane = gk.data() + dw * cin * cout;
                for (size_t ci = 0; ci < cin; ++ci) {
                    const double* krow = kplane + ci * cout;
                    double* gkrow = gkplane + ci * cout;
                    const double xval = xrow[ci];
                    double acc = 0.0;
                    for (size_t co = 0; co < cout; ++co) {
                        acc += grow[co] * krow[co];
                        gkrow[co] += xval * grow[co];
                    }
                    gxrow[ci] += acc;
                }
            }
        }
    });
}

Tensor masked_softmax(const Tensor& logits, const std::vector<char>& mask) {
    if (logits.rank() != 1 || logits.dim(0) != mask.size()) {
        throw NumericError("masked_softmax: logits/mask size mismatch");
    }
    const size_t n = mask.size();
    Tensor out({n});
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            mx = std::max(mx, logits[i]);
            any = true;
        }
    }
    if (!any) {
        return out; // all masked -> all zeros
    }
    double denom = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            out[i] = std::exp(logits[i] - mx);
            denom += out[i];
        }
    }
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            out[i] /= denom;
        }
    }
    return out;
}

VarId masked_softmax(Tape& t, VarId logits, std::vector<char> mask) {
    Tensor out = masked_softmax(t.val(logits), mask);
    return t.op(std::move(out), [logits, mask = std::move(mask)](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& ov = tp.val(self);
        Tensor& gl = tp.grad(logits);
        double dot = 0.0;
        for (size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) {
                dot += ov[i] * g[i];
            }
        }
        for (size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) {
                gl[i] += ov[i] * (g[i] - dot);
            }
        }
    });
}

VarId dropout(Tape& t, VarId x, double keep_prob, bool training, Rng& rng, size_t valid_rows) {
    if (!(keep_prob > 0.0) || keep_prob > 1.0) {
        throw ConfigError("dropout: keep probability must be in (0, 1]");
    }
    if (!training || keep_prob == 1.0) {
        return x; // evaluation mode is a pure identity
    }
    const Tensor& xv = t.val(x);
    const size_t cols = xv.rank() == 2 ? xv.dim(1) : 1;
    const size_t live = valid_rows * cols;
    require(live <= xv.size(), "dropout: valid_rows exceeds rows");

    auto scale = std::make_shared<Tensor>(xv.shape());
    const double inv = 1.0 / keep_prob;
    Tensor out(xv.shape());
    for (size_t i = 0; i < live; ++i) {
        const double s = rng.bernoulli(keep_prob) ? inv : 0.0;
        (*scale)[i] = s;
        out[i] = xv[i] * s;
    }

    return t.op(std::move(out), [x, scale, live](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (size_t i = 0; i < live; ++i) {
            gx[i] += g[i] * (*scale)[i];
        }
    });
}

namespace {

// Per-run cache of gate activations, indexed by processing order.
struct LstmCache {
    size_t length = 0, hidden = 0;
    std::vector<double> gi, gf, go, gc; // sigmoid/tanh outputs, length x hidden
    std::vector<double> c, tanh_c, h;   // cell, tanh(cell), hidden, length x hidden
};

struct LstmShapes {
    size_t in_dim, hidden, gates;
};

LstmShapes lstm_shapes(const Tape& t, const LstmVars& p) {
    const Tensor& wx = t.val(p.wx);
    const Tensor& wh = t.val(p.wh);
    const Tensor& b = t.val(p.b);
    if (wx.rank() != 2 || wh.rank() != 2 || b.rank() != 1) {
        throw NumericError("lstm: parameter rank mismatch");
    }
    const size_t gates = wx.dim(1);
    if (gates % 4 != 0 || wh.dim(1) != gates || b.dim(0) != gates || wh.dim(0) != gates / 4) {
        throw NumericError("lstm: parameter dimension mismatch");
    }
    return LstmShapes{wx.dim(0), gates / 4, gates};
}

// Shared forward/backward over an abstract input accessor so the dense and
// one-hot paths stay one implementation.
template <class ReadInput, class AccumInput>
VarId lstm_run(Tape& t, size_t k, const LstmVars& p, LstmDirection dir, size_t length,
               ReadInput read_input, AccumInput accum_input, const LstmShapes& sh) {
    const size_t g = sh.hidden, gates = sh.gates;
    const Tensor& wx = t.val(p.wx);
    const Tensor& wh = t.val(p.wh);
    const Tensor& bv = t.val(p.b);

    auto cache = std::make_shared<LstmCache>();
    cache->length = length;
    cache->hidden = g;
    cache->gi.assign(length * g, 0.0);
    cache->gf.assign(length * g, 0.0);
    cache->go.assign(length * g, 0.0);
    cache->gc.assign(length * g, 0.0);
    cache->c.assign(length * g, 0.0);
    cache->tanh_c.assign(length * g, 0.0);
    cache->h.assign(length * g, 0.0);

    Tensor out({k, g});
    std::vector<double> z(gates);
    for (size_t j = 0; j < length; ++j) {
        const size_t idx = dir == LstmDirection::Forward ? j : length - 1 - j;
        for (size_t m = 0; m < gates; ++m) {
            z[m] = bv[m];
        }
        read_input(idx, wx, z);
        if (j > 0) {
            const double* hprev = cache->h.data() + (j - 1) * g;
            for (size_t hh = 0; hh < g; ++hh) {
                const double hv = hprev[hh];
                if (hv == 0.0) {
                    continue;
                }
                const double* wrow = wh.data() + hh * gates;
                for (size_t m = 0; m < gates; ++m) {
                    z[m] += hv * wrow[m];
                }
            }
        }
        double* gi = cache->gi.data() + j * g;
        double* gf = cache->gf.data() + j * g;
        double* go = cache->go.data() + j * g;
        double* gc = cache->gc.data() + j * g;
        double* c = cache->c.data() + j * g;
        double* tc = cache->tanh_c.data() + j * g;
        double* h = cache->h.data() + j * g;
        const double* cprev = j > 0 ? cache->c.data() + (j - 1) * g : nullptr;
        for (size_t hh = 0; hh < g; ++hh) {
            gi[hh] = sigmoid_scalar(z[hh]);
            gf[hh] = sigmoid_scalar(z[g + hh]);
            go[hh] = sigmoid_scalar(z[2 * g + hh]);
            gc[hh] = std::tanh(z[3 * g + hh]);
            c[hh] = gi[hh] * gc[hh] + (cprev ? gf[hh] * cprev[hh] : 0.0);
            tc[hh] = std::tanh(c[hh]);
            h[hh] = go[hh] * tc[hh];
        }
        double* orow = out.data() + idx * g;
        for (size_t hh = 0; hh < g; ++hh) {
            orow[hh] = h[hh];
        }
    }

    return t.op(std::move(out), [p, dir, length, cache, accum_input, g, gates](Tape& tp, VarId self) {
        const Tensor& gout = tp.grad(self);
        const Tensor& wh2 = tp.val(p.wh);
        Tensor& gwx = tp.grad(p.wx);
        Tensor& gwh = tp.grad(p.wh);
        Tensor& gb = tp.grad(p.b);

        std::vector<double> dh_carry(g, 0.0), dc_carry(g, 0.0), dz(gates);
        for (size_t j = length; j-- > 0;) {
            const size_t idx = dir == LstmDirection::Forward ? j : length - 1 - j;
            const double* gi = cache->gi.data() + j * g;
            const double* gf = cache->gf.data() + j * g;
            const double* go = cache->go.data() + j * g;
            const double* gc = cache->gc.data() + j * g;
            const double* tc = cache->tanh_c.data() + j * g;
            const double* cprev = j > 0 ? cache->c.data() + (j - 1) * g : nullptr;
            const double* hprev = j > 0 ? cache->h.data() + (j - 1) * g : nullptr;
            const double* grow = gout.data() + idx * g;

            for (size_t hh = 0; hh < g; ++hh) {
                const double dh = grow[hh] + dh_carry[hh];
                const double dct = dh * go[hh] * (1.0 - tc[hh] * tc[hh]) + dc_carry[hh];
                const double di = dct * gc[hh];
                const double dg = dct * gi[hh];
                const double df = cprev ? dct * cprev[hh] : 0.0;
                const double do_ = dh * tc[hh];
                dz[hh] = di * gi[hh] * (1.0 - gi[hh]);
                dz[g + hh] = df * gf[hh] * (1.0 - gf[hh]);
                dz[2 * g + hh] = do_ * go[hh] * (1.0 - go[hh]);
                dz[3 * g + hh] = dg * (1.0 - gc[hh] * gc[hh]);
                dc_carry[hh] = dct * gf[hh];
            }
            for (size_t m = 0; m < gates; ++m) {
                gb[m] += dz[m];
            }
            accum_input(tp, idx, dz, gwx);
            if (j > 0) {
                for (size_t hh = 0; hh < g; ++hh) {
                    const double hv = hprev[hh];
                    double* gwhrow = gwh.data() + hh * gates;
                    const double* wrow = wh2.data() + hh * gates;
                    double acc = 0.0;
                    for (size_t m = 0; m < gates; ++m) {
                        gwhrow[m] += hv * dz[m];
                        acc += wrow[m] * dz[m];
                    }
                    dh_carry[hh] = acc;
                }
            } else {
                std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
            }
        }
    });
}

} // namespace

VarId lstm_sequence(Tape& t, VarId inputs, const LstmVars& p, LstmDirection dir, size_t length) {
    const Tensor& xv = t.val(inputs);
    require(xv.rank() == 2, "lstm_sequence: inputs must be 2-D");
    const LstmShapes sh = lstm_shapes(t, p);
    require(xv.dim(1) == sh.in_dim, "lstm_sequence: input width mismatch");
    require(length <= xv.dim(0), "lstm_sequence: length exceeds rows");

    const size_t in_dim = sh.in_dim, gates = sh.gates;
    auto read = [&t, inputs, in_dim, gates](size_t idx, const Tensor& wx, std::vector<double>& z) {
        const double* xrow = t.val(inputs).data() + idx * in_dim;
        for (size_t d = 0; d < in_dim; ++d) {
            const double xval = xrow[d];
            if (xval == 0.0) {
                continue;
            }
            const double* wrow = wx.data() + d * gates;
            for (size_t m = 0; m < gates; ++m) {
                z[m] += xval * wrow[m];
            }
        }
    };
    auto accum = [inputs, p, in_dim, gates](Tape& tp, size_t idx, const std::vector<double>& dz,
                                            Tensor& gwx) {
        const double* xrow = tp.val(inputs).data() + idx * in_dim;
        const Tensor& wx2 = tp.val(p.wx);
        Tensor& gx = tp.grad(inputs);
        double* gxrow = gx.data() + idx * in_dim;
        for (size_t d = 0; d < in_dim; ++d) {
            const double* wrow = wx2.data() + d * gates;
            double* gwrow = gwx.data() + d * gates;
            const double xval = xrow[d];
            double acc = 0.0;
            for (size_t m = 0; m < gates; ++m) {
                acc += wrow[m] * dz[m];
                gwrow[m] += xval * dz[m];
            }
            gxrow[d] += acc;
        }
    };
    return lstm_run(t, xv.dim(0), p, dir, length, read, accum, sh);
}

VarId lstm_sequence_onehot(Tape& t, const std::vector<std::array<int, 2>>& hot, size_t k,
                           const LstmVars& p, LstmDirection dir, size_t length) {
    const LstmShapes sh = lstm_shapes(t, p);
    require(length <= k && length <= hot.size(), "lstm_sequence_onehot: length exceeds rows");
    const size_t gates = sh.gates, in_dim = sh.in_dim;

    auto read = [&hot, gates, in_dim](size_t idx, const Tensor& wx, std::vector<double>& z) {
        for (int col : hot[idx]) {
            if (col < 0) {
                continue;
            }
            if (static_cast<size_t>(col) >= in_dim) {
                throw NumericError("lstm_sequence_onehot: hot index out of range");
            }
            const double* wrow = wx.data() + static_cast<size_t>(col) * gates;
            for (size_t m = 0; m < gates; ++m) {
                z[m] += wrow[m];
            }
        }
    };
    auto accum = [hot, gates](Tape&, size_t idx, const std::vector<double>& dz, Tensor& gwx) {
        for (int col : hot[idx]) {
            if (col < 0) {
                continue;
            }
            double* gwrow = gwx.data() + static_cast<size_t>(col) * gates;
            for (size_t m = 0; m < gates; ++m) {
                gwrow[m] += dz[m];
            }
        }
    };
    return lstm_run(t, k, p, dir, length, read, accum, sh);
}

VarId gather_rows(Tape& t, VarId table, std::vector<int> ids, size_t out_rows, size_t valid_rows) {
    const Tensor& tv = t.val(table);
    require(tv.rank() == 2, "gather_rows: table must be 2-D");
    require(valid_rows <= out_rows && valid_rows <= ids.size(), "gather_rows: row mismatch");
    const size_t n = tv.dim(1);
    Tensor out({out_rows, n});
    for (size_t i = 0; i < valid_rows; ++i) {
        if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= tv.dim(0)) {
            throw DataError("gather_rows: index out of range");
        }
        const double* src = tv.data() + static_cast<size_t>(ids[i]) * n;
        double* dst = out.data() + i * n;
        for (size_t j = 0; j < n; ++j) {
            dst[j] = src[j];
        }
    }
    return t.op(std::move(out), [table, ids = std::move(ids), valid_rows, n](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.grad(table);
        for (size_t i = 0; i < valid_rows; ++i) {
            const double* src = g.data() + i * n;
            double* dst = gt.data() + static_cast<size_t>(ids[i]) * n;
            for (size_t j = 0; j < n; ++j) {
                dst[j] += src[j];
            }
        }
    });
}

VarId gather_step_cols(Tape& t, VarId mat, std::vector<int> cols) {
    const Tensor& mv = t.val(mat);
    require(mv.rank() == 2, "gather_step_cols: matrix must be 2-D");
    require(cols.size() <= mv.dim(0), "gather_step_cols: too many rows requested");
    Tensor out({cols.size()});
    for (size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] < 0 || static_cast<size_t>(cols[i]) >= mv.dim(1)) {
            throw DataError("gather_step_cols: column out of range");
        }
        out[i] = mv.at(i, static_cast<size_t>(cols[i]));
    }
    return t.op(std::move(out), [mat, cols = std::move(cols)](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        Tensor& gm = tp.grad(mat);
        for (size_t i = 0; i < cols.size(); ++i) {
            gm.at(i, static_cast<size_t>(cols[i])) += g[i];
        }
    });
}

VarId clip(Tape& t, VarId x, double lo, double hi) {
    const Tensor& xv = t.val(x);
    Tensor out(xv.shape());
    for (size_t i = 0; i < xv.size(); ++i) {
        out[i] = std::min(std::max(xv[i], lo), hi);
    }
    return t.op(std::move(out), [x, lo, hi](Tape& tp, VarId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.val(x);
        Tensor& gx = tp.grad(x);
        for (size_t i = 0; i < g.size(); ++i) {
            if (xv2[i] > lo && xv2[i] < hi) {
                gx[i] += g[i];
            }
        }
    });
}

double bce_sum_value(const std::vector<double>& probs, const std::vector<int>& targets) {
    if (probs.size() != targets.size()) {
        throw NumericError("bce_sum: prediction/target count mismatch");
    }
    double loss = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        loss -= targets[i] == 1 ? std::log(probs[i]) : std::log(1.0 - probs[i]);
    }
    return loss;
}

VarId bce_sum(Tape& t, VarId probs, std::vector<int> targets) {
    const Tensor& pv = t.val(probs);
    require(pv.rank() == 1 && pv.dim(0) == targets.size(), "bce_sum: shape mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
        loss -= targets[i] == 1 ? std::log(pv[i]) : std::log(1.0 - pv[i]);
    }
    Tensor out({1});
    out[0] = loss;
    return t.op(std::move(out), [probs, targets = std::move(targets)](Tape& tp, VarId self) {
        const double g = tp.grad(self)[0];
        const Tensor& pv2 = tp.val(probs);
        Tensor& gp = tp.grad(probs);
        for (size_t i = 0; i < targets.size(); ++i) {
            const double p = pv2[i];
            gp[i] += g * (targets[i] == 1 ? -1.0 / p : 1.0 / (1.0 - p));
        }
    });
}

VarId add_scalars(Tape& t, VarId a, VarId b) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    require(av.size() == 1 && bv.size() == 1, "add_scalars: scalars required");
    Tensor out({1});
    out[0] = av[0] + bv[0];
    return t.op(std::move(out), [a, b](Tape& tp, VarId self) {
        const double g = tp.grad(self)[0];
        tp.grad(a)[0] += g;
        tp.grad(b)[0] += g;
    });
}

} // namespace ktlab::ops
