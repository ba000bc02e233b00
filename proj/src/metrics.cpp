#include "ktlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ktlab/errors.hpp"

namespace ktlab {

std::optional<double> auc_rank(const std::vector<PredictionRecord>& preds) {
    size_t positives = 0;
    for (const auto& p : preds) {
        positives += p.target == 1 ? 1 : 0;
    }
    const size_t negatives = preds.size() - positives;
    if (positives == 0 || negatives == 0) {
        return std::nullopt;
    }

    std::vector<size_t> order(preds.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return preds[a].prob < preds[b].prob; });

    // Average ranks across score ties; equivalent to counting tied
    // positive/negative pairs at half credit.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && preds[order[j]].prob == preds[order[i]].prob) {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (size_t t = i; t < j; ++t) {
            if (preds[order[t]].target == 1) {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    const double p = static_cast<double>(positives);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

MetricsReport compute_metrics(const std::vector<PredictionRecord>& preds) {
    if (preds.empty()) {
        throw DataError("metrics: empty prediction set");
    }
    MetricsReport report;
    report.predictions = preds.size();

    double sq_err = 0.0, mean_target = 0.0;
    size_t correct_cls = 0;
    for (const auto& p : preds) {
        const double diff = p.prob - static_cast<double>(p.target);
        sq_err += diff * diff;
        mean_target += static_cast<double>(p.target);
        const int predicted = p.prob > 0.5 ? 1 : 0;
        correct_cls += predicted == p.target ? 1 : 0;
    }
    const auto n = static_cast<double>(preds.size());
    mean_target /= n;
    report.rmse = std::sqrt(sq_err / n);
    report.acc = static_cast<double>(correct_cls) / n;

    double ss_tot = 0.0;
    for (const auto& p : preds) {
        const double d = static_cast<double>(p.target) - mean_target;
        ss_tot += d * d;
    }
    report.r2 = ss_tot > 0.0 ? 1.0 - sq_err / ss_tot : std::numeric_limits<double>::quiet_NaN();
    report.auc = auc_rank(preds);
    return report;
}

namespace {
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << "rmse=" << fmt_double(rmse) << '\n';
    out << "auc=" << (auc ? fmt_double(*auc) : std::string("undefined")) << '\n';
    out << "acc=" << fmt_double(acc) << '\n';
    out << "r2=" << fmt_double(r2) << '\n';
    out << "predictions=" << predictions << '\n';
    return out.str();
}

MetricsReport MetricsReport::from_text(const std::string& text) {
    MetricsReport report;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("metrics report: malformed line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "rmse") {
            report.rmse = std::stod(value);
        } else if (key == "auc") {
            report.auc = value == "undefined" ? std::nullopt : std::optional<double>(std::stod(value));
        } else if (key == "acc") {
            report.acc = std::stod(value);
        } else if (key == "r2") {
            report.r2 = std::stod(value);
        } else if (key == "predictions") {
            report.predictions = std::stoul(value);
        } else {
            throw DataError("metrics report: unknown key '" + key + "'");
        }
    }
    return report;
}

} // namespace ktlab
