#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ktlab {

struct PredictionRecord {
    double prob = 0.0;
    int target = 0;
    int skill = 0;
};

struct MetricsReport {
    double rmse = 0.0;
    std::optional<double> auc; // undefined on single-class targets
    double acc = 0.0;
    double r2 = 0.0; // NaN when the targets have zero variance
    size_t predictions = 0;

    std::string to_text() const;
    static MetricsReport from_text(const std::string& text);

    bool operator==(const MetricsReport&) const = default;
};

// Pooled metrics over a prediction set: ACC at threshold 0.5, RMSE, r^2
// against the binary targets, and rank-based AUC with ties counted half.
MetricsReport compute_metrics(const std::vector<PredictionRecord>& preds);

// AUC alone; nullopt when only one class is present.
std::optional<double> auc_rank(const std::vector<PredictionRecord>& preds);

} // namespace ktlab
