#pragma once

#include <vector>

namespace xgcn {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& xs);

struct SpearmanResult {
    double rho = 0.0;
    bool defined = true;  // false when either input has zero rank variance
};

// Pearson correlation of the average-ranked data.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie), computed by rank
// summation. Requires both classes present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Linear-interpolation (type 7) quantile of unsorted data, q in [0, 1].
double quantile_type7(std::vector<double> xs, double q);

struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::vector<double> outliers;  // beyond 1.5 * IQR from the quartiles
};

BoxStats box_stats(const std::vector<double>& xs);

}  // namespace xgcn
