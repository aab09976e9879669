#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_helpers.hpp"
#include "xgcn/errors.hpp"
#include "xgcn/stats.hpp"

using namespace xgcn;

namespace {

// O(n^2) pairwise AUC oracle.
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[i] != 1 || labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    return wins / static_cast<double>(pairs);
}

// Explicit average-rank assignment.
std::vector<double> rank_oracle(const std::vector<double>& xs) {
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::size_t below = 0, ties = 0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (xs[j] < xs[i]) ++below;
            if (xs[j] == xs[i]) ++ties;
        }
        ranks[i] = below + 0.5 * static_cast<double>(ties + 1);
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("spearman: identity and reversal") {
    const std::vector<double> x = {3.0, 1.0, 4.0, 1.5, 5.0, 9.0};
    std::vector<double> rev = x;
    std::sort(rev.begin(), rev.end());
    std::vector<double> y(x.size());
    // y = rank-reversing transform of x
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = -x[i];
    CHECK(spearman(x, x).rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman(x, y).rho == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
    Rng rng(1);
    std::vector<double> x(40), y(40), gx(40);
    for (int i = 0; i < 40; ++i) {
        x[i] = rng.uniform(-2, 2);
        y[i] = rng.uniform(-2, 2);
        gx[i] = std::exp(2.0 * x[i]) + 3.0;
    }
    CHECK(spearman(x, y).rho == doctest::Approx(spearman(gx, y).rho).epsilon(1e-12));
}

TEST_CASE("spearman with ties matches the average-rank oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(30), y(30);
        for (int i = 0; i < 30; ++i) {
            // coarse quantization forces plenty of ties
            x[i] = std::floor(rng.uniform(0, 5));
            y[i] = std::floor(rng.uniform(0, 4));
        }
        const SpearmanResult r = spearman(x, y);
        if (!r.defined) continue;
        CHECK(r.rho ==
              doctest::Approx(pearson(rank_oracle(x), rank_oracle(y))).epsilon(1e-12));
    }
}

TEST_CASE("spearman: zero rank variance is reported undefined") {
    const std::vector<double> x = {1, 1, 1, 1};
    const std::vector<double> y = {1, 2, 3, 4};
    CHECK(!spearman(x, y).defined);
    CHECK(!spearman(y, x).defined);
}

TEST_CASE("roc_auc: separation, inversion, and the pairwise oracle") {
    const std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
    const std::vector<int> labels = {1, 1, 0, 0};
    CHECK(roc_auc(s, labels) == doctest::Approx(1.0));

    std::vector<int> inverted = {0, 0, 1, 1};
    CHECK(roc_auc(s, inverted) == doctest::Approx(0.0));

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores(50);
        std::vector<int> lab(50);
        bool pos = false, neg = false;
        for (int i = 0; i < 50; ++i) {
            scores[i] = std::floor(rng.uniform(0, 8));  // ties likely
            lab[i] = rng.uniform01() < 0.4 ? 1 : 0;
            (lab[i] ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        CHECK(roc_auc(scores, lab) == doctest::Approx(pairwise_auc(scores, lab)).epsilon(1e-12));
        // complement identity
        std::vector<int> flip(50);
        for (int i = 0; i < 50; ++i) flip[i] = 1 - lab[i];
        CHECK(roc_auc(scores, lab) + roc_auc(scores, flip) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("roc_auc rejects single-class labels") {
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), DataError);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 2}), std::invalid_argument);
}

TEST_CASE("quantiles and box stats match the sort-based oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng.index(40));
        std::vector<double> xs(n);
        for (double& x : xs) x = rng.uniform(-5, 5);

        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double pos = q * (n - 1);
            const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
            const std::size_t hi = std::min<std::size_t>(lo + 1, n - 1);
            const double expect =
                sorted[lo] + (pos - std::floor(pos)) * (sorted[hi] - sorted[lo]);
            CHECK(quantile_type7(xs, q) == doctest::Approx(expect).epsilon(1e-12));
        }

        const BoxStats b = box_stats(xs);
        CHECK(b.q1 <= b.median);
        CHECK(b.median <= b.q3);
        for (double o : b.outliers) {
            const bool outside =
                o < b.q1 - 1.5 * (b.q3 - b.q1) || o > b.q3 + 1.5 * (b.q3 - b.q1);
            CHECK(outside);
        }
    }
}
