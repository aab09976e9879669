#include "xgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xgcn/errors.hpp"
#include "xgcn/rng.hpp"

namespace xgcn {

namespace {

// Returns (loss, dlogits) for one example.
double softmax_xent(const std::vector<double>& logits, int label,
                    std::vector<double>& dlogits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    dlogits.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        dlogits[c] = std::exp(logits[c] - mx);
        z += dlogits[c];
    }
    const double loss = std::log(z) - (logits[label] - mx);
    for (std::size_t c = 0; c < logits.size(); ++c) dlogits[c] /= z;
    dlogits[label] -= 1.0;
    return loss;
}

}  // namespace

TrainResult train(GcnModel& model, const std::vector<LabeledExample>& dataset,
                  const TrainConfig& config) {
    if (dataset.empty()) throw DataError("train: empty dataset");
    for (const auto& ex : dataset)
        if (ex.label < 0 || ex.label >= model.config.num_classes)
            throw DataError("train: label out of range");
    if (config.batch < 1) throw UsageError("train: batch must be positive");
    if (config.epochs < 0) throw UsageError("train: negative epoch count");

    Rng rng(mix_seed(config.seed, 0x7241u));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    // Adam; the synthetic task has a long shallow plateau before the feature
    // layers pick up the class signal, and fixed-step descent either crawls
    // through it or diverges.
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ModelGradients m1 = zero_gradients(model);
    ModelGradients m2 = zero_gradients(model);
    const auto m1_view = gradient_tensors(m1);
    const auto m2_view = gradient_tensors(m2);
    const auto params = named_tensors(model);
    long step = 0;

    TrainResult result;
    ForwardTrace trace;
    std::vector<double> dlogits;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch));
            ModelGradients grads = zero_gradients(model);
            for (std::size_t n = start; n < stop; ++n) {
                const LabeledExample& ex = dataset[order[n]];
                forward_logits(model, ex.streams, trace);
                epoch_loss += softmax_xent(trace.logits, ex.label, dlogits);
                backward_params(model, ex.streams, trace, dlogits, grads);
            }

            ++step;
            const double scale = 1.0 / static_cast<double>(stop - start);
            const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            const auto grad_view = gradient_tensors(grads);
            for (std::size_t ti = 0; ti < grad_view.size(); ++ti) {
                std::vector<double>& mm = *m1_view[ti];
                std::vector<double>& vv = *m2_view[ti];
                std::vector<double>& pp = *params[ti].data;
                const std::vector<double>& gg = *grad_view[ti];
                for (std::size_t i = 0; i < gg.size(); ++i) {
                    const double g = gg[i] * scale;
                    mm[i] = kBeta1 * mm[i] + (1.0 - kBeta1) * g;
                    vv[i] = kBeta2 * vv[i] + (1.0 - kBeta2) * g * g;
                    pp[i] -= config.lr * (mm[i] / corr1) /
                             (std::sqrt(vv[i] / corr2) + kEps);
                }
            }
        }
        epoch_loss /= static_cast<double>(dataset.size());
        if (!std::isfinite(epoch_loss))
            throw NumericError("training diverged: loss is not finite at epoch " +
                               std::to_string(epoch));
        result.loss_trace.push_back(epoch_loss);
    }
    result.final_train_accuracy = accuracy(model, dataset);
    return result;
}

double accuracy(const GcnModel& model, const std::vector<LabeledExample>& dataset) {
    if (dataset.empty()) throw DataError("accuracy: empty dataset");
    std::size_t hits = 0;
    for (const auto& ex : dataset)
        if (predict_class(model, ex.streams) == ex.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

}  // namespace xgcn
