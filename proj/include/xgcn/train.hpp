#pragma once

#include <cstdint>
#include <vector>

#include "xgcn/model.hpp"
#include "xgcn/sequence.hpp"

namespace xgcn {

struct LabeledExample {
    FeatureStreams streams;
    int label = 0;
};

struct TrainConfig {
    double lr = 0.1;
    int epochs = 50;
    int batch = 8;
    std::uint64_t seed = 1234;
};

struct TrainResult {
    std::vector<double> loss_trace;  // mean cross-entropy per epoch
    double final_train_accuracy = 0.0;
};

// Minibatch gradient descent on softmax cross-entropy. Deterministic given
// the seed; aborts with NumericError if the loss goes non-finite.
TrainResult train(GcnModel& model, const std::vector<LabeledExample>& dataset,
                  const TrainConfig& config);

double accuracy(const GcnModel& model, const std::vector<LabeledExample>& dataset);

}  // namespace xgcn
