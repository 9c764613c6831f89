#pragma once

#include <span>

#include "lm/model.hpp"

namespace memsteer::lm {

struct TrainConfig {
    int steps = 1000;
    double lr = 3e-3;
    int batch = 8;
    uint64_t seed = 0;
    int log_every = 0;  // 0 silences stderr progress
};

struct TrainLog {
    std::vector<double> loss_per_step;
};

// A zeroed structural twin of `m`; doubles as gradient/optimizer-state storage.
Model zeros_like(const Model& m);

// Mean cross-entropy over assistant-turn tokens (content plus the closing
// <eos>) across the batch. When `grads` is non-null the analytic gradient is
// accumulated into it.
double loss_and_grad(const Model& m, std::span<const ChatTranscript> batch, Model* grads);

// Adam over mini-batches sampled with replacement. Deterministic given the
// seed; aborts with a non_finite error naming the step if the loss diverges.
TrainLog train(Model& m, const std::vector<ChatTranscript>& corpus, const TrainConfig& cfg);

}  // namespace memsteer::lm
