#pragma once

#include <cstdint>
#include <vector>

#include "vlmlab/model.hpp"

namespace vlmlab {

struct TrainConfig {
    int steps = 600;
    int batch_size = 16;
    double learning_rate = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t shuffle_seed = 0;
    int log_every = 25;

    void validate() const;
};

struct TrainLogEntry {
    int step = 0;
    double loss = 0.0;
};

// Adam with bias correction over the model's flat parameter registry.
class AdamOptimizer {
  public:
    AdamOptimizer(const std::vector<Param>& params, double lr, double beta1, double beta2, double eps);

    void step(std::vector<Param>& params, const std::vector<Mat>& grads);

  private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
};

// Minibatch training over a fixed example set: epoch-wise deterministic
// shuffle, mean cross-entropy, Adam updates in place.
std::vector<TrainLogEntry> train_model(Model& model, const std::vector<MultimodalInput>& inputs,
                                       const std::vector<int>& labels, const TrainConfig& cfg);

}  // namespace vlmlab
