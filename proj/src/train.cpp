#include "vlmlab/train.hpp"

#include <cmath>

#include "vlmlab/rng.hpp"

namespace vlmlab {

void TrainConfig::validate() const {
    if (steps < 1) throw ConfigError("train config: steps must be >= 1");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("train config: betas must be in [0, 1)");
}

AdamOptimizer::AdamOptimizer(const std::vector<Param>& params, double lr, double beta1,
                             double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& prm : params) {
        m_.emplace_back(prm.value.rows, prm.value.cols);
        v_.emplace_back(prm.value.rows, prm.value.cols);
    }
}

void AdamOptimizer::step(std::vector<Param>& params, const std::vector<Mat>& grads) {
    if (grads.size() != params.size()) throw ShapeError("adam: grads/params length mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
        Mat& w = params[i].value;
        const Mat& g = grads[i];
        Mat& m = m_[i];
        Mat& v = v_[i];
        for (size_t k = 0; k < w.data.size(); ++k) {
            m.data[k] = beta1_ * m.data[k] + (1.0 - beta1_) * g.data[k];
            v.data[k] = beta2_ * v.data[k] + (1.0 - beta2_) * g.data[k] * g.data[k];
            const double mhat = m.data[k] / bc1;
            const double vhat = v.data[k] / bc2;
            w.data[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::vector<TrainLogEntry> train_model(Model& model, const std::vector<MultimodalInput>& inputs,
                                       const std::vector<int>& labels, const TrainConfig& cfg) {
    cfg.validate();
    if (inputs.empty()) throw ShapeError("train: empty example set");
    if (inputs.size() != labels.size()) throw ShapeError("train: inputs/labels length mismatch");

    AdamOptimizer opt(model.params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    Rng rng(cfg.shuffle_seed);

    std::vector<size_t> order(inputs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    size_t cursor = order.size();  // forces a shuffle before the first batch

    std::vector<TrainLogEntry> log;
    std::vector<Mat> grads;
    std::vector<MultimodalInput> batch;
    std::vector<int> batch_labels;

    for (int step = 1; step <= cfg.steps; ++step) {
        batch.clear();
        batch_labels.clear();
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (cursor >= order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            batch.push_back(inputs[order[cursor]]);
            batch_labels.push_back(labels[order[cursor]]);
            ++cursor;
        }
        const double loss = model.loss_and_grads(batch, batch_labels, grads);
        opt.step(model.params(), grads);
        if (step == 1 || step == cfg.steps || (cfg.log_every > 0 && step % cfg.log_every == 0))
            log.push_back({step, loss});
    }
    return log;
}

}  // namespace vlmlab
