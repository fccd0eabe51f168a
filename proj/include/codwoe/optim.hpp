#pragma once

#include <vector>

#include "codwoe/tensor.hpp"

namespace codwoe {

struct OptimizerConfig {
    double lr = 1e-3; // peak learning rate of the schedule
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    void validate() const;
};

// AdamW: bias-corrected moments, weight decay decoupled from the gradient.
class AdamW {
public:
    AdamW(std::vector<Tensor> params, OptimizerConfig cfg);

    // One update with the given learning rate (scheduled externally).
    void step(double lr);
    void zero_grad();
    size_t steps_taken() const { return t_; }

private:
    std::vector<Tensor> params_;
    OptimizerConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    size_t t_ = 0;
};

// Linear warmup to peak_lr over [0, warmup], then half-cosine decay hitting
// exactly 0 at total.
struct LrSchedule {
    size_t warmup_steps = 0;
    size_t total_steps = 1;
    double peak_lr = 1e-3;
};
double lr_at(const LrSchedule& schedule, size_t step);

// Stops once `patience` consecutive epochs each fail to improve on the best
// validation loss by at least min_rel_improvement (relative).
class EarlyStopper {
public:
    EarlyStopper(size_t patience, double min_rel_improvement)
        : patience_(patience), min_rel_(min_rel_improvement) {}

    // Feed one validation loss per epoch; true means stop now.
    bool update(double val_loss);
    double best() const { return best_; }
    size_t epochs_without_improvement() const { return streak_; }

private:
    size_t patience_;
    double min_rel_;
    bool has_best_ = false;
    double best_ = 0.0;
    size_t streak_ = 0;
};

} // namespace codwoe
