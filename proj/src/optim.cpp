#include "codwoe/optim.hpp"

#include <cmath>

#include "codwoe/error.hpp"

namespace codwoe {

void OptimizerConfig::validate() const {
    if (lr <= 0.0) throw Error("optimizer: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw Error("optimizer: betas must lie in [0, 1)");
    if (eps <= 0.0) throw Error("optimizer: eps must be positive");
    if (weight_decay < 0.0) throw Error("optimizer: weight decay must be nonnegative");
}

AdamW::AdamW(std::vector<Tensor> params, OptimizerConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (const auto& p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void AdamW::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        if (p->grad.size() != p->size()) p->grad.assign(p->size(), 0.0);
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (size_t i = 0; i < p->size(); ++i) {
            double g = p->grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p->value[i] -=
                lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p->value[i]);
        }
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) p->grad.assign(p->size(), 0.0);
}

double lr_at(const LrSchedule& schedule, size_t step) {
    if (schedule.warmup_steps > schedule.total_steps)
        throw Error("lr schedule: warmup exceeds total steps");
    if (step > schedule.total_steps)
        throw Error("lr schedule: step " + std::to_string(step) + " beyond total " +
                    std::to_string(schedule.total_steps));
    if (schedule.warmup_steps > 0 && step <= schedule.warmup_steps)
        return schedule.peak_lr * static_cast<double>(step) /
               static_cast<double>(schedule.warmup_steps);
    if (schedule.total_steps == schedule.warmup_steps) return schedule.peak_lr;
    double progress = static_cast<double>(step - schedule.warmup_steps) /
                      static_cast<double>(schedule.total_steps - schedule.warmup_steps);
    // (1 + cos(pi x)) / 2 with the anchor points pinned so the schedule hits
    // peak, peak/2 and 0 exactly.
    double factor;
    if (progress <= 0.0) {
        factor = 1.0;
    } else if (progress >= 1.0) {
        factor = 0.0;
    } else if (progress == 0.5) {
        factor = 0.5;
    } else {
        constexpr double pi = 3.14159265358979323846;
        factor = 0.5 * (1.0 + std::cos(pi * progress));
    }
    return schedule.peak_lr * factor;
}

bool EarlyStopper::update(double val_loss) {
    if (!has_best_) {
        has_best_ = true;
        best_ = val_loss;
        streak_ = 0;
        return false;
    }
    if (val_loss <= best_ * (1.0 - min_rel_)) {
        streak_ = 0;
    } else {
        ++streak_;
    }
    if (val_loss < best_) best_ = val_loss;
    return streak_ >= patience_;
}

} // namespace codwoe
