#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace codwoe {

struct ParamSpec {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    enum class Scale { Linear, Log } scale = Scale::Linear;
    enum class Type { Real, Int, Bool } type = Type::Real;
};

struct SearchSpace {
    std::vector<ParamSpec> params;
    size_t dim() const { return params.size(); }
    void validate() const;
    static SearchSpace from_json(const nlohmann::json& doc);
};

// One evaluated configuration; the point lives in the unit cube, snapped to
// the integrality grid of its dimensions.
struct TrialRecord {
    std::vector<double> point;
    double objective = 0.0; // minimized
    bool failed = false;    // non-finite objective, penalized
    nlohmann::ordered_json config;
};

// Unit-cube point -> named values (log/linear scaling, rounding, booleans).
nlohmann::ordered_json denormalize(const SearchSpace& space, const std::vector<double>& point);
// Unit-cube point -> the unit-cube representative of the realized config.
std::vector<double> snap_point(const SearchSpace& space, const std::vector<double>& point);

// Noise-free GP with a squared-exponential kernel, per-dimension length
// scales chosen by coordinate-descent grid search on the log marginal
// likelihood, and 1e-6 jitter on the diagonal.
class GaussianProcess {
public:
    void fit(const std::vector<std::vector<double>>& points, const std::vector<double>& values);
    struct Posterior {
        double mean;
        double variance;
    };
    Posterior predict(const std::vector<double>& x) const;
    double expected_improvement(const std::vector<double>& x) const; // vs the observed minimum
    const std::vector<double>& length_scales() const { return lengths_; }

private:
    double kernel(const std::vector<double>& a, const std::vector<double>& b,
                  const std::vector<double>& lengths) const;
    std::vector<std::vector<double>> x_;
    std::vector<double> y_std_; // standardized observations
    std::vector<double> lengths_;
    std::vector<double> chol_;  // lower Cholesky factor of K
    std::vector<double> alpha_; // K^-1 y
    double y_mean_ = 0.0, y_scale_ = 1.0;
    double best_std_ = 0.0;
};

// The first init_count suggestions follow a seeded additive-recurrence
// (R-sequence) space filling; afterwards the GP expected-improvement argmax
// over 1024 seeded candidates.
std::vector<double> suggest(const std::vector<TrialRecord>& history, const SearchSpace& space,
                            uint64_t seed, size_t init_count = 10);

// Evaluates exactly `budget` configurations (resuming from *history if it
// already holds trials) and returns the minimizer. Non-finite objectives are
// recorded as failed trials at worst-so-far plus one spread.
TrialRecord optimize(const std::function<double(const nlohmann::ordered_json&)>& objective,
                     const SearchSpace& space, size_t budget, size_t init_count, uint64_t seed,
                     std::vector<TrialRecord>* history = nullptr);

nlohmann::ordered_json trials_to_json(const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> trials_from_json(const nlohmann::json& doc);

} // namespace codwoe
