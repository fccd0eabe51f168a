#include "codwoe/hyperopt.hpp"

#include <algorithm>
#include <cmath>

#include "codwoe/error.hpp"
#include "codwoe/prng.hpp"

namespace codwoe {

void SearchSpace::validate() const {
    if (params.empty()) throw Error("search space: no parameters");
    for (const auto& p : params) {
        if (p.name.empty()) throw Error("search space: unnamed parameter");
        if (p.type != ParamSpec::Type::Bool) {
            if (!(p.lo < p.hi))
                throw Error("search space: parameter \"" + p.name + "\" needs lo < hi");
            if (p.scale == ParamSpec::Scale::Log && p.lo <= 0.0)
                throw Error("search space: log scale needs positive bounds for \"" + p.name + "\"");
        }
    }
}

SearchSpace SearchSpace::from_json(const nlohmann::json& doc) {
    const nlohmann::json& arr = doc.is_array() ? doc : doc.at("params");
    SearchSpace space;
    for (const auto& e : arr) {
        ParamSpec p;
        p.name = e.at("name").get<std::string>();
        std::string type = e.value("type", "real");
        if (type == "real")
            p.type = ParamSpec::Type::Real;
        else if (type == "int" || type == "integer")
            p.type = ParamSpec::Type::Int;
        else if (type == "bool" || type == "boolean")
            p.type = ParamSpec::Type::Bool;
        else
            throw Error("search space: unknown type \"" + type + "\"");
        std::string scale = e.value("scale", "linear");
        if (scale == "linear")
            p.scale = ParamSpec::Scale::Linear;
        else if (scale == "log")
            p.scale = ParamSpec::Scale::Log;
        else
            throw Error("search space: unknown scale \"" + scale + "\"");
        if (p.type != ParamSpec::Type::Bool) {
            p.lo = e.at("lo").get<double>();
            p.hi = e.at("hi").get<double>();
        }
        space.params.push_back(std::move(p));
    }
    space.validate();
    return space;
}

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double denorm_value(const ParamSpec& p, double u) {
    u = clamp01(u);
    double v;
    if (p.scale == ParamSpec::Scale::Log)
        v = std::exp(std::log(p.lo) + u * (std::log(p.hi) - std::log(p.lo)));
    else
        v = p.lo + u * (p.hi - p.lo);
    if (p.type == ParamSpec::Type::Int)
        v = std::min(p.hi, std::max(p.lo, std::round(v)));
    return v;
}

} // namespace

nlohmann::ordered_json denormalize(const SearchSpace& space, const std::vector<double>& point) {
    if (point.size() != space.dim()) throw Error("denormalize: point dimension mismatch");
    nlohmann::ordered_json cfg;
    for (size_t d = 0; d < space.dim(); ++d) {
        const ParamSpec& p = space.params[d];
        switch (p.type) {
        case ParamSpec::Type::Bool: cfg[p.name] = point[d] >= 0.5; break;
        case ParamSpec::Type::Int:
            cfg[p.name] = static_cast<long long>(denorm_value(p, point[d]));
            break;
        case ParamSpec::Type::Real: cfg[p.name] = denorm_value(p, point[d]); break;
        }
    }
    return cfg;
}

std::vector<double> snap_point(const SearchSpace& space, const std::vector<double>& point) {
    std::vector<double> out(point.size());
    for (size_t d = 0; d < space.dim(); ++d) {
        const ParamSpec& p = space.params[d];
        double u = clamp01(point[d]);
        switch (p.type) {
        case ParamSpec::Type::Bool: out[d] = u >= 0.5 ? 1.0 : 0.0; break;
        case ParamSpec::Type::Int: {
            double v = denorm_value(p, u);
            if (p.scale == ParamSpec::Scale::Log)
                out[d] = (std::log(v) - std::log(p.lo)) / (std::log(p.hi) - std::log(p.lo));
            else
                out[d] = (v - p.lo) / (p.hi - p.lo);
            out[d] = clamp01(out[d]);
            break;
        }
        case ParamSpec::Type::Real: out[d] = u; break;
        }
    }
    return out;
}

namespace {

constexpr double kJitter = 1e-6;

// In-place lower-triangular Cholesky; returns false if not positive definite.
bool cholesky(std::vector<double>& a, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                a[i * n + j] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for (size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return true;
}

std::vector<double> solve_lower(const std::vector<double>& l, size_t n,
                                const std::vector<double>& b) {
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (size_t k = 0; k < i; ++k) s -= l[i * n + k] * y[k];
        y[i] = s / l[i * n + i];
    }
    return y;
}

std::vector<double> solve_upper_t(const std::vector<double>& l, size_t n,
                                  const std::vector<double>& y) {
    std::vector<double> x(n);
    for (size_t ii = n; ii > 0; --ii) {
        size_t i = ii - 1;
        double s = y[i];
        for (size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
        x[i] = s / l[i * n + i];
    }
    return x;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

} // namespace

double GaussianProcess::kernel(const std::vector<double>& a, const std::vector<double>& b,
                               const std::vector<double>& lengths) const {
    double s = 0.0;
    for (size_t d = 0; d < a.size(); ++d) {
        double diff = (a[d] - b[d]) / lengths[d];
        s += diff * diff;
    }
    return std::exp(-0.5 * s);
}

void GaussianProcess::fit(const std::vector<std::vector<double>>& points,
                          const std::vector<double>& values) {
    if (points.empty() || points.size() != values.size())
        throw Error("gp: need one observation per point");
    const size_t n = points.size();
    const size_t k = points[0].size();
    x_ = points;

    y_mean_ = 0.0;
    for (double v : values) y_mean_ += v;
    y_mean_ /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - y_mean_) * (v - y_mean_);
    y_scale_ = n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    if (y_scale_ <= 0.0) y_scale_ = 1.0;
    y_std_.resize(n);
    for (size_t i = 0; i < n; ++i) y_std_[i] = (values[i] - y_mean_) / y_scale_;
    best_std_ = *std::min_element(y_std_.begin(), y_std_.end());

    auto log_marginal = [&](const std::vector<double>& lengths, std::vector<double>* chol_out,
                            std::vector<double>* alpha_out) {
        std::vector<double> K(n * n);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                K[i * n + j] = kernel(x_[i], x_[j], lengths) + (i == j ? kJitter : 0.0);
        if (!cholesky(K, n)) return -std::numeric_limits<double>::infinity();
        std::vector<double> alpha = solve_upper_t(K, n, solve_lower(K, n, y_std_));
        // The model is noiseless; the jitter exists only to make the
        // factorization well posed. A few rounds of jitter-preconditioned
        // refinement against the unjittered kernel push the posterior mean
        // onto the observations (exact interpolation).
        for (int round = 0; round < 3; ++round) {
            std::vector<double> residual(n);
            for (size_t i = 0; i < n; ++i) {
                double s = y_std_[i];
                for (size_t j = 0; j < n; ++j) s -= kernel(x_[i], x_[j], lengths) * alpha[j];
                residual[i] = s;
            }
            std::vector<double> corr = solve_upper_t(K, n, solve_lower(K, n, residual));
            for (size_t i = 0; i < n; ++i) alpha[i] += corr[i];
        }
        double lml = 0.0;
        for (size_t i = 0; i < n; ++i) lml -= 0.5 * y_std_[i] * alpha[i];
        for (size_t i = 0; i < n; ++i) lml -= std::log(K[i * n + i]);
        lml -= 0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
        if (chol_out) *chol_out = std::move(K);
        if (alpha_out) *alpha_out = std::move(alpha);
        return lml;
    };

    // Coordinate-descent grid search over per-dimension length scales.
    static const double kGrid[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 2.0};
    lengths_.assign(k, 0.5);
    double best_lml = log_marginal(lengths_, nullptr, nullptr);
    for (int sweep = 0; sweep < 2; ++sweep) {
        for (size_t d = 0; d < k; ++d) {
            double best_len = lengths_[d];
            for (double cand : kGrid) {
                if (cand == lengths_[d]) continue;
                std::vector<double> trial = lengths_;
                trial[d] = cand;
                double lml = log_marginal(trial, nullptr, nullptr);
                if (lml > best_lml) {
                    best_lml = lml;
                    best_len = cand;
                }
            }
            lengths_[d] = best_len;
        }
    }
    if (log_marginal(lengths_, &chol_, &alpha_) == -std::numeric_limits<double>::infinity())
        throw Error("gp: kernel matrix not positive definite despite jitter");
}

namespace {

// Posterior variance of the noiseless model: residuals at or under the
// jitter floor are numerical artifacts and clamp to exactly zero.
double floored_variance(double one_minus_vtv) { return std::max(0.0, one_minus_vtv - 2.0 * kJitter); }

} // namespace

GaussianProcess::Posterior GaussianProcess::predict(const std::vector<double>& x) const {
    const size_t n = x_.size();
    std::vector<double> ks(n);
    for (size_t i = 0; i < n; ++i) ks[i] = kernel(x, x_[i], lengths_);
    double mu = 0.0;
    for (size_t i = 0; i < n; ++i) mu += ks[i] * alpha_[i];
    std::vector<double> v = solve_lower(chol_, n, ks);
    double var = 1.0;
    for (size_t i = 0; i < n; ++i) var -= v[i] * v[i];
    var = floored_variance(var);
    return {y_mean_ + y_scale_ * mu, y_scale_ * y_scale_ * var};
}

double GaussianProcess::expected_improvement(const std::vector<double>& x) const {
    const size_t n = x_.size();
    std::vector<double> ks(n);
    for (size_t i = 0; i < n; ++i) ks[i] = kernel(x, x_[i], lengths_);
    double mu = 0.0;
    for (size_t i = 0; i < n; ++i) mu += ks[i] * alpha_[i];
    std::vector<double> v = solve_lower(chol_, n, ks);
    double var = 1.0;
    for (size_t i = 0; i < n; ++i) var -= v[i] * v[i];
    double sigma = std::sqrt(floored_variance(var));
    double gap = best_std_ - mu;
    if (sigma < 1e-12) return std::max(0.0, gap);
    double z = gap / sigma;
    return std::max(0.0, gap * norm_cdf(z) + sigma * norm_pdf(z));
}

namespace {

// Additive-recurrence (R-sequence) quasi-random points: alpha_d from the
// generalized golden ratio, offset seeded.
std::vector<double> r_sequence_point(size_t k, size_t index, uint64_t seed) {
    double phi = 1.5;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (static_cast<double>(k) + 1.0));
    SplitMix64 rng(seed);
    std::vector<double> point(k);
    double alpha = 1.0;
    for (size_t d = 0; d < k; ++d) {
        alpha /= phi;
        double offset = rng.uniform01();
        double x = offset + alpha * static_cast<double>(index + 1);
        point[d] = x - std::floor(x);
    }
    return point;
}

} // namespace

std::vector<double> suggest(const std::vector<TrialRecord>& history, const SearchSpace& space,
                            uint64_t seed, size_t init_count) {
    space.validate();
    const size_t k = space.dim();
    if (history.size() < init_count)
        return snap_point(space, r_sequence_point(k, history.size(), seed));

    std::vector<std::vector<double>> points;
    std::vector<double> values;
    for (const auto& t : history) {
        if (t.point.size() != k) throw Error("suggest: trial point dimension mismatch");
        points.push_back(t.point);
        values.push_back(t.objective);
    }
    GaussianProcess gp;
    gp.fit(points, values);

    // 1024 seeded candidates; the stream is keyed on the trial index so
    // every suggestion explores fresh points.
    SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (history.size() + 1)));
    std::vector<double> best_point;
    double best_ei = -1.0;
    for (int c = 0; c < 1024; ++c) {
        std::vector<double> u(k);
        for (size_t d = 0; d < k; ++d) u[d] = rng.uniform01();
        u = snap_point(space, u);
        double ei = gp.expected_improvement(u);
        if (ei > best_ei) {
            best_ei = ei;
            best_point = u;
        }
    }
    return best_point;
}

TrialRecord optimize(const std::function<double(const nlohmann::ordered_json&)>& objective,
                     const SearchSpace& space, size_t budget, size_t init_count, uint64_t seed,
                     std::vector<TrialRecord>* history) {
    space.validate();
    if (init_count < 1 || budget < init_count)
        throw Error("optimize: need budget >= init_count >= 1");
    std::vector<TrialRecord> local;
    std::vector<TrialRecord>& trials = history ? *history : local;

    while (trials.size() < budget) {
        std::vector<double> point = suggest(trials, space, seed, init_count);
        TrialRecord rec;
        rec.point = point;
        rec.config = denormalize(space, point);
        double value = objective(rec.config);
        if (!std::isfinite(value)) {
            double worst = -std::numeric_limits<double>::infinity();
            double best = std::numeric_limits<double>::infinity();
            for (const auto& t : trials) {
                if (t.failed) continue;
                worst = std::max(worst, t.objective);
                best = std::min(best, t.objective);
            }
            if (!std::isfinite(worst)) {
                value = 1e6;
            } else {
                double spread = worst - best;
                value = worst + (spread > 0.0 ? spread : 1.0);
            }
            rec.failed = true;
        }
        rec.objective = value;
        trials.push_back(std::move(rec));
    }

    const TrialRecord* best = nullptr;
    for (const auto& t : trials)
        if (!best || t.objective < best->objective) best = &t;
    return *best;
}

nlohmann::ordered_json trials_to_json(const std::vector<TrialRecord>& trials) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : trials)
        arr.push_back({{"point", t.point},
                       {"objective", t.objective},
                       {"failed", t.failed},
                       {"config", t.config}});
    return arr;
}

std::vector<TrialRecord> trials_from_json(const nlohmann::json& doc) {
    std::vector<TrialRecord> trials;
    for (const auto& e : doc) {
        TrialRecord t;
        t.point = e.at("point").get<std::vector<double>>();
        t.objective = e.at("objective").get<double>();
        t.failed = e.value("failed", false);
        if (e.contains("config")) t.config = e.at("config");
        trials.push_back(std::move(t));
    }
    return trials;
}

} // namespace codwoe
