#include "codwoe/metrics_revdict.hpp"

#include <cmath>
#include <thread>

#include "codwoe/error.hpp"

namespace codwoe {

void VectorBatch::push_row(std::span<const double> v) {
    if (n == 0) {
        dim = v.size();
    } else if (v.size() != dim) {
        throw Error("VectorBatch: row dimension mismatch (got " + std::to_string(v.size()) +
                    ", expected " + std::to_string(dim) + ")");
    }
    data.insert(data.end(), v.begin(), v.end());
    ++n;
}

namespace {

void check_dims(std::span<const double> p, std::span<const double> t, const char* op) {
    if (p.size() != t.size())
        throw Error(std::string(op) + ": dimension mismatch (" + std::to_string(p.size()) +
                    " vs " + std::to_string(t.size()) + ")");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace

double mse(std::span<const double> p, std::span<const double> t) {
    check_dims(p, t, "mse");
    if (p.empty()) return 0.0;
    double s = 0.0;
    for (size_t k = 0; k < p.size(); ++k) {
        double d = p[k] - t[k];
        s += d * d;
    }
    return s / static_cast<double>(p.size());
}

double cosine(std::span<const double> p, std::span<const double> t) {
    check_dims(p, t, "cosine");
    double np = norm(p);
    double nt = norm(t);
    if (np == 0.0 || nt == 0.0) return 0.0;
    return dot(p, t) / (np * nt);
}

std::vector<double> rank_metric(const VectorBatch& preds, const VectorBatch& targets,
                                unsigned threads) {
    if (preds.n != targets.n)
        throw Error("rank_metric: batch sizes differ (" + std::to_string(preds.n) + " vs " +
                    std::to_string(targets.n) + ")");
    if (preds.n == 0) throw Error("rank_metric: empty batch");
    if (preds.dim != targets.dim)
        throw Error("rank_metric: dimension mismatch (" + std::to_string(preds.dim) + " vs " +
                    std::to_string(targets.dim) + ")");

    const size_t n = preds.n;
    std::vector<double> target_norms(n);
    for (size_t j = 0; j < n; ++j) target_norms[j] = norm(targets.row(j));

    std::vector<double> ranks(n);
    auto score_rows = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            auto p = preds.row(i);
            double np = norm(p);
            auto cos_with = [&](size_t j) {
                if (np == 0.0 || target_norms[j] == 0.0) return 0.0;
                return dot(p, targets.row(j)) / (np * target_norms[j]);
            };
            double self = cos_with(i);
            size_t count = 0;
            for (size_t j = 0; j < n; ++j)
                if (cos_with(j) > self) ++count;
            ranks[i] = static_cast<double>(count) / static_cast<double>(n);
        }
    };

    if (threads <= 1 || n < 2 * threads) {
        score_rows(0, n);
    } else {
        std::vector<std::thread> pool;
        size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            size_t begin = t * chunk;
            size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(score_rows, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return ranks;
}

RevdictScores score_revdict_batch(const VectorBatch& preds, const VectorBatch& targets,
                                  unsigned threads) {
    if (preds.n != targets.n)
        throw Error("score_revdict_batch: batch sizes differ");
    RevdictScores out;
    out.rank = rank_metric(preds, targets, threads);
    for (size_t i = 0; i < preds.n; ++i) {
        auto p = preds.row(i);
        auto t = targets.row(i);
        out.mse.push_back(mse(p, t));
        out.cosine.push_back(cosine(p, t));
        if (norm(p) == 0.0 || norm(t) == 0.0) out.zero_norm_seen = true;
    }
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    out.mean_mse = mean(out.mse);
    out.mean_cosine = mean(out.cosine);
    out.mean_rank = mean(out.rank);
    return out;
}

} // namespace codwoe
