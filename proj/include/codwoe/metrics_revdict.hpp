#pragma once

#include <span>
#include <vector>

namespace codwoe {

// n x dim row-major batch of prediction or target vectors.
struct VectorBatch {
    size_t n = 0;
    size_t dim = 0;
    std::vector<double> data;

    std::span<const double> row(size_t i) const { return {data.data() + i * dim, dim}; }
    void push_row(std::span<const double> v);
};

double mse(std::span<const double> p, std::span<const double> t);

// dot(p,t) / (|p||t|); 0 when either norm is 0 so scoring never aborts on a
// legal zero-vector prediction.
double cosine(std::span<const double> p, std::span<const double> t);

// Eq-style ranking measure: rank_i = |{ j : cos(p_i,t_j) > cos(p_i,t_i) }| / n,
// j over the whole target batch including i, strict inequality. Row-blocked
// over `threads`; counts are exact so threading cannot change the result.
std::vector<double> rank_metric(const VectorBatch& preds, const VectorBatch& targets,
                                unsigned threads = 1);

struct RevdictScores {
    std::vector<double> mse;
    std::vector<double> cosine;
    std::vector<double> rank;
    double mean_mse = 0.0;
    double mean_cosine = 0.0;
    double mean_rank = 0.0;
    bool zero_norm_seen = false; // some vector had norm 0; cosine fell back to 0
};

RevdictScores score_revdict_batch(const VectorBatch& preds, const VectorBatch& targets,
                                  unsigned threads = 1);

} // namespace codwoe
