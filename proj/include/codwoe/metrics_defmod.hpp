#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace codwoe {

struct BleuConfig {
    int max_order = 4;
    bool brevity_penalty = true;
};

// Scoring tokenization: Unicode-whitespace split, case preserved.
std::vector<std::string> tokenize_gloss(const std::string& gloss);

// BLEU against a single reference, with short-reference smoothing: every
// order k with #ref < k <= max_order uses the pseudocount min(1, 1/ln #ref)
// over max(1, hypothesis k-gram count). #ref = 1 clamps the pseudocount to 1.
double sense_bleu(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                  const BleuConfig& cfg = {});

// Max sense_bleu over the glosses sharing the hypothesis item's definiendum.
double lemma_bleu(const std::vector<std::string>& hyp,
                  const std::vector<std::vector<std::string>>& refs, const BleuConfig& cfg = {});

// Earth-mover similarity over idf-weighted unigram distributions with cost
// 1 - cos between token embeddings. Sides of at most `exact_size_cap` unique
// tokens go through the exact solver; larger sides use entropic Sinkhorn.
struct MoverConfig {
    std::unordered_map<std::string, std::vector<double>> embeddings;
    std::unordered_map<std::string, double> idf; // missing tokens weigh 1
    double epsilon = 0.01;
    enum class OovPolicy { Drop, Strict } oov_policy = OovPolicy::Drop;
    size_t exact_size_cap = 8;
    size_t sinkhorn_max_iter = 20000;
    double sinkhorn_tol = 1e-9;
};

struct MoverResult {
    double score = 0.0;
    bool used_sinkhorn = false;
    bool converged = true;
    double marginal_violation = 0.0; // Sinkhorn feasibility gap at termination
};

MoverResult mover_sim(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                      const MoverConfig& cfg);

} // namespace codwoe
