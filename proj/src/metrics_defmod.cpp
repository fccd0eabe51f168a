#include "codwoe/metrics_defmod.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "codwoe/error.hpp"
#include "codwoe/ot.hpp"
#include "codwoe/text.hpp"

namespace codwoe {

std::vector<std::string> tokenize_gloss(const std::string& gloss) { return split_words(gloss); }

namespace {

constexpr char kSep = '\x1F';

std::map<std::string, long long> ngram_counts(const std::vector<std::string>& tokens, int order) {
    std::map<std::string, long long> counts;
    if (static_cast<int>(tokens.size()) < order) return counts;
    for (size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < order; ++k) {
            key += kSep;
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

} // namespace

double sense_bleu(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                  const BleuConfig& cfg) {
    if (ref.empty()) throw Error("sense_bleu: empty reference");
    if (cfg.max_order < 1) throw Error("sense_bleu: max_order must be >= 1");
    const auto c = static_cast<long long>(hyp.size()); // hypothesis length
    const auto r = static_cast<long long>(ref.size()); // reference length #d
    if (c == 0) return 0.0;

    double log_sum = 0.0;
    for (int order = 1; order <= cfg.max_order; ++order) {
        long long hyp_ngrams = std::max<long long>(0, c - order + 1);
        if (r >= order) {
            if (hyp_ngrams == 0) return 0.0;
            auto hc = ngram_counts(hyp, order);
            auto rc = ngram_counts(ref, order);
            long long matched = 0;
            for (const auto& [g, cnt] : hc) {
                auto it = rc.find(g);
                if (it != rc.end()) matched += std::min(cnt, it->second);
            }
            if (matched == 0) return 0.0;
            log_sum += std::log(static_cast<double>(matched) / static_cast<double>(hyp_ngrams));
        } else {
            // Short reference: #d < order <= max_order.
            double pseudo = r >= 2 ? std::min(1.0, 1.0 / std::log(static_cast<double>(r))) : 1.0;
            double denom = static_cast<double>(std::max<long long>(1, hyp_ngrams));
            log_sum += std::log(pseudo / denom);
        }
    }
    double score = std::exp(log_sum / cfg.max_order);
    if (cfg.brevity_penalty && c < r)
        score *= std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
    return score;
}

double lemma_bleu(const std::vector<std::string>& hyp,
                  const std::vector<std::vector<std::string>>& refs, const BleuConfig& cfg) {
    if (refs.empty()) throw Error("lemma_bleu: empty reference group");
    double best = 0.0;
    bool first = true;
    for (const auto& ref : refs) {
        double s = sense_bleu(hyp, ref, cfg);
        if (first || s > best) best = s;
        first = false;
    }
    return best;
}

namespace {

struct Bag {
    std::vector<const std::vector<double>*> embeddings;
    std::vector<double> masses; // normalized to sum 1
};

Bag build_bag(const std::vector<std::string>& tokens, const MoverConfig& cfg, const char* side) {
    if (tokens.empty()) throw Error(std::string("mover_sim: empty ") + side + " token list");
    std::map<std::string, long long> counts;
    for (const auto& t : tokens) ++counts[t];

    Bag bag;
    double total = 0.0;
    size_t dim = 0;
    for (const auto& [tok, cnt] : counts) {
        auto emb = cfg.embeddings.find(tok);
        if (emb == cfg.embeddings.end()) {
            if (cfg.oov_policy == MoverConfig::OovPolicy::Strict)
                throw Error("mover_sim: token \"" + tok + "\" not in embedding table (strict oov policy)");
            continue; // drop and renormalize
        }
        if (dim == 0)
            dim = emb->second.size();
        else if (emb->second.size() != dim)
            throw Error("mover_sim: embedding dimension mismatch for token \"" + tok + "\"");
        auto idf = cfg.idf.find(tok);
        double w = static_cast<double>(cnt) * (idf == cfg.idf.end() ? 1.0 : idf->second);
        if (w < 0.0) throw Error("mover_sim: negative idf weight for token \"" + tok + "\"");
        if (w == 0.0) continue;
        bag.embeddings.push_back(&emb->second);
        bag.masses.push_back(w);
        total += w;
    }
    if (bag.masses.empty() || total <= 0.0)
        throw Error(std::string("mover_sim: all ") + side + " tokens out of vocabulary");
    for (double& w : bag.masses) w /= total;
    return bag;
}

double cos_vec(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

MoverResult mover_sim(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                      const MoverConfig& cfg) {
    Bag h = build_bag(hyp, cfg, "hypothesis");
    Bag r = build_bag(ref, cfg, "reference");

    TransportProblem prob;
    prob.a = h.masses;
    prob.b = r.masses;
    prob.cost.resize(h.masses.size() * r.masses.size());
    for (size_t i = 0; i < h.masses.size(); ++i)
        for (size_t j = 0; j < r.masses.size(); ++j) {
            double c = 1.0 - cos_vec(*h.embeddings[i], *r.embeddings[j]);
            prob.cost[i * r.masses.size() + j] = std::max(0.0, c);
        }

    MoverResult out;
    if (h.masses.size() <= cfg.exact_size_cap && r.masses.size() <= cfg.exact_size_cap) {
        TransportPlan plan = solve_exact(prob);
        out.score = 1.0 - plan.cost;
    } else {
        TransportPlan plan =
            solve_sinkhorn(prob, cfg.epsilon, cfg.sinkhorn_max_iter, cfg.sinkhorn_tol);
        out.used_sinkhorn = true;
        out.converged = plan.converged;
        out.marginal_violation = plan.marginal_violation;
        out.score = 1.0 - plan.cost;
    }
    return out;
}

} // namespace codwoe
