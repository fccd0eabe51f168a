#include "codwoe/layers.hpp"

#include <cmath>

#include "codwoe/error.hpp"

namespace codwoe {

LinearParams make_linear(size_t in, size_t out, bool bias, SplitMix64& rng) {
    LinearParams p;
    double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    p.weight = make_tensor(in, out, true);
    for (double& w : p.weight->value) w = rng.uniform(-bound, bound);
    if (bias) p.bias = make_tensor(1, out, true);
    return p;
}

Tensor linear(const LinearParams& p, const Tensor& x) {
    Tensor y = matmul(x, p.weight);
    return p.bias ? add_rowvec(y, p.bias) : y;
}

LayerNormParams make_layer_norm(size_t n) {
    LayerNormParams p;
    p.gamma = make_tensor(1, n, std::vector<double>(n, 1.0), true);
    p.beta = make_tensor(1, n, true);
    return p;
}

Tensor multi_head_attention(const Tensor& x, const LinearParams& wq, const LinearParams& wk,
                            const LinearParams& wv, const LinearParams& wo, size_t heads,
                            bool causal, AttentionTrace* trace) {
    const size_t d = x->cols();
    if (heads == 0 || d % heads != 0)
        throw Error("attention: heads (" + std::to_string(heads) + ") must divide d_model (" +
                    std::to_string(d) + ")");
    const size_t dh = d / heads;
    Tensor q = linear(wq, x);
    Tensor k = linear(wk, x);
    Tensor v = linear(wv, x);

    std::vector<Tensor> outputs;
    outputs.reserve(heads);
    for (size_t h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        Tensor scores = scale(matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
        Tensor weights = softmax_rows(scores, causal);
        if (trace) trace->head_weights.push_back(weights);
        outputs.push_back(matmul(weights, vh));
    }
    return linear(wo, concat_cols(outputs));
}

EncoderLayerParams make_encoder_layer(size_t d_model, size_t heads, size_t d_ff, SplitMix64& rng) {
    EncoderLayerParams p;
    p.wq = make_linear(d_model, d_model, true, rng);
    p.wk = make_linear(d_model, d_model, true, rng);
    p.wv = make_linear(d_model, d_model, true, rng);
    p.wo = make_linear(d_model, d_model, true, rng);
    p.ff1 = make_linear(d_model, d_ff, true, rng);
    p.ff2 = make_linear(d_ff, d_model, true, rng);
    p.ln1 = make_layer_norm(d_model);
    p.ln2 = make_layer_norm(d_model);
    p.heads = heads;
    return p;
}

Tensor encoder_layer(const EncoderLayerParams& p, const Tensor& x, bool causal,
                     double dropout_rate, SplitMix64* rng, AttentionTrace* trace) {
    Tensor attn = multi_head_attention(x, p.wq, p.wk, p.wv, p.wo, p.heads, causal, trace);
    if (rng && dropout_rate > 0.0) attn = dropout(attn, dropout_rate, *rng);
    Tensor h = layer_norm(add(x, attn), p.ln1.gamma, p.ln1.beta);
    Tensor ff = linear(p.ff2, relu(linear(p.ff1, h)));
    if (rng && dropout_rate > 0.0) ff = dropout(ff, dropout_rate, *rng);
    return layer_norm(add(h, ff), p.ln2.gamma, p.ln2.beta);
}

void collect_params(NamedParams& out, const std::string& prefix, const LinearParams& p) {
    out.emplace_back(prefix + ".weight", p.weight);
    if (p.bias) out.emplace_back(prefix + ".bias", p.bias);
}

void collect_params(NamedParams& out, const std::string& prefix, const LayerNormParams& p) {
    out.emplace_back(prefix + ".gamma", p.gamma);
    out.emplace_back(prefix + ".beta", p.beta);
}

void collect_params(NamedParams& out, const std::string& prefix, const EncoderLayerParams& p) {
    collect_params(out, prefix + ".wq", p.wq);
    collect_params(out, prefix + ".wk", p.wk);
    collect_params(out, prefix + ".wv", p.wv);
    collect_params(out, prefix + ".wo", p.wo);
    collect_params(out, prefix + ".ff1", p.ff1);
    collect_params(out, prefix + ".ff2", p.ff2);
    collect_params(out, prefix + ".ln1", p.ln1);
    collect_params(out, prefix + ".ln2", p.ln2);
}

LstmParams make_lstm(size_t in, size_t hidden, SplitMix64& rng) {
    LstmParams p;
    p.hidden = hidden;
    double bound = std::sqrt(6.0 / static_cast<double>(in + 4 * hidden));
    p.w_ih = make_tensor(in, 4 * hidden, true);
    for (double& w : p.w_ih->value) w = rng.uniform(-bound, bound);
    bound = std::sqrt(6.0 / static_cast<double>(hidden + 4 * hidden));
    p.w_hh = make_tensor(hidden, 4 * hidden, true);
    for (double& w : p.w_hh->value) w = rng.uniform(-bound, bound);
    p.bias = make_tensor(1, 4 * hidden, true);
    // Forget-gate bias starts at 1 so early training does not wash out state.
    for (size_t j = hidden; j < 2 * hidden; ++j) p.bias->value[j] = 1.0;
    return p;
}

LstmState lstm_cell(const LstmParams& p, const Tensor& x, const LstmState& state) {
    const size_t H = p.hidden;
    Tensor gates = add_rowvec(add(matmul(x, p.w_ih), matmul(state.h, p.w_hh)), p.bias);
    Tensor gi = sigmoid(slice_cols(gates, 0, H));
    Tensor gf = sigmoid(slice_cols(gates, H, 2 * H));
    Tensor gg = tanh_op(slice_cols(gates, 2 * H, 3 * H));
    Tensor go = sigmoid(slice_cols(gates, 3 * H, 4 * H));
    Tensor c = add(mul(gf, state.c), mul(gi, gg));
    Tensor h = mul(go, tanh_op(c));
    return {h, c};
}

void collect_params(NamedParams& out, const std::string& prefix, const LstmParams& p) {
    out.emplace_back(prefix + ".w_ih", p.w_ih);
    out.emplace_back(prefix + ".w_hh", p.w_hh);
    out.emplace_back(prefix + ".bias", p.bias);
}

} // namespace codwoe
