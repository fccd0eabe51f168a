#pragma once

#include <string>
#include <utility>
#include <vector>

#include "codwoe/tensor.hpp"

namespace codwoe {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

struct LinearParams {
    Tensor weight; // [in, out]
    Tensor bias;   // [1, out]; null when the layer has no bias
};

// Xavier-uniform weight, zero bias.
LinearParams make_linear(size_t in, size_t out, bool bias, SplitMix64& rng);
Tensor linear(const LinearParams& p, const Tensor& x);

struct LayerNormParams {
    Tensor gamma; // [1, n], ones
    Tensor beta;  // [1, n], zeros
};
LayerNormParams make_layer_norm(size_t n);

// Per-step attention matrices, exposed for inspection in tests.
struct AttentionTrace {
    std::vector<Tensor> head_weights; // each [T, T]
};

// Scaled dot-product multi-head self-attention over one sequence [T, d].
// heads must divide d.
Tensor multi_head_attention(const Tensor& x, const LinearParams& wq, const LinearParams& wk,
                            const LinearParams& wv, const LinearParams& wo, size_t heads,
                            bool causal, AttentionTrace* trace = nullptr);

// Post-norm Transformer encoder layer: x -> LN(x + drop(MHSA(x))) ->
// LN(. + drop(FF(.))). Dropout sits after each sublayer, before the
// residual addition; rng == nullptr disables it (inference).
struct EncoderLayerParams {
    LinearParams wq, wk, wv, wo;
    LinearParams ff1, ff2;
    LayerNormParams ln1, ln2;
    size_t heads = 1;
};
EncoderLayerParams make_encoder_layer(size_t d_model, size_t heads, size_t d_ff, SplitMix64& rng);
Tensor encoder_layer(const EncoderLayerParams& p, const Tensor& x, bool causal,
                     double dropout_rate, SplitMix64* rng, AttentionTrace* trace = nullptr);

void collect_params(NamedParams& out, const std::string& prefix, const LinearParams& p);
void collect_params(NamedParams& out, const std::string& prefix, const LayerNormParams& p);
void collect_params(NamedParams& out, const std::string& prefix, const EncoderLayerParams& p);

// Single LSTM step over a batch: x [B, in], h/c [B, H]. Gate layout i,f,g,o.
struct LstmParams {
    Tensor w_ih; // [in, 4H]
    Tensor w_hh; // [H, 4H]
    Tensor bias; // [1, 4H]
    size_t hidden = 0;
};
LstmParams make_lstm(size_t in, size_t hidden, SplitMix64& rng);
struct LstmState {
    Tensor h;
    Tensor c;
};
LstmState lstm_cell(const LstmParams& p, const Tensor& x, const LstmState& state);
void collect_params(NamedParams& out, const std::string& prefix, const LstmParams& p);

} // namespace codwoe
