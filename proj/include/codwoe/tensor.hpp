#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "codwoe/prng.hpp"

namespace codwoe {

// Reverse-mode autodiff over 2D double tensors. Graphs are rebuilt every
// forward pass; backward() walks the graph once in reverse topological
// order. Everything is double precision and single-threaded, which keeps
// training runs bit-reproducible for a fixed seed.
class TensorImpl;
using Tensor = std::shared_ptr<TensorImpl>;

class TensorImpl {
public:
    size_t n_rows = 0;
    size_t n_cols = 0;
    std::vector<double> value;
    std::vector<double> grad; // allocated lazily; persists on leaves for accumulation
    bool requires_grad = false;

    std::vector<Tensor> parents;
    std::function<void(TensorImpl&)> backward_fn; // reads this->grad, accumulates into parents

    size_t rows() const { return n_rows; }
    size_t cols() const { return n_cols; }
    size_t size() const { return value.size(); }
    bool is_leaf() const { return !backward_fn; }

    double* row_ptr(size_t r) { return value.data() + r * n_cols; }
    const double* row_ptr(size_t r) const { return value.data() + r * n_cols; }
    double& at(size_t r, size_t c) { return value[r * n_cols + c]; }
    double at(size_t r, size_t c) const { return value[r * n_cols + c]; }
};

Tensor make_tensor(size_t rows, size_t cols, bool requires_grad = false);
Tensor make_tensor(size_t rows, size_t cols, std::vector<double> values,
                   bool requires_grad = false);
Tensor make_row(std::span<const double> values, bool requires_grad = false);

// Backpropagates from a scalar loss ([1,1]) through the graph. Gradients of
// interior nodes are freshly zeroed; leaf gradients accumulate until
// explicitly cleared (gradient accumulation across micro-batches).
void backward(const Tensor& loss);

// C = A B
Tensor matmul(const Tensor& a, const Tensor& b);
// C = A B^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// [m,n] + broadcast [1,n]
Tensor add_rowvec(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Row-wise softmax. With causal = true, row r only attends to columns <= r;
// masked entries are exactly zero.
Tensor softmax_rows(const Tensor& a, bool causal = false);

// Row-wise layer normalization with affine gamma/beta ([1,n]).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-8);

// Rows of `table` gathered by id; backward scatter-adds.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

Tensor sum_rows(const Tensor& a);                         // [m,n] -> [1,n]
Tensor slice_cols(const Tensor& a, size_t c0, size_t c1); // [m, c1-c0]
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);

// Inverted dropout drawing its mask from the pinned stream; rate 0 is the
// identity.
Tensor dropout(const Tensor& a, double rate, SplitMix64& rng);

// Mean over rows of the label-smoothed cross entropy of row-wise softmax
// distributions: q = smoothing/V + (1-smoothing) * onehot(target).
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     double label_smoothing = 0.0);

// Mean over elements of the squared difference against a constant target.
Tensor mse_loss(const Tensor& pred, std::span<const double> target);

// Constant [len,dim] sinusoidal position encoding.
Tensor sinusoidal_encoding(size_t len, size_t dim);

} // namespace codwoe
