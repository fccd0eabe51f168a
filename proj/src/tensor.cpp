#include "codwoe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "codwoe/error.hpp"

namespace codwoe {

namespace {

std::string shape_str(const TensorImpl& t) {
    return "[" + std::to_string(t.rows()) + "," + std::to_string(t.cols()) + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a->rows() != b->rows() || a->cols() != b->cols())
        throw Error(std::string(op) + ": shape mismatch " + shape_str(*a) + " vs " + shape_str(*b));
}

Tensor node(size_t rows, size_t cols, std::vector<Tensor> parents,
            std::function<void(TensorImpl&)> backward_fn) {
    Tensor t = std::make_shared<TensorImpl>();
    t->n_rows = rows;
    t->n_cols = cols;
    t->value.assign(rows * cols, 0.0);
    t->parents = std::move(parents);
    t->backward_fn = std::move(backward_fn);
    return t;
}

} // namespace

Tensor make_tensor(size_t rows, size_t cols, bool requires_grad) {
    Tensor t = std::make_shared<TensorImpl>();
    t->n_rows = rows;
    t->n_cols = cols;
    t->value.assign(rows * cols, 0.0);
    t->requires_grad = requires_grad;
    return t;
}

Tensor make_tensor(size_t rows, size_t cols, std::vector<double> values, bool requires_grad) {
    if (values.size() != rows * cols)
        throw Error("make_tensor: value count " + std::to_string(values.size()) +
                    " does not match shape [" + std::to_string(rows) + "," +
                    std::to_string(cols) + "]");
    Tensor t = std::make_shared<TensorImpl>();
    t->n_rows = rows;
    t->n_cols = cols;
    t->value = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

Tensor make_row(std::span<const double> values, bool requires_grad) {
    return make_tensor(1, values.size(), std::vector<double>(values.begin(), values.end()),
                       requires_grad);
}

void backward(const Tensor& loss) {
    if (loss->size() != 1) throw Error("backward: loss must be a scalar, got " + shape_str(*loss));

    // Reverse topological order by iterative DFS.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<Tensor, size_t>> stack{{loss, 0}};
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [t, next] = stack.back();
        if (next < t->parents.size()) {
            Tensor p = t->parents[next++];
            if (visited.insert(p.get()).second) stack.push_back({p, 0});
        } else {
            order.push_back(t.get());
            stack.pop_back();
        }
    }

    for (TensorImpl* t : order) {
        if (t->is_leaf()) {
            if (t->grad.size() != t->value.size()) t->grad.assign(t->value.size(), 0.0);
        } else {
            t->grad.assign(t->value.size(), 0.0);
        }
    }
    loss->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a->cols() != b->rows())
        throw Error("matmul: shape mismatch " + shape_str(*a) + " vs " + shape_str(*b));
    const size_t m = a->rows(), k = a->cols(), n = b->cols();
    Tensor out = node(m, n, {a, b}, [a, b, m, k, n](TensorImpl& self) {
        // dA += dC B^T ; dB += A^T dC
        for (size_t i = 0; i < m; ++i) {
            const double* dC = self.grad.data() + i * n;
            double* dA = a->grad.data() + i * k;
            for (size_t kk = 0; kk < k; ++kk) {
                const double* Bk = b->value.data() + kk * n;
                double s = 0.0;
                for (size_t j = 0; j < n; ++j) s += dC[j] * Bk[j];
                dA[kk] += s;
            }
        }
        for (size_t i = 0; i < m; ++i) {
            const double* Ai = a->value.data() + i * k;
            const double* dC = self.grad.data() + i * n;
            for (size_t kk = 0; kk < k; ++kk) {
                double* dB = b->grad.data() + kk * n;
                double aik = Ai[kk];
                for (size_t j = 0; j < n; ++j) dB[j] += aik * dC[j];
            }
        }
    });
    for (size_t i = 0; i < m; ++i) {
        const double* Ai = a->row_ptr(i);
        double* Ci = out->row_ptr(i);
        for (size_t kk = 0; kk < k; ++kk) {
            const double* Bk = b->row_ptr(kk);
            double aik = Ai[kk];
            for (size_t j = 0; j < n; ++j) Ci[j] += aik * Bk[j];
        }
    }
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a->cols() != b->cols())
        throw Error("matmul_nt: shape mismatch " + shape_str(*a) + " vs " + shape_str(*b));
    const size_t m = a->rows(), k = a->cols(), n = b->rows();
    Tensor out = node(m, n, {a, b}, [a, b, m, k, n](TensorImpl& self) {
        // dA += dC B ; dB += dC^T A
        for (size_t i = 0; i < m; ++i) {
            const double* dC = self.grad.data() + i * n;
            double* dA = a->grad.data() + i * k;
            for (size_t j = 0; j < n; ++j) {
                const double* Bj = b->value.data() + j * k;
                double g = dC[j];
                for (size_t kk = 0; kk < k; ++kk) dA[kk] += g * Bj[kk];
            }
        }
        for (size_t i = 0; i < m; ++i) {
            const double* Ai = a->value.data() + i * k;
            const double* dC = self.grad.data() + i * n;
            for (size_t j = 0; j < n; ++j) {
                double* dB = b->grad.data() + j * k;
                double g = dC[j];
                for (size_t kk = 0; kk < k; ++kk) dB[kk] += g * Ai[kk];
            }
        }
    });
    for (size_t i = 0; i < m; ++i) {
        const double* Ai = a->row_ptr(i);
        double* Ci = out->row_ptr(i);
        for (size_t j = 0; j < n; ++j) {
            const double* Bj = b->row_ptr(j);
            double s = 0.0;
            for (size_t kk = 0; kk < k; ++kk) s += Ai[kk] * Bj[kk];
            Ci[j] = s;
        }
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = node(a->rows(), a->cols(), {a, b}, [a, b](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) {
            a->grad[i] += self.grad[i];
            b->grad[i] += self.grad[i];
        }
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] + b->value[i];
    return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
    if (b->rows() != 1 || b->cols() != a->cols())
        throw Error("add_rowvec: shape mismatch " + shape_str(*a) + " vs " + shape_str(*b));
    const size_t m = a->rows(), n = a->cols();
    Tensor out = node(m, n, {a, b}, [a, b, m, n](TensorImpl& self) {
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j) {
                a->grad[i * n + j] += self.grad[i * n + j];
                b->grad[j] += self.grad[i * n + j];
            }
    });
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) out->value[i * n + j] = a->value[i * n + j] + b->value[j];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = node(a->rows(), a->cols(), {a, b}, [a, b](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) {
            a->grad[i] += self.grad[i] * b->value[i];
            b->grad[i] += self.grad[i] * a->value[i];
        }
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] * b->value[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = node(a->rows(), a->cols(), {a}, [a, s](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += s * self.grad[i];
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = s * a->value[i];
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out = node(a->rows(), a->cols(), {a}, [a](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i)
            if (a->value[i] > 0.0) a->grad[i] += self.grad[i];
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = std::max(0.0, a->value[i]);
    return out;
}

Tensor tanh_op(const Tensor& a) {
    Tensor out = node(a->rows(), a->cols(), {a}, [a](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i)
            a->grad[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = std::tanh(a->value[i]);
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out = node(a->rows(), a->cols(), {a}, [a](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i)
            a->grad[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = 1.0 / (1.0 + std::exp(-a->value[i]));
    return out;
}

Tensor softmax_rows(const Tensor& a, bool causal) {
    const size_t m = a->rows(), n = a->cols();
    Tensor out = node(m, n, {a}, [a, m, n, causal](TensorImpl& self) {
        for (size_t r = 0; r < m; ++r) {
            size_t valid = causal ? std::min(n, r + 1) : n;
            const double* y = self.value.data() + r * n;
            const double* dy = self.grad.data() + r * n;
            double s = 0.0;
            for (size_t j = 0; j < valid; ++j) s += dy[j] * y[j];
            double* dx = a->grad.data() + r * n;
            for (size_t j = 0; j < valid; ++j) dx[j] += y[j] * (dy[j] - s);
        }
    });
    for (size_t r = 0; r < m; ++r) {
        size_t valid = causal ? std::min(n, r + 1) : n;
        const double* x = a->row_ptr(r);
        double* y = out->row_ptr(r);
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < valid; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (size_t j = 0; j < valid; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
        }
        for (size_t j = 0; j < valid; ++j) y[j] /= z;
        for (size_t j = valid; j < n; ++j) y[j] = 0.0;
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const size_t m = x->rows(), n = x->cols();
    if (gamma->rows() != 1 || gamma->cols() != n || beta->rows() != 1 || beta->cols() != n)
        throw Error("layer_norm: affine shapes " + shape_str(*gamma) + "/" + shape_str(*beta) +
                    " do not match input " + shape_str(*x));

    // Saved normalized activations and inverse stds for the backward pass.
    auto xhat = std::make_shared<std::vector<double>>(m * n);
    auto inv_std = std::make_shared<std::vector<double>>(m);

    Tensor out = node(m, n, {x, gamma, beta}, [x, gamma, beta, xhat, inv_std, m, n](TensorImpl& self) {
        for (size_t r = 0; r < m; ++r) {
            const double* dy = self.grad.data() + r * n;
            const double* xh = xhat->data() + r * n;
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (size_t j = 0; j < n; ++j) {
                double dxh = dy[j] * gamma->value[j];
                mean_dxhat += dxh;
                mean_dxhat_xhat += dxh * xh[j];
                gamma->grad[j] += dy[j] * xh[j];
                beta->grad[j] += dy[j];
            }
            mean_dxhat /= static_cast<double>(n);
            mean_dxhat_xhat /= static_cast<double>(n);
            double* dx = x->grad.data() + r * n;
            double istd = (*inv_std)[r];
            for (size_t j = 0; j < n; ++j) {
                double dxh = dy[j] * gamma->value[j];
                dx[j] += istd * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
            }
        }
    });
    for (size_t r = 0; r < m; ++r) {
        const double* xr = x->row_ptr(r);
        double mean = 0.0;
        for (size_t j = 0; j < n; ++j) mean += xr[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(n);
        double istd = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = istd;
        double* y = out->row_ptr(r);
        double* xh = xhat->data() + r * n;
        for (size_t j = 0; j < n; ++j) {
            xh[j] = (xr[j] - mean) * istd;
            y[j] = gamma->value[j] * xh[j] + beta->value[j];
        }
    }
    return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
    const size_t n = table->cols();
    for (int id : ids)
        if (id < 0 || static_cast<size_t>(id) >= table->rows())
            throw Error("embedding_lookup: id " + std::to_string(id) + " out of range [0," +
                        std::to_string(table->rows()) + ")");
    Tensor out = node(ids.size(), n, {table}, [table, ids, n](TensorImpl& self) {
        for (size_t r = 0; r < ids.size(); ++r) {
            double* dT = table->grad.data() + static_cast<size_t>(ids[r]) * n;
            const double* dy = self.grad.data() + r * n;
            for (size_t j = 0; j < n; ++j) dT[j] += dy[j];
        }
    });
    for (size_t r = 0; r < ids.size(); ++r) {
        const double* src = table->row_ptr(static_cast<size_t>(ids[r]));
        std::copy(src, src + n, out->row_ptr(r));
    }
    return out;
}

Tensor sum_rows(const Tensor& a) {
    const size_t m = a->rows(), n = a->cols();
    Tensor out = node(1, n, {a}, [a, m, n](TensorImpl& self) {
        for (size_t r = 0; r < m; ++r)
            for (size_t j = 0; j < n; ++j) a->grad[r * n + j] += self.grad[j];
    });
    for (size_t r = 0; r < m; ++r)
        for (size_t j = 0; j < n; ++j) out->value[j] += a->value[r * n + j];
    return out;
}

Tensor slice_cols(const Tensor& a, size_t c0, size_t c1) {
    if (c0 >= c1 || c1 > a->cols())
        throw Error("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                    ") invalid for " + shape_str(*a));
    const size_t m = a->rows(), n = a->cols(), w = c1 - c0;
    Tensor out = node(m, w, {a}, [a, c0, m, n, w](TensorImpl& self) {
        for (size_t r = 0; r < m; ++r)
            for (size_t j = 0; j < w; ++j) a->grad[r * n + c0 + j] += self.grad[r * w + j];
    });
    for (size_t r = 0; r < m; ++r)
        for (size_t j = 0; j < w; ++j) out->value[r * w + j] = a->value[r * n + c0 + j];
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw Error("concat_cols: no parts");
    const size_t m = parts[0]->rows();
    size_t n = 0;
    for (const auto& p : parts) {
        if (p->rows() != m) throw Error("concat_cols: row mismatch");
        n += p->cols();
    }
    Tensor out = node(m, n, parts, [parts, m, n](TensorImpl& self) {
        size_t off = 0;
        for (const auto& p : parts) {
            size_t w = p->cols();
            for (size_t r = 0; r < m; ++r)
                for (size_t j = 0; j < w; ++j) p->grad[r * w + j] += self.grad[r * n + off + j];
            off += w;
        }
    });
    size_t off = 0;
    for (const auto& p : parts) {
        size_t w = p->cols();
        for (size_t r = 0; r < m; ++r)
            for (size_t j = 0; j < w; ++j) out->value[r * n + off + j] = p->value[r * w + j];
        off += w;
    }
    return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw Error("concat_rows: no parts");
    const size_t n = parts[0]->cols();
    size_t m = 0;
    for (const auto& p : parts) {
        if (p->cols() != n) throw Error("concat_rows: column mismatch");
        m += p->rows();
    }
    Tensor out = node(m, n, parts, [parts, n](TensorImpl& self) {
        size_t off = 0;
        for (const auto& p : parts) {
            for (size_t i = 0; i < p->size(); ++i) p->grad[i] += self.grad[off + i];
            off += p->size();
        }
    });
    size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.begin(), p->value.end(), out->value.begin() + static_cast<long>(off));
        off += p->size();
    }
    return out;
}

Tensor dropout(const Tensor& a, double rate, SplitMix64& rng) {
    if (rate <= 0.0) return a;
    if (rate >= 1.0) throw Error("dropout: rate must be < 1");
    auto mask = std::make_shared<std::vector<double>>(a->size());
    const double keep = 1.0 - rate;
    for (double& m : *mask) m = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
    Tensor out = node(a->rows(), a->cols(), {a}, [a, mask](TensorImpl& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * (*mask)[i];
    });
    for (size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] * (*mask)[i];
    return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     double label_smoothing) {
    const size_t m = logits->rows(), v = logits->cols();
    if (targets.size() != m)
        throw Error("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                    shape_str(*logits) + " logits");
    for (int t : targets)
        if (t < 0 || static_cast<size_t>(t) >= v)
            throw Error("cross_entropy: target id " + std::to_string(t) + " out of range [0," +
                        std::to_string(v) + ")");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
        throw Error("cross_entropy: label smoothing must be in [0,1)");

    auto probs = std::make_shared<std::vector<double>>(m * v);
    Tensor out =
        node(1, 1, {logits}, [logits, targets, probs, label_smoothing, m, v](TensorImpl& self) {
            const double g = self.grad[0] / static_cast<double>(m);
            const double uniform = label_smoothing / static_cast<double>(v);
            for (size_t r = 0; r < m; ++r) {
                const double* p = probs->data() + r * v;
                double* dl = logits->grad.data() + r * v;
                for (size_t j = 0; j < v; ++j) {
                    double q = uniform +
                               (static_cast<size_t>(targets[r]) == j ? 1.0 - label_smoothing : 0.0);
                    dl[j] += g * (p[j] - q);
                }
            }
        });
    double total = 0.0;
    const double uniform = label_smoothing / static_cast<double>(v);
    for (size_t r = 0; r < m; ++r) {
        const double* x = logits->row_ptr(r);
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < v; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (size_t j = 0; j < v; ++j) z += std::exp(x[j] - mx);
        double logz = mx + std::log(z);
        double* p = probs->data() + r * v;
        double row_loss = 0.0;
        for (size_t j = 0; j < v; ++j) {
            double logp = x[j] - logz;
            p[j] = std::exp(logp);
            double q = uniform + (static_cast<size_t>(targets[r]) == j ? 1.0 - label_smoothing : 0.0);
            row_loss -= q * logp;
        }
        total += row_loss;
    }
    out->value[0] = total / static_cast<double>(m);
    return out;
}

Tensor mse_loss(const Tensor& pred, std::span<const double> target) {
    if (pred->size() != target.size())
        throw Error("mse_loss: prediction " + shape_str(*pred) + " vs target of " +
                    std::to_string(target.size()) + " values");
    auto tgt = std::make_shared<std::vector<double>>(target.begin(), target.end());
    const double inv = 1.0 / static_cast<double>(pred->size());
    Tensor out = node(1, 1, {pred}, [pred, tgt, inv](TensorImpl& self) {
        for (size_t i = 0; i < pred->size(); ++i)
            pred->grad[i] += self.grad[0] * 2.0 * (pred->value[i] - (*tgt)[i]) * inv;
    });
    double s = 0.0;
    for (size_t i = 0; i < pred->size(); ++i) {
        double d = pred->value[i] - (*tgt)[i];
        s += d * d;
    }
    out->value[0] = s * inv;
    return out;
}

Tensor sinusoidal_encoding(size_t len, size_t dim) {
    Tensor pe = make_tensor(len, dim);
    for (size_t t = 0; t < len; ++t)
        for (size_t j = 0; j < dim; ++j) {
            double angle = static_cast<double>(t) /
                           std::pow(10000.0, static_cast<double>(2 * (j / 2)) / static_cast<double>(dim));
            pe->at(t, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

} // namespace codwoe
