#include "hrq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hrq/error.hpp"

namespace hrq::ad {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) {
        n *= s;
    }
    return n;
}

void require_matrix(const TensorPtr& t, const char* what) {
    if (t->shape.size() != 2) {
        throw ShapeError(std::string(what) + " must be rank 2");
    }
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* what) {
    if (a->shape != b->shape) {
        throw ShapeError(std::string(what) + ": shape mismatch");
    }
}

// C += A * B, A:[n,m] B:[m,p]
void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
              std::size_t p) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * m;
        double* crow = c + i * p;
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) {
                continue;
            }
            const double* brow = b + k * p;
            for (std::size_t j = 0; j < p; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
}

// C += A^T * B, A:[n,m] B:[n,p], C:[m,p]
void gemm_at_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
                 std::size_t p) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * m;
        const double* brow = b + i * p;
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) {
                continue;
            }
            double* crow = c + k * p;
            for (std::size_t j = 0; j < p; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
}

// C += A * B^T, A:[n,m] B:[p,m], C:[n,p]
void gemm_bt_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
                 std::size_t p) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * m;
        double* crow = c + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            const double* brow = b + j * m;
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                s += arow[k] * brow[k];
            }
            crow[j] += s;
        }
    }
}

} // namespace

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> data,
                      bool requires_grad) {
    if (shape_size(shape) != data.size()) {
        throw ShapeError("data length does not match shape");
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(data);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = shape_size(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    std::size_t n = shape_size(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

TensorPtr randn(std::vector<std::size_t> shape, double sigma, RngStream& rng,
                bool requires_grad) {
    std::size_t n = shape_size(shape);
    std::vector<double> data(n);
    for (double& v : data) {
        v = sigma * rng.normal();
    }
    return make_tensor(std::move(shape), std::move(data), requires_grad);
}

TensorPtr Tape::emit(std::vector<std::size_t> shape, bool requires_grad) {
    auto t = zeros(std::move(shape), false);
    t->requires_grad = requires_grad;
    return t;
}

void Tape::record(TensorPtr out, std::function<void()> backprop) {
    nodes_.push_back({std::move(out), std::move(backprop)});
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
    require_matrix(a, "matmul lhs");
    require_matrix(b, "matmul rhs");
    if (a->shape[1] != b->shape[0]) {
        throw ShapeError("matmul: inner dimensions disagree");
    }
    const std::size_t n = a->shape[0], m = a->shape[1], p = b->shape[1];
    auto out = emit({n, p}, a->requires_grad || b->requires_grad);
    gemm_acc(a->data.data(), b->data.data(), out->data.data(), n, m, p);
    record(out, [a, b, out, n, m, p] {
        if (a->requires_grad) {
            a->ensure_grad();
            gemm_bt_acc(out->grad.data(), b->data.data(), a->grad.data(), n, p, m);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            gemm_at_acc(a->data.data(), out->grad.data(), b->grad.data(), n, m, p);
        }
    });
    return out;
}

TensorPtr Tape::linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    auto y = matmul(x, w);
    return add_rowvec(y, b);
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    auto out = emit(a->shape, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] + b->data[i];
    }
    record(out, [a, b, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                a->grad[i] += out->grad[i];
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                b->grad[i] += out->grad[i];
            }
        }
    });
    return out;
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    auto out = emit(a->shape, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] - b->data[i];
    }
    record(out, [a, b, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                a->grad[i] += out->grad[i];
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                b->grad[i] -= out->grad[i];
            }
        }
    });
    return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    auto out = emit(a->shape, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] * b->data[i];
    }
    record(out, [a, b, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                a->grad[i] += out->grad[i] * b->data[i];
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                b->grad[i] += out->grad[i] * a->data[i];
            }
        }
    });
    return out;
}

TensorPtr Tape::scale(const TensorPtr& a, double c) {
    auto out = emit(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = c * a->data[i];
    }
    record(out, [a, out, c] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                a->grad[i] += c * out->grad[i];
            }
        }
    });
    return out;
}

TensorPtr Tape::add_rowvec(const TensorPtr& a, const TensorPtr& v) {
    require_matrix(a, "add_rowvec input");
    const std::size_t n = a->shape[0], m = a->shape[1];
    if (v->size() != m) {
        throw ShapeError("add_rowvec: vector length does not match columns");
    }
    auto out = emit(a->shape, a->requires_grad || v->requires_grad);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out->data[i * m + j] = a->data[i * m + j] + v->data[j];
        }
    }
    record(out, [a, v, out, n, m] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n * m; ++i) {
                a->grad[i] += out->grad[i];
            }
        }
        if (v->requires_grad) {
            v->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    v->grad[j] += out->grad[i * m + j];
                }
            }
        }
    });
    return out;
}

TensorPtr Tape::mul_colvec(const TensorPtr& a, const TensorPtr& c) {
    require_matrix(a, "mul_colvec input");
    const std::size_t n = a->shape[0], m = a->shape[1];
    if (c->size() != n) {
        throw ShapeError("mul_colvec: vector length does not match rows");
    }
    auto out = emit(a->shape, a->requires_grad || c->requires_grad);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out->data[i * m + j] = a->data[i * m + j] * c->data[i];
        }
    }
    record(out, [a, c, out, n, m] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    a->grad[i * m + j] += out->grad[i * m + j] * c->data[i];
                }
            }
        }
        if (c->requires_grad) {
            c->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    s += out->grad[i * m + j] * a->data[i * m + j];
                }
                c->grad[i] += s;
            }
        }
    });
    return out;
}

TensorPtr Tape::tanh(const TensorPtr& a) {
    auto out = emit(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = std::tanh(a->data[i]);
    }
    record(out, [a, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                a->grad[i] += out->grad[i] * (1.0 - out->data[i] * out->data[i]);
            }
        }
    });
    return out;
}

TensorPtr Tape::exp(const TensorPtr& a) {
    auto out = emit(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = std::exp(a->data[i]);
    }
    record(out, [a, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->size(); ++i) {
                a->grad[i] += out->grad[i] * out->data[i];
            }
        }
    });
    return out;
}

TensorPtr Tape::softmax_rows(const TensorPtr& a) {
    require_matrix(a, "softmax_rows input");
    const std::size_t n = a->shape[0], m = a->shape[1];
    auto out = emit(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = a->data.data() + i * m;
        double* orow = out->data.data() + i * m;
        const double mx = *std::max_element(row, row + m);
        double denom = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            orow[j] = std::exp(row[j] - mx);
            denom += orow[j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            orow[j] /= denom;
        }
    }
    record(out, [a, out, n, m] {
        if (!a->requires_grad) {
            return;
        }
        a->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double* w = out->data.data() + i * m;
            const double* u = out->grad.data() + i * m;
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                dot += u[j] * w[j];
            }
            double* g = a->grad.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) {
                g[j] += w[j] * (u[j] - dot);
            }
        }
    });
    return out;
}

TensorPtr Tape::concat_cols(const TensorPtr& a, const TensorPtr& b) {
    require_matrix(a, "concat_cols lhs");
    require_matrix(b, "concat_cols rhs");
    if (a->shape[0] != b->shape[0]) {
        throw ShapeError("concat_cols: row counts disagree");
    }
    const std::size_t n = a->shape[0], ma = a->shape[1], mb = b->shape[1];
    auto out = emit({n, ma + mb}, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(a->data.data() + i * ma, ma, out->data.data() + i * (ma + mb));
        std::copy_n(b->data.data() + i * mb, mb, out->data.data() + i * (ma + mb) + ma);
    }
    record(out, [a, b, out, n, ma, mb] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < ma; ++j) {
                    a->grad[i * ma + j] += out->grad[i * (ma + mb) + j];
                }
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < mb; ++j) {
                    b->grad[i * mb + j] += out->grad[i * (ma + mb) + ma + j];
                }
            }
        }
    });
    return out;
}

TensorPtr Tape::gather_rows(const TensorPtr& m, const std::vector<int>& indices) {
    require_matrix(m, "gather_rows input");
    const std::size_t rows = m->shape[0], width = m->shape[1];
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= rows) {
            throw IndexError("gather_rows: index " + std::to_string(idx) + " out of range");
        }
    }
    auto out = emit({indices.size(), width}, m->requires_grad);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::copy_n(m->data.data() + static_cast<std::size_t>(indices[i]) * width, width,
                    out->data.data() + i * width);
    }
    record(out, [m, out, indices, width] {
        if (!m->requires_grad) {
            return;
        }
        m->ensure_grad();
        for (std::size_t i = 0; i < indices.size(); ++i) {
            double* dst = m->grad.data() + static_cast<std::size_t>(indices[i]) * width;
            const double* src = out->grad.data() + i * width;
            for (std::size_t j = 0; j < width; ++j) {
                dst[j] += src[j];
            }
        }
    });
    return out;
}

TensorPtr Tape::pairwise_sqdist(const TensorPtr& x, const TensorPtr& c) {
    require_matrix(x, "pairwise_sqdist lhs");
    require_matrix(c, "pairwise_sqdist rhs");
    if (x->shape[1] != c->shape[1]) {
        throw ShapeError("pairwise_sqdist: widths disagree");
    }
    const std::size_t n = x->shape[0], d = x->shape[1], k = c->shape[0];
    auto out = emit({n, k}, x->requires_grad || c->requires_grad);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x->data.data() + i * d;
        for (std::size_t q = 0; q < k; ++q) {
            const double* cq = c->data.data() + q * d;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = xi[j] - cq[j];
                s += diff * diff;
            }
            out->data[i * k + q] = s;
        }
    }
    record(out, [x, c, out, n, d, k] {
        // dS_iq/dx_i = 2 (x_i - c_q), dS_iq/dc_q = -2 (x_i - c_q)
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x->data.data() + i * d;
            const double* urow = out->grad.data() + i * k;
            for (std::size_t q = 0; q < k; ++q) {
                const double u2 = 2.0 * urow[q];
                if (u2 == 0.0) {
                    continue;
                }
                const double* cq = c->data.data() + q * d;
                if (x->requires_grad) {
                    x->ensure_grad();
                    double* gx = x->grad.data() + i * d;
                    for (std::size_t j = 0; j < d; ++j) {
                        gx[j] += u2 * (xi[j] - cq[j]);
                    }
                }
                if (c->requires_grad) {
                    c->ensure_grad();
                    double* gc = c->grad.data() + q * d;
                    for (std::size_t j = 0; j < d; ++j) {
                        gc[j] -= u2 * (xi[j] - cq[j]);
                    }
                }
            }
        }
    });
    return out;
}

TensorPtr Tape::sum(const TensorPtr& a) {
    auto out = emit({1}, a->requires_grad);
    double s = 0.0;
    for (double v : a->data) {
        s += v;
    }
    out->data[0] = s;
    record(out, [a, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->size(); ++i) {
                a->grad[i] += out->grad[0];
            }
        }
    });
    return out;
}

TensorPtr Tape::mse(const TensorPtr& pred, const TensorPtr& target) {
    require_same_shape(pred, target, "mse");
    auto diff = sub(pred, target);
    auto sq = mul(diff, diff);
    return scale(sum(sq), 1.0 / static_cast<double>(pred->rows()));
}

TensorPtr Tape::cross_entropy(const TensorPtr& logits, const std::vector<int>& targets) {
    require_matrix(logits, "cross_entropy logits");
    const std::size_t n = logits->shape[0], k = logits->shape[1];
    if (targets.size() != n) {
        throw ShapeError("cross_entropy: one target per row required");
    }
    for (int t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= k) {
            throw IndexError("cross_entropy: target " + std::to_string(t) + " out of range");
        }
    }
    auto out = emit({1}, logits->requires_grad);
    // Cache the row softmax for the backward pass.
    auto probs = std::make_shared<std::vector<double>>(n * k);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = logits->data.data() + i * k;
        double* prow = probs->data() + i * k;
        const double mx = *std::max_element(row, row + k);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            prow[j] = std::exp(row[j] - mx);
            denom += prow[j];
        }
        for (std::size_t j = 0; j < k; ++j) {
            prow[j] /= denom;
        }
        total -= std::log(prow[static_cast<std::size_t>(targets[i])]);
    }
    out->data[0] = total / static_cast<double>(n);
    record(out, [logits, out, probs, targets, n, k] {
        if (!logits->requires_grad) {
            return;
        }
        logits->ensure_grad();
        const double u = out->grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* prow = probs->data() + i * k;
            double* g = logits->grad.data() + i * k;
            for (std::size_t j = 0; j < k; ++j) {
                g[j] += u * prow[j];
            }
            g[static_cast<std::size_t>(targets[i])] -= u;
        }
    });
    return out;
}

TensorPtr Tape::kl_std_normal(const TensorPtr& mu, const TensorPtr& log_sigma) {
    require_same_shape(mu, log_sigma, "kl_std_normal");
    const std::size_t n = mu->rows();
    auto out = emit({1}, mu->requires_grad || log_sigma->requires_grad);
    double total = 0.0;
    for (std::size_t i = 0; i < mu->size(); ++i) {
        const double m = mu->data[i];
        const double ls = log_sigma->data[i];
        total += 0.5 * (m * m + std::exp(2.0 * ls) - 1.0 - 2.0 * ls);
    }
    out->data[0] = total / static_cast<double>(n);
    record(out, [mu, log_sigma, out, n] {
        const double u = out->grad[0] / static_cast<double>(n);
        if (mu->requires_grad) {
            mu->ensure_grad();
            for (std::size_t i = 0; i < mu->size(); ++i) {
                mu->grad[i] += u * mu->data[i];
            }
        }
        if (log_sigma->requires_grad) {
            log_sigma->ensure_grad();
            for (std::size_t i = 0; i < log_sigma->size(); ++i) {
                log_sigma->grad[i] += u * (std::exp(2.0 * log_sigma->data[i]) - 1.0);
            }
        }
    });
    return out;
}

TensorPtr Tape::gaussian_sample(const TensorPtr& mu, const TensorPtr& log_sigma,
                                RngStream& rng) {
    require_same_shape(mu, log_sigma, "gaussian_sample");
    auto eps = randn(mu->shape, 1.0, rng, false);
    return add(mu, mul(exp(log_sigma), eps));
}

void Tape::backward(const TensorPtr& loss) {
    if (!loss->is_scalar()) {
        throw UsageError("backward root must be scalar");
    }
    loss->ensure_grad();
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->backprop && it->out->requires_grad && !it->out->grad.empty()) {
            it->backprop();
        }
    }
}

void Tape::clear() {
    nodes_.clear();
}

void adam_step(const std::vector<TensorPtr>& params, AdamState& state) {
    if (state.first_moment.empty()) {
        state.first_moment.resize(params.size());
        state.second_moment.resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p) {
            state.first_moment[p].assign(params[p]->size(), 0.0);
            state.second_moment[p].assign(params[p]->size(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ShapeError("adam_step: parameter count changed");
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p];
        if (state.first_moment[p].size() != t.size()) {
            throw ShapeError("adam_step: moment buffer does not match parameter");
        }
        if (t.grad.empty()) {
            continue; // no gradient reached this parameter
        }
        double* m = state.first_moment[p].data();
        double* v = state.second_moment[p].data();
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double g = t.grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            t.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

void zero_grads(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) {
        p->zero_grad();
    }
}

} // namespace hrq::ad
