#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hrq/rng.hpp"

namespace hrq::ad {

// Dense row-major tensor of doubles. Gradient storage is allocated lazily
// the first time a backward pass reaches the tensor.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until needed
    bool requires_grad = false;

    std::size_t size() const { return data.size(); }
    // A rank-1 tensor counts as a single row (one sample) for the
    // mean-over-rows reductions.
    std::size_t rows() const { return shape.size() < 2 ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }
    bool is_scalar() const { return data.size() == 1; }

    void ensure_grad() {
        if (grad.size() != data.size()) {
            grad.assign(data.size(), 0.0);
        }
    }
    void zero_grad() {
        if (!grad.empty()) {
            grad.assign(grad.size(), 0.0);
        }
    }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> data,
                      bool requires_grad = false);
TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
// Gaussian init scaled by `sigma`, drawn from `rng`.
TensorPtr randn(std::vector<std::size_t> shape, double sigma, RngStream& rng,
                bool requires_grad = true);

// Dynamic per-step tape. Operations append a node with a backward closure;
// backward() replays the closures in reverse creation order. A tape is
// single-threaded; distinct tapes may run concurrently on disjoint
// parameters.
class Tape {
  public:
    // y = x W + b, x:[n,in] W:[in,out] b:[out]
    TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
    TensorPtr mul(const TensorPtr& a, const TensorPtr& b); // elementwise
    TensorPtr scale(const TensorPtr& a, double c);
    TensorPtr add_rowvec(const TensorPtr& a, const TensorPtr& v); // v broadcast over rows
    TensorPtr mul_colvec(const TensorPtr& a, const TensorPtr& c); // c:[n] scales row i
    TensorPtr tanh(const TensorPtr& a);
    TensorPtr exp(const TensorPtr& a);
    TensorPtr softmax_rows(const TensorPtr& a);
    TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
    // rows of m selected by index; backward scatter-adds into m.
    TensorPtr gather_rows(const TensorPtr& m, const std::vector<int>& indices);
    // S[i][k] = ||x_i - c_k||^2, x:[n,d] c:[K,d]
    TensorPtr pairwise_sqdist(const TensorPtr& x, const TensorPtr& c);
    TensorPtr sum(const TensorPtr& a); // scalar

    // mean over rows of the squared L2 distance between predictions and targets
    TensorPtr mse(const TensorPtr& pred, const TensorPtr& target);
    // mean over rows of -log softmax(logits)[target]
    TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& targets);
    // mean over rows of sum_j 1/2 (mu^2 + sigma^2 - 1 - 2 log sigma)
    TensorPtr kl_std_normal(const TensorPtr& mu, const TensorPtr& log_sigma);
    // mu + exp(log_sigma) * eps with eps ~ N(0, I) drawn from rng
    TensorPtr gaussian_sample(const TensorPtr& mu, const TensorPtr& log_sigma, RngStream& rng);

    // Populates grads of every tensor that (transitively) requires grad.
    // `loss` must be scalar.
    void backward(const TensorPtr& loss);

    void clear();
    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        TensorPtr out;
        std::function<void()> backprop; // null for leaves
    };
    TensorPtr emit(std::vector<std::size_t> shape, bool requires_grad);
    void record(TensorPtr out, std::function<void()> backprop);
    std::vector<Node> nodes_;
};

// Adam with bias correction. Moment buffers are lazily sized to the
// parameter list on the first step.
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

// One update over `params` using the gradients currently stored on them.
void adam_step(const std::vector<TensorPtr>& params, AdamState& state);

void zero_grads(const std::vector<TensorPtr>& params);

} // namespace hrq::ad
