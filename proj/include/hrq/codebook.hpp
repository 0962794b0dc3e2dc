#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hrq/rng.hpp"
#include "hrq/textio.hpp"

namespace hrq {

// Discrete code path q_1..q_D through the hierarchy, one code per level.
using HrqPath = std::vector<int>;

// D levels of K embeddings each, all living in the same dim-wide space.
// Level 0 is the coarsest; deeper levels refine the residual left by the
// levels above them.
struct Codebook {
    int depth = 0;
    int codes_per_level = 0;
    int dim = 0;
    std::vector<double> embeddings; // [depth][codes_per_level][dim], row-major

    std::span<const double> entry(int level, int code) const {
        return {embeddings.data() +
                    (static_cast<std::size_t>(level) * codes_per_level + code) * dim,
                static_cast<std::size_t>(dim)};
    }
    std::span<double> entry_mut(int level, int code) {
        return {embeddings.data() +
                    (static_cast<std::size_t>(level) * codes_per_level + code) * dim,
                static_cast<std::size_t>(dim)};
    }
};

// Everything recorded while decomposing one vector: the chosen path, the
// score vector at every level, the residual norm before level 0 and after
// each level, and the composed reconstruction.
struct QuantizationTrace {
    HrqPath path;
    std::vector<double> residual_norms; // depth+1 entries
    std::vector<double> scores;         // [depth][codes_per_level]
    std::vector<double> composed;       // dim

    double score(int level, int code, int codes_per_level) const {
        return scores[static_cast<std::size_t>(level) * codes_per_level + code];
    }
};

// Result of the relaxed (Gumbel-softmax) quantization pass.
struct SoftQuantization {
    std::vector<double> weights;  // [depth][codes_per_level], rows sum to 1
    std::vector<double> composed; // sum of soft codewords
    HrqPath sampled_path;         // argmax of the noisy scores per level
};

enum class TauMode {
    ProseExponential, // tau_init * 2^(-t/half_life), clamped at tau_min
    PrintedSigmoid,   // tau_init - tau_init/(1+e^(t/half_life)), clamped at tau_min
};

// Temperature schedule for the Gumbel relaxation. The sigmoid variant is
// kept for fidelity even though it increases with t; see tau_at().
struct GumbelSchedule {
    double tau_init = 2.0;
    int half_life_steps = 10000;
    double tau_min = 0.5;
    TauMode mode = TauMode::ProseExponential;
};

// Per-level Bernoulli gates and their running product. Once a gate is zero
// every deeper level is truncated, so `cumulative` is a non-increasing 0/1
// sequence.
struct DepthMask {
    std::vector<int> gammas;
    std::vector<int> cumulative;
};

// Random codebook with per-level scale decay: embeddings at level d are
// i.i.d. N(0, (base/sqrt(dim) * alpha_init^d)^2) per component with base 1,
// so deeper levels start with smaller norms.
Codebook init_codebook(int depth, int codes_per_level, int dim, double alpha_init,
                       uint64_t seed);

// Negated squared distance from the residual to every embedding of `level`
// (0-based). All scores are <= 0; 0 only for an exact match.
std::vector<double> level_scores(std::span<const double> residual, const Codebook& cb,
                                 int level);

// Greedy decomposition: per level pick the argmax score on the running
// residual, subtract the chosen embedding, recurse. Ties break toward the
// lowest code index.
QuantizationTrace quantize_hard(std::span<const double> z, const Codebook& cb);

// Gumbel-softmax relaxation at temperature tau. Per level the weights are
// softmax((scores + gumbel)/tau); the residual passed to the next level
// subtracts the *soft* codeword so the whole pass stays differentiable.
SoftQuantization quantize_soft(std::span<const double> z, const Codebook& cb, double tau,
                               RngStream& rng);

// Same relaxation with caller-supplied noise, one Gumbel variate per
// (level, code) in row-major order. quantize_soft() is this plus noise drawn
// from the stream; the training graph reuses the identical arithmetic.
SoftQuantization quantize_soft_with_noise(std::span<const double> z, const Codebook& cb,
                                          double tau, std::span<const double> noise);

// Sum of the selected embeddings in level order (fixed left-to-right
// summation, so traces are bit-reproducible).
std::vector<double> compose(const HrqPath& path, const Codebook& cb);

// Like compose() but each level is weighted by the cumulative mask, which
// truncates the path at the first zero gate.
std::vector<double> compose_with_dropout(const HrqPath& path, const Codebook& cb,
                                         const DepthMask& mask);

// Gates ~ Bernoulli(1 - p_depth) i.i.d. per level; level d stays active with
// probability (1-p_depth)^(d+1).
DepthMask sample_depth_mask(double p_depth, int depth, RngStream& rng);

double tau_at(const GumbelSchedule& schedule, long step);

// Versioned structured-text serialization; round-trips are byte-identical.
textio::Document codebook_to_doc(const Codebook& cb);
Codebook codebook_from_doc(const textio::Document& doc);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

} // namespace hrq
