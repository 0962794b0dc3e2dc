#include "hrq/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hrq/error.hpp"

namespace hrq {

namespace {

void check_vector(std::span<const double> z, const Codebook& cb) {
    if (static_cast<int>(z.size()) != cb.dim) {
        throw ShapeError("input has length " + std::to_string(z.size()) + ", codebook dim is " +
                         std::to_string(cb.dim));
    }
    for (double v : z) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite input component");
        }
    }
}

void check_path(const HrqPath& path, const Codebook& cb) {
    if (static_cast<int>(path.size()) != cb.depth) {
        throw ShapeError("path has " + std::to_string(path.size()) + " codes, codebook depth is " +
                         std::to_string(cb.depth));
    }
    for (int q : path) {
        if (q < 0 || q >= cb.codes_per_level) {
            throw IndexError("code " + std::to_string(q) + " out of range [0, " +
                             std::to_string(cb.codes_per_level) + ")");
        }
    }
}

int argmax_lowest_tie(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

} // namespace

Codebook init_codebook(int depth, int codes_per_level, int dim, double alpha_init,
                       uint64_t seed) {
    if (depth < 1 || codes_per_level < 1 || dim < 1) {
        throw ConfigError("codebook dimensions must be positive");
    }
    if (!(alpha_init > 0.0) || alpha_init > 1.0) {
        throw ConfigError("alpha_init must be in (0, 1]");
    }
    Codebook cb;
    cb.depth = depth;
    cb.codes_per_level = codes_per_level;
    cb.dim = dim;
    cb.embeddings.resize(static_cast<std::size_t>(depth) * codes_per_level * dim);

    RngStream rng(seed);
    const double base_sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    std::size_t idx = 0;
    for (int d = 0; d < depth; ++d) {
        const double sigma = base_sigma * std::pow(alpha_init, d);
        for (int k = 0; k < codes_per_level; ++k) {
            for (int j = 0; j < dim; ++j) {
                cb.embeddings[idx++] = sigma * rng.normal();
            }
        }
    }
    return cb;
}

std::vector<double> level_scores(std::span<const double> residual, const Codebook& cb,
                                 int level) {
    if (level < 0 || level >= cb.depth) {
        throw IndexError("level " + std::to_string(level) + " out of range");
    }
    if (static_cast<int>(residual.size()) != cb.dim) {
        throw ShapeError("residual has length " + std::to_string(residual.size()) +
                         ", codebook dim is " + std::to_string(cb.dim));
    }
    std::vector<double> scores(cb.codes_per_level);
    for (int q = 0; q < cb.codes_per_level; ++q) {
        auto e = cb.entry(level, q);
        double dist = 0.0;
        for (int j = 0; j < cb.dim; ++j) {
            const double diff = residual[j] - e[j];
            dist += diff * diff;
        }
        scores[q] = -dist;
    }
    return scores;
}

QuantizationTrace quantize_hard(std::span<const double> z, const Codebook& cb) {
    check_vector(z, cb);

    QuantizationTrace trace;
    trace.path.resize(cb.depth);
    trace.scores.resize(static_cast<std::size_t>(cb.depth) * cb.codes_per_level);
    trace.residual_norms.resize(cb.depth + 1);
    trace.composed.assign(cb.dim, 0.0);

    std::vector<double> residual(z.begin(), z.end());
    trace.residual_norms[0] = norm(residual);
    for (int d = 0; d < cb.depth; ++d) {
        auto scores = level_scores(residual, cb, d);
        const int q = argmax_lowest_tie(scores);
        trace.path[d] = q;
        std::copy(scores.begin(), scores.end(),
                  trace.scores.begin() + static_cast<std::size_t>(d) * cb.codes_per_level);
        auto e = cb.entry(d, q);
        for (int j = 0; j < cb.dim; ++j) {
            residual[j] -= e[j];
        }
        trace.residual_norms[d + 1] = norm(residual);
    }
    trace.composed = compose(trace.path, cb);
    return trace;
}

SoftQuantization quantize_soft_with_noise(std::span<const double> z, const Codebook& cb,
                                          double tau, std::span<const double> noise) {
    if (!(tau > 0.0)) {
        throw ConfigError("tau must be > 0");
    }
    check_vector(z, cb);
    const std::size_t need = static_cast<std::size_t>(cb.depth) * cb.codes_per_level;
    if (noise.size() != need) {
        throw ShapeError("need " + std::to_string(need) + " noise values, got " +
                         std::to_string(noise.size()));
    }

    SoftQuantization out;
    out.weights.resize(need);
    out.composed.assign(cb.dim, 0.0);
    out.sampled_path.resize(cb.depth);

    std::vector<double> residual(z.begin(), z.end());
    std::vector<double> noisy(cb.codes_per_level);
    for (int d = 0; d < cb.depth; ++d) {
        auto scores = level_scores(residual, cb, d);
        for (int q = 0; q < cb.codes_per_level; ++q) {
            noisy[q] = (scores[q] + noise[static_cast<std::size_t>(d) * cb.codes_per_level + q]) /
                       tau;
        }
        out.sampled_path[d] = argmax_lowest_tie(noisy);

        // Stable softmax over the noisy scores.
        const double mx = *std::max_element(noisy.begin(), noisy.end());
        double denom = 0.0;
        for (int q = 0; q < cb.codes_per_level; ++q) {
            noisy[q] = std::exp(noisy[q] - mx);
            denom += noisy[q];
        }
        double* w = out.weights.data() + static_cast<std::size_t>(d) * cb.codes_per_level;
        for (int q = 0; q < cb.codes_per_level; ++q) {
            w[q] = noisy[q] / denom;
        }

        // Soft codeword; the next level refines the residual it leaves.
        for (int q = 0; q < cb.codes_per_level; ++q) {
            auto e = cb.entry(d, q);
            for (int j = 0; j < cb.dim; ++j) {
                const double c = w[q] * e[j];
                out.composed[j] += c;
                residual[j] -= c;
            }
        }
    }
    return out;
}

SoftQuantization quantize_soft(std::span<const double> z, const Codebook& cb, double tau,
                               RngStream& rng) {
    std::vector<double> noise(static_cast<std::size_t>(cb.depth) * cb.codes_per_level);
    for (double& g : noise) {
        g = rng.gumbel();
    }
    return quantize_soft_with_noise(z, cb, tau, noise);
}

std::vector<double> compose(const HrqPath& path, const Codebook& cb) {
    check_path(path, cb);
    std::vector<double> out(cb.dim, 0.0);
    for (int d = 0; d < cb.depth; ++d) {
        auto e = cb.entry(d, path[d]);
        for (int j = 0; j < cb.dim; ++j) {
            out[j] += e[j];
        }
    }
    return out;
}

std::vector<double> compose_with_dropout(const HrqPath& path, const Codebook& cb,
                                         const DepthMask& mask) {
    check_path(path, cb);
    if (static_cast<int>(mask.cumulative.size()) != cb.depth) {
        throw ShapeError("mask has " + std::to_string(mask.cumulative.size()) +
                         " levels, codebook depth is " + std::to_string(cb.depth));
    }
    std::vector<double> out(cb.dim, 0.0);
    for (int d = 0; d < cb.depth; ++d) {
        if (mask.cumulative[d] == 0) {
            break; // cumulative mask is non-increasing
        }
        auto e = cb.entry(d, path[d]);
        for (int j = 0; j < cb.dim; ++j) {
            out[j] += e[j];
        }
    }
    return out;
}

DepthMask sample_depth_mask(double p_depth, int depth, RngStream& rng) {
    if (!(p_depth >= 0.0) || p_depth >= 1.0) {
        throw ConfigError("p_depth must be in [0, 1)");
    }
    DepthMask mask;
    mask.gammas.resize(depth);
    mask.cumulative.resize(depth);
    int running = 1;
    for (int d = 0; d < depth; ++d) {
        mask.gammas[d] = rng.bernoulli(1.0 - p_depth) ? 1 : 0;
        running &= mask.gammas[d];
        mask.cumulative[d] = running;
    }
    return mask;
}

double tau_at(const GumbelSchedule& schedule, long step) {
    const double t = static_cast<double>(step);
    const double half_life = static_cast<double>(schedule.half_life_steps);
    switch (schedule.mode) {
        case TauMode::ProseExponential:
            return std::max(schedule.tau_init * std::exp2(-t / half_life), schedule.tau_min);
        case TauMode::PrintedSigmoid:
            // Reproduced as printed even though it *increases* from tau_init/2
            // toward tau_init and never reaches the clamp.
            return std::max(schedule.tau_init -
                                schedule.tau_init / (1.0 + std::exp(t / half_life)),
                            schedule.tau_min);
    }
    throw ConfigError("unknown tau mode");
}

textio::Document codebook_to_doc(const Codebook& cb) {
    textio::Document doc;
    doc.kind = "codebook";
    doc.set_meta("depth", std::to_string(cb.depth));
    doc.set_meta("codes_per_level", std::to_string(cb.codes_per_level));
    doc.set_meta("dim", std::to_string(cb.dim));
    for (int d = 0; d < cb.depth; ++d) {
        textio::FloatArray arr;
        arr.name = "level_" + std::to_string(d);
        arr.shape = {static_cast<std::size_t>(cb.codes_per_level),
                     static_cast<std::size_t>(cb.dim)};
        const double* begin =
            cb.embeddings.data() + static_cast<std::size_t>(d) * cb.codes_per_level * cb.dim;
        arr.data.assign(begin, begin + static_cast<std::size_t>(cb.codes_per_level) * cb.dim);
        doc.arrays.push_back(std::move(arr));
    }
    return doc;
}

Codebook codebook_from_doc(const textio::Document& doc) {
    if (doc.kind != "codebook") {
        throw FormatError("expected a codebook document, got '" + doc.kind + "'");
    }
    Codebook cb;
    cb.depth = static_cast<int>(doc.meta_int("depth"));
    cb.codes_per_level = static_cast<int>(doc.meta_int("codes_per_level"));
    cb.dim = static_cast<int>(doc.meta_int("dim"));
    if (cb.depth < 1 || cb.codes_per_level < 1 || cb.dim < 1) {
        throw FormatError("codebook dimensions must be positive");
    }
    cb.embeddings.reserve(static_cast<std::size_t>(cb.depth) * cb.codes_per_level * cb.dim);
    for (int d = 0; d < cb.depth; ++d) {
        const auto& arr = doc.require_array("level_" + std::to_string(d));
        if (arr.shape != std::vector<std::size_t>{static_cast<std::size_t>(cb.codes_per_level),
                                                  static_cast<std::size_t>(cb.dim)}) {
            throw FormatError("level_" + std::to_string(d) + " has the wrong shape");
        }
        cb.embeddings.insert(cb.embeddings.end(), arr.data.begin(), arr.data.end());
    }
    return cb;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    textio::save(codebook_to_doc(cb), path);
}

Codebook load_codebook(const std::filesystem::path& path) {
    return codebook_from_doc(textio::load(path));
}

} // namespace hrq
