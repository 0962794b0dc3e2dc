#include "hrq/evaluate.hpp"

#include <cmath>

#include "hrq/error.hpp"

namespace hrq::eval {

namespace {

std::vector<std::vector<double>> encode_all(const model::ModelParams& params,
                                            const synth::TripleSet& data) {
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(data.n));
    for (int i = 0; i < data.n; ++i) {
        out.push_back(model::syn_encode(params, {data.syn(i), static_cast<std::size_t>(data.dim)}));
    }
    return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

} // namespace

std::vector<HrqPath> oracle_paths(const model::ModelParams& params,
                                  const synth::TripleSet& data) {
    const Codebook cb = params.codebook_snapshot();
    std::vector<HrqPath> paths;
    paths.reserve(static_cast<std::size_t>(data.n));
    for (int i = 0; i < data.n; ++i) {
        const auto z = model::syn_encode(params, {data.syn(i), static_cast<std::size_t>(data.dim)});
        paths.push_back(quantize_hard(z, cb).path);
    }
    return paths;
}

std::vector<double> residual_distortion_curve(const model::ModelParams& params,
                                              const synth::TripleSet& data) {
    if (data.n < 1) {
        throw DataError("empty evaluation set");
    }
    const Codebook cb = params.codebook_snapshot();
    std::vector<double> curve(static_cast<std::size_t>(cb.depth) + 1, 0.0);
    for (int i = 0; i < data.n; ++i) {
        const auto z = model::syn_encode(params, {data.syn(i), static_cast<std::size_t>(data.dim)});
        const QuantizationTrace trace = quantize_hard(z, cb);
        for (int k = 0; k <= cb.depth; ++k) {
            curve[k] += trace.residual_norms[k] * trace.residual_norms[k];
        }
    }
    for (double& v : curve) {
        v /= static_cast<double>(data.n);
    }
    return curve;
}

double relative_distortion(const model::ModelParams& params, const synth::TripleSet& data) {
    if (data.n < 1) {
        throw DataError("empty evaluation set");
    }
    const auto encodings = encode_all(params, data);
    const Codebook cb = params.codebook_snapshot();
    const int dim = cb.dim;

    std::vector<double> mean(dim, 0.0);
    for (const auto& z : encodings) {
        for (int j = 0; j < dim; ++j) {
            mean[j] += z[j];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(data.n);
    }

    double distortion = 0.0;
    double variance = 0.0;
    for (const auto& z : encodings) {
        const QuantizationTrace trace = quantize_hard(z, cb);
        distortion += trace.residual_norms.back() * trace.residual_norms.back();
        variance += sq_dist(z, mean);
    }
    if (variance <= 0.0) {
        return 0.0; // degenerate constant encodings
    }
    return distortion / variance;
}

double relative_distortion_on(const Codebook& cb, const std::vector<double>& vectors, int n,
                              int dim) {
    if (n < 1 || dim != cb.dim) {
        throw DataError("vectors do not match the codebook");
    }
    std::vector<double> mean(dim, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) {
            mean[j] += vectors[static_cast<std::size_t>(i) * dim + j];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(n);
    }
    double distortion = 0.0;
    double variance = 0.0;
    for (int i = 0; i < n; ++i) {
        std::span<const double> z{vectors.data() + static_cast<std::size_t>(i) * dim,
                                  static_cast<std::size_t>(dim)};
        const QuantizationTrace trace = quantize_hard(z, cb);
        distortion += trace.residual_norms.back() * trace.residual_norms.back();
        for (int j = 0; j < dim; ++j) {
            const double d = z[j] - mean[j];
            variance += d * d;
        }
    }
    if (variance <= 0.0) {
        return 0.0;
    }
    return distortion / variance;
}

std::vector<double> truncated_generation_errors(const model::ModelParams& params,
                                                const synth::TripleSet& data) {
    if (data.n < 1) {
        throw DataError("empty evaluation set");
    }
    const int depth = params.config.depth;
    const auto paths = oracle_paths(params, data);
    std::vector<double> errors(static_cast<std::size_t>(depth) + 1, 0.0);
    for (int i = 0; i < data.n; ++i) {
        std::span<const double> x_sem{data.sem(i), static_cast<std::size_t>(data.dim)};
        for (int k = 0; k <= depth; ++k) {
            const auto y_hat = model::generate_truncated(x_sem, paths[i], k, params);
            double err = 0.0;
            for (int j = 0; j < data.dim; ++j) {
                const double d = y_hat[j] - data.tgt(i)[j];
                err += d * d;
            }
            errors[k] += err;
        }
    }
    for (double& v : errors) {
        v /= static_cast<double>(data.n);
    }
    return errors;
}

std::vector<double> sketch_accuracy(const model::ModelParams& params,
                                    const synth::TripleSet& data) {
    if (data.n < 1) {
        throw DataError("empty evaluation set");
    }
    const int depth = params.config.depth;
    const auto paths = oracle_paths(params, data);
    std::vector<double> correct(static_cast<std::size_t>(depth), 0.0);
    for (int i = 0; i < data.n; ++i) {
        const auto z_sem =
            model::sem_mean(params, {data.sem(i), static_cast<std::size_t>(data.dim)});
        const auto predicted = model::predict_sketch(z_sem, params, 1).paths.front().first;
        for (int d = 0; d < depth; ++d) {
            if (predicted[d] == paths[i][d]) {
                correct[d] += 1.0;
            }
        }
    }
    for (double& v : correct) {
        v /= static_cast<double>(data.n);
    }
    return correct;
}

std::vector<int> path_prefix_ids(const std::vector<HrqPath>& paths, int prefix,
                                 int codes_per_level) {
    if (prefix < 1) {
        throw UsageError("prefix must be >= 1");
    }
    std::vector<int> ids;
    ids.reserve(paths.size());
    for (const HrqPath& path : paths) {
        int id = 0;
        for (int d = 0; d < prefix; ++d) {
            id = id * codes_per_level + path[static_cast<std::size_t>(d)];
        }
        ids.push_back(id);
    }
    return ids;
}

double generation_error(const model::ModelParams& params, const synth::TripleSet& data,
                        int beam_width) {
    if (data.n < 1) {
        throw DataError("empty evaluation set");
    }
    double total = 0.0;
    for (int i = 0; i < data.n; ++i) {
        const auto outputs =
            model::generate({data.sem(i), static_cast<std::size_t>(data.dim)}, params, beam_width);
        double err = 0.0;
        for (int j = 0; j < data.dim; ++j) {
            const double d = outputs[0][j] - data.tgt(i)[j];
            err += d * d;
        }
        total += err;
    }
    return total / static_cast<double>(data.n);
}

} // namespace hrq::eval
