#include "hrq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hrq/error.hpp"
#include "hrq/evaluate.hpp"
#include "hrq/rng.hpp"

namespace hrq::baselines {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// Nearest centroid, ties toward the lowest index.
int nearest(const double* point, const std::vector<double>& centroids, int k, int dim) {
    int best = 0;
    double best_dist = sq_dist(point, centroids.data(), dim);
    for (int c = 1; c < k; ++c) {
        const double d = sq_dist(point, centroids.data() + static_cast<std::size_t>(c) * dim, dim);
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    return best;
}

std::vector<double> kmeanspp_init(const std::vector<double>& points, int n, int dim, int k,
                                  RngStream& rng) {
    std::vector<double> centroids(static_cast<std::size_t>(k) * dim);
    std::vector<double> min_dist(static_cast<std::size_t>(n),
                                 std::numeric_limits<double>::infinity());

    int first = rng.uniform_int(n);
    std::copy_n(points.data() + static_cast<std::size_t>(first) * dim, dim, centroids.data());

    for (int c = 1; c < k; ++c) {
        const double* last = centroids.data() + static_cast<std::size_t>(c - 1) * dim;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = sq_dist(points.data() + static_cast<std::size_t>(i) * dim, last, dim);
            min_dist[i] = std::min(min_dist[i], d);
            total += min_dist[i];
        }
        int pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (int i = 0; i < n; ++i) {
                target -= min_dist[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
                pick = i; // fall back to the last point on fp underflow
            }
        } else {
            pick = rng.uniform_int(n); // all remaining points coincide
        }
        std::copy_n(points.data() + static_cast<std::size_t>(pick) * dim, dim,
                    centroids.data() + static_cast<std::size_t>(c) * dim);
    }
    return centroids;
}

} // namespace

KmeansResult kmeans(const std::vector<double>& points, int n, int dim, int k, int iters,
                    uint64_t seed) {
    if (n < 1 || dim < 1) {
        throw DataError("kmeans needs a non-empty point set");
    }
    if (k < 1 || k > n) {
        throw DataError("kmeans needs 1 <= k <= n points (" + std::to_string(n) + " given for k=" +
                        std::to_string(k) + ")");
    }
    if (iters < 1) {
        throw ConfigError("iters must be >= 1");
    }
    if (points.size() != static_cast<std::size_t>(n) * dim) {
        throw ShapeError("point array does not match n*dim");
    }

    RngStream rng(seed);
    KmeansResult result;
    result.centroids = kmeanspp_init(points, n, dim, k, rng);
    result.assignments.assign(static_cast<std::size_t>(n), 0);

    auto assign_all = [&] {
        double distortion = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* p = points.data() + static_cast<std::size_t>(i) * dim;
            const int c = nearest(p, result.centroids, k, dim);
            result.assignments[static_cast<std::size_t>(i)] = c;
            distortion += sq_dist(p, result.centroids.data() + static_cast<std::size_t>(c) * dim,
                                  dim);
        }
        return distortion;
    };

    for (int iter = 0; iter < iters; ++iter) {
        result.iteration_distortion.push_back(assign_all());

        // Means per cluster.
        std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            const int c = result.assignments[static_cast<std::size_t>(i)];
            ++counts[static_cast<std::size_t>(c)];
            const double* p = points.data() + static_cast<std::size_t>(i) * dim;
            double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            for (int j = 0; j < dim; ++j) {
                s[j] += p[j];
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                continue; // handled below
            }
            double* ctr = result.centroids.data() + static_cast<std::size_t>(c) * dim;
            const double inv = 1.0 / counts[static_cast<std::size_t>(c)];
            for (int j = 0; j < dim; ++j) {
                ctr[j] = sums[static_cast<std::size_t>(c) * dim + j] * inv;
            }
        }

        // Deterministic recovery: each empty cluster steals the point
        // farthest from its current centroid.
        std::vector<bool> stolen(static_cast<std::size_t>(n), false);
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] != 0) {
                continue;
            }
            int farthest = -1;
            double farthest_dist = -1.0;
            for (int i = 0; i < n; ++i) {
                if (stolen[static_cast<std::size_t>(i)]) {
                    continue;
                }
                const int a = result.assignments[static_cast<std::size_t>(i)];
                const double d =
                    sq_dist(points.data() + static_cast<std::size_t>(i) * dim,
                            result.centroids.data() + static_cast<std::size_t>(a) * dim, dim);
                if (d > farthest_dist) {
                    farthest_dist = d;
                    farthest = i;
                }
            }
            stolen[static_cast<std::size_t>(farthest)] = true;
            std::copy_n(points.data() + static_cast<std::size_t>(farthest) * dim, dim,
                        result.centroids.data() + static_cast<std::size_t>(c) * dim);
        }
    }
    result.iteration_distortion.push_back(assign_all());
    return result;
}

Codebook recursive_kmeans(const std::vector<double>& vectors, int n, int dim, int depth,
                          int codes_per_level, int iters, uint64_t seed) {
    if (n < codes_per_level) {
        throw DataError("need at least codes_per_level vectors");
    }
    if (depth < 1) {
        throw ConfigError("depth must be >= 1");
    }
    Codebook cb;
    cb.depth = depth;
    cb.codes_per_level = codes_per_level;
    cb.dim = dim;
    cb.embeddings.reserve(static_cast<std::size_t>(depth) * codes_per_level * dim);

    std::vector<double> residuals = vectors;
    for (int d = 0; d < depth; ++d) {
        const KmeansResult level = kmeans(residuals, n, dim, codes_per_level, iters,
                                          derive_seed(seed, "recursive-kmeans",
                                                      static_cast<uint64_t>(d)));
        cb.embeddings.insert(cb.embeddings.end(), level.centroids.begin(),
                             level.centroids.end());
        for (int i = 0; i < n; ++i) {
            const double* ctr =
                level.centroids.data() +
                static_cast<std::size_t>(level.assignments[static_cast<std::size_t>(i)]) * dim;
            double* r = residuals.data() + static_cast<std::size_t>(i) * dim;
            for (int j = 0; j < dim; ++j) {
                r[j] -= ctr[j];
            }
        }
    }
    return cb;
}

const char* ablation_name(AblationKind kind) {
    switch (kind) {
        case AblationKind::Full:
            return "Full";
        case AblationKind::NoInitScaling:
            return "NoInitScaling";
        case AblationKind::NoHierarchy:
            return "NoHierarchy";
        case AblationKind::NoDepthDropout:
            return "NoDepthDropout";
        case AblationKind::PostHocKMeans:
            return "PostHocKMeans";
    }
    throw ConfigError("unknown ablation kind");
}

AblationKind ablation_from_name(const std::string& name) {
    for (AblationKind kind :
         {AblationKind::Full, AblationKind::NoInitScaling, AblationKind::NoHierarchy,
          AblationKind::NoDepthDropout, AblationKind::PostHocKMeans}) {
        if (name == ablation_name(kind)) {
            return kind;
        }
    }
    throw ConfigError("unknown ablation spec '" + name + "'");
}

model::TrainConfig apply_ablation(AblationKind kind, model::TrainConfig base) {
    switch (kind) {
        case AblationKind::Full:
            break;
        case AblationKind::NoInitScaling:
            base.alpha_init = 1.0;
            break;
        case AblationKind::NoHierarchy:
            // Equivalent total capacity: same number of codebook rows.
            base.codes_per_level = base.depth * base.codes_per_level;
            base.depth = 1;
            break;
        case AblationKind::NoDepthDropout:
            base.p_depth = 0.0;
            break;
        case AblationKind::PostHocKMeans:
            base.gaussian_bottleneck = true;
            break;
    }
    return base;
}

namespace {

// Sketch-head training for the post-hoc baseline: the encoder, decoder and
// codebook stay frozen; only the heads learn to predict the k-means paths.
void train_sketch_heads(model::ModelParams& params, const synth::TripleSet& data, long steps) {
    const model::TrainConfig& cfg = params.config;
    const auto dd = static_cast<std::size_t>(params.data_dim);
    const int batch = std::min<int>(cfg.batch_size, data.n);
    const Codebook cb = params.codebook_snapshot();

    std::vector<ad::TensorPtr> head_params;
    for (const auto& head : params.sketch_heads) {
        for (std::size_t l = 0; l < head.weights.size(); ++l) {
            head_params.push_back(head.weights[l]);
            head_params.push_back(head.biases[l]);
        }
    }
    ad::AdamState adam;
    adam.lr = cfg.lr;

    ad::Tape tape;
    for (long step = 0; step < steps; ++step) {
        RngStream batch_rng(derive_seed(cfg.seed, "head-batch", static_cast<uint64_t>(step)));
        std::vector<double> z_sem_rows(static_cast<std::size_t>(batch) * cfg.sem_dim);
        std::vector<std::vector<int>> targets(cfg.depth, std::vector<int>(batch));
        std::vector<std::vector<double>> partials(
            cfg.depth,
            std::vector<double>(static_cast<std::size_t>(batch) * cfg.syn_dim, 0.0));

        for (int i = 0; i < batch; ++i) {
            const int pick = batch_rng.uniform_int(data.n);
            const auto z_sem = model::sem_mean(params, {data.sem(pick), dd});
            std::copy_n(z_sem.data(), cfg.sem_dim,
                        z_sem_rows.data() + static_cast<std::size_t>(i) * cfg.sem_dim);
            const auto z_syn = model::syn_encode(params, {data.syn(pick), dd});
            const HrqPath path = quantize_hard(z_syn, cb).path;
            for (int d = 0; d < cfg.depth; ++d) {
                targets[d][i] = path[d];
                if (d > 0) {
                    double* row = partials[d].data() + static_cast<std::size_t>(i) * cfg.syn_dim;
                    std::copy_n(partials[d - 1].data() + static_cast<std::size_t>(i) * cfg.syn_dim,
                                cfg.syn_dim, row);
                    auto e = cb.entry(d - 1, path[d - 1]);
                    for (int j = 0; j < cfg.syn_dim; ++j) {
                        row[j] += e[j];
                    }
                }
            }
        }

        auto z_sem_t = ad::make_tensor(
            {static_cast<std::size_t>(batch), static_cast<std::size_t>(cfg.sem_dim)},
            std::move(z_sem_rows));
        ad::TensorPtr loss;
        for (int d = 0; d < cfg.depth; ++d) {
            auto partial_t = ad::make_tensor(
                {static_cast<std::size_t>(batch), static_cast<std::size_t>(cfg.syn_dim)},
                std::move(partials[d]));
            auto head_in = tape.concat_cols(z_sem_t, partial_t);
            ad::TensorPtr h = head_in;
            const model::Mlp& head = params.sketch_heads[static_cast<std::size_t>(d)];
            for (std::size_t l = 0; l < head.weights.size(); ++l) {
                h = tape.linear(h, head.weights[l], head.biases[l]);
                if (l + 1 < head.weights.size()) {
                    h = tape.tanh(h);
                }
            }
            auto ce = tape.cross_entropy(h, targets[d]);
            loss = loss ? tape.add(loss, ce) : ce;
        }
        if (!std::isfinite(loss->data[0])) {
            throw NumericError("head training diverged at step " + std::to_string(step));
        }
        ad::zero_grads(head_params);
        tape.backward(loss);
        ad::adam_step(head_params, adam);
        tape.clear();
    }
}

} // namespace

AblationReport run_ablation(AblationKind kind, const synth::TripleSet& train_set,
                            const synth::TripleSet& eval_set, const model::TrainConfig& base) {
    const model::TrainConfig cfg = apply_ablation(kind, base);
    AblationReport report;
    report.name = ablation_name(kind);
    report.seed = cfg.seed;

    model::TrainResult trained = model::train(cfg, train_set);
    model::ModelParams& params = trained.params;

    if (kind == AblationKind::PostHocKMeans) {
        // Frozen encodings of the training split feed the recursive
        // clustering; the learned codebook replaces the untrained one.
        std::vector<double> encodings(static_cast<std::size_t>(train_set.n) * cfg.syn_dim);
        for (int i = 0; i < train_set.n; ++i) {
            const auto z = model::syn_encode(
                params, {train_set.syn(i), static_cast<std::size_t>(train_set.dim)});
            std::copy_n(z.data(), cfg.syn_dim,
                        encodings.data() + static_cast<std::size_t>(i) * cfg.syn_dim);
        }
        const Codebook cb =
            recursive_kmeans(encodings, train_set.n, cfg.syn_dim, cfg.depth,
                             cfg.codes_per_level, 25, derive_seed(cfg.seed, "posthoc-kmeans"));
        for (int d = 0; d < cfg.depth; ++d) {
            const double* begin = cb.embeddings.data() +
                                  static_cast<std::size_t>(d) * cfg.codes_per_level * cfg.syn_dim;
            params.codebook_levels[static_cast<std::size_t>(d)]->data.assign(
                begin, begin + static_cast<std::size_t>(cfg.codes_per_level) * cfg.syn_dim);
        }
        train_sketch_heads(params, train_set, cfg.steps);
    }

    report.distortion = eval::relative_distortion(params, eval_set);
    report.truncation_error = eval::truncated_generation_errors(params, eval_set);
    report.recon_error = report.truncation_error.back();
    report.code_pred_accuracy = eval::sketch_accuracy(params, eval_set);
    return report;
}

} // namespace hrq::baselines
