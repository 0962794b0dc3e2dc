#include "hrq/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hrq/error.hpp"

namespace hrq::model {

namespace {

using ad::Tape;
using ad::TensorPtr;

constexpr const char* kTauModeNames[] = {"prose-exponential", "printed-sigmoid"};

Mlp init_mlp(const std::vector<std::size_t>& sizes, RngStream& rng) {
    Mlp mlp;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double sigma = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        mlp.weights.push_back(ad::randn({sizes[l], sizes[l + 1]}, sigma, rng, true));
        mlp.biases.push_back(ad::zeros({sizes[l + 1]}, true));
    }
    return mlp;
}

TensorPtr apply_mlp(Tape& tape, const Mlp& mlp, TensorPtr x, bool final_linear) {
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        x = tape.linear(x, mlp.weights[l], mlp.biases[l]);
        if (!final_linear || l + 1 < mlp.weights.size()) {
            x = tape.tanh(x);
        }
    }
    return x;
}

// Plain forward pass: y = tanh?(x W + b) layer by layer, single row.
std::vector<double> affine(std::span<const double> x, const TensorPtr& w, const TensorPtr& b) {
    const std::size_t in = w->shape[0], out = w->shape[1];
    if (x.size() != in) {
        throw ShapeError("affine: input width mismatch");
    }
    std::vector<double> y(b->data);
    for (std::size_t i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) {
            continue;
        }
        const double* wrow = w->data.data() + i * out;
        for (std::size_t j = 0; j < out; ++j) {
            y[j] += xi * wrow[j];
        }
    }
    return y;
}

std::vector<double> apply_mlp_plain(const Mlp& mlp, std::span<const double> x,
                                    bool final_linear) {
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        h = affine(h, mlp.weights[l], mlp.biases[l]);
        if (!final_linear || l + 1 < mlp.weights.size()) {
            for (double& v : h) {
                v = std::tanh(v);
            }
        }
    }
    return h;
}

void append_mlp(std::vector<std::pair<std::string, TensorPtr>>& out, const std::string& prefix,
                const Mlp& mlp) {
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        out.emplace_back(prefix + ".w" + std::to_string(l), mlp.weights[l]);
        out.emplace_back(prefix + ".b" + std::to_string(l), mlp.biases[l]);
    }
}

std::vector<double> log_softmax(std::vector<double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double denom = 0.0;
    for (double x : v) {
        denom += std::exp(x - mx);
    }
    const double log_denom = mx + std::log(denom);
    for (double& x : v) {
        x -= log_denom;
    }
    return v;
}

} // namespace

void TrainConfig::validate() const {
    if (depth < 1 || codes_per_level < 1 || sem_dim < 1 || syn_dim < 1 || hidden_dim < 1) {
        throw ConfigError("model dimensions must be positive");
    }
    if (batch_size < 1 || steps < 0) {
        throw ConfigError("batch_size must be positive and steps non-negative");
    }
    if (!(p_depth >= 0.0) || p_depth >= 1.0) {
        throw ConfigError("p_depth must be in [0, 1)");
    }
    if (!(alpha_init > 0.0) || alpha_init > 1.0) {
        throw ConfigError("alpha_init must be in (0, 1]");
    }
    if (!(lr > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (kl_weight < 0.0 || code_pred_weight < 0.0) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (!(schedule.tau_min > 0.0) || schedule.tau_init < schedule.tau_min ||
        schedule.half_life_steps < 1) {
        throw ConfigError("bad gumbel schedule");
    }
}

std::vector<TensorPtr> ModelParams::parameters() const {
    std::vector<TensorPtr> out;
    for (const auto& [name, t] : named_parameters()) {
        out.push_back(t);
    }
    return out;
}

std::vector<std::pair<std::string, TensorPtr>> ModelParams::named_parameters() const {
    std::vector<std::pair<std::string, TensorPtr>> out;
    append_mlp(out, "sem_trunk", sem_trunk);
    out.emplace_back("sem_mu.w", sem_mu_w);
    out.emplace_back("sem_mu.b", sem_mu_b);
    out.emplace_back("sem_log_sigma.w", sem_log_sigma_w);
    out.emplace_back("sem_log_sigma.b", sem_log_sigma_b);
    append_mlp(out, "syn_trunk", syn_trunk);
    out.emplace_back("syn_out.w", syn_out_w);
    out.emplace_back("syn_out.b", syn_out_b);
    if (config.gaussian_bottleneck) {
        out.emplace_back("syn_log_sigma.w", syn_log_sigma_w);
        out.emplace_back("syn_log_sigma.b", syn_log_sigma_b);
    }
    append_mlp(out, "decoder", decoder);
    for (std::size_t d = 0; d < codebook_levels.size(); ++d) {
        out.emplace_back("codebook.level_" + std::to_string(d), codebook_levels[d]);
    }
    for (std::size_t d = 0; d < sketch_heads.size(); ++d) {
        append_mlp(out, "sketch_head_" + std::to_string(d), sketch_heads[d]);
    }
    return out;
}

Codebook ModelParams::codebook_snapshot() const {
    Codebook cb;
    cb.depth = config.depth;
    cb.codes_per_level = config.codes_per_level;
    cb.dim = config.syn_dim;
    cb.embeddings.reserve(static_cast<std::size_t>(cb.depth) * cb.codes_per_level * cb.dim);
    for (const auto& level : codebook_levels) {
        cb.embeddings.insert(cb.embeddings.end(), level->data.begin(), level->data.end());
    }
    return cb;
}

ModelParams init_model(const TrainConfig& config, int data_dim) {
    config.validate();
    if (data_dim < 1) {
        throw ConfigError("data_dim must be positive");
    }
    ModelParams p;
    p.config = config;
    p.data_dim = data_dim;

    const auto dd = static_cast<std::size_t>(data_dim);
    const auto h = static_cast<std::size_t>(config.hidden_dim);
    const auto sem = static_cast<std::size_t>(config.sem_dim);
    const auto syn = static_cast<std::size_t>(config.syn_dim);
    const auto k = static_cast<std::size_t>(config.codes_per_level);

    RngStream init_rng(derive_seed(config.seed, "init"));
    p.sem_trunk = init_mlp({dd, h, h}, init_rng);
    p.sem_mu_w = ad::randn({h, sem}, 1.0 / std::sqrt(static_cast<double>(h)), init_rng, true);
    p.sem_mu_b = ad::zeros({sem}, true);
    p.sem_log_sigma_w =
        ad::randn({h, sem}, 1.0 / std::sqrt(static_cast<double>(h)), init_rng, true);
    p.sem_log_sigma_b = ad::zeros({sem}, true);

    p.syn_trunk = init_mlp({dd, h, h}, init_rng);
    p.syn_out_w = ad::randn({h, syn}, 1.0 / std::sqrt(static_cast<double>(h)), init_rng, true);
    p.syn_out_b = ad::zeros({syn}, true);
    if (config.gaussian_bottleneck) {
        p.syn_log_sigma_w =
            ad::randn({h, syn}, 1.0 / std::sqrt(static_cast<double>(h)), init_rng, true);
        p.syn_log_sigma_b = ad::zeros({syn}, true);
    }

    p.decoder = init_mlp({sem + syn, h, h, dd}, init_rng);

    // Codebook tensors reproduce init_codebook exactly, including the
    // per-level scale decay.
    const Codebook cb = init_codebook(config.depth, config.codes_per_level, config.syn_dim,
                                      config.alpha_init, derive_seed(config.seed, "codebook"));
    for (int d = 0; d < config.depth; ++d) {
        const double* begin = cb.embeddings.data() + static_cast<std::size_t>(d) * k * syn;
        p.codebook_levels.push_back(ad::make_tensor(
            {k, syn}, std::vector<double>(begin, begin + k * syn), true));
    }

    for (int d = 0; d < config.depth; ++d) {
        p.sketch_heads.push_back(init_mlp({sem + syn, h, h, k}, init_rng));
    }
    return p;
}

ElboGraph build_elbo(Tape& tape, ModelParams& params, std::span<const double> x_sem,
                     std::span<const double> x_syn, std::span<const double> y, int batch,
                     long step, RngStream& rng) {
    const TrainConfig& cfg = params.config;
    const auto n = static_cast<std::size_t>(batch);
    const auto dd = static_cast<std::size_t>(params.data_dim);
    const auto k = static_cast<std::size_t>(cfg.codes_per_level);
    if (batch < 1) {
        throw UsageError("batch must be non-empty");
    }
    if (x_sem.size() != n * dd || x_syn.size() != n * dd || y.size() != n * dd) {
        throw ShapeError("batch arrays must be [batch, data_dim]");
    }

    auto x_sem_t = ad::make_tensor({n, dd}, {x_sem.begin(), x_sem.end()});
    auto x_syn_t = ad::make_tensor({n, dd}, {x_syn.begin(), x_syn.end()});
    auto y_t = ad::make_tensor({n, dd}, {y.begin(), y.end()});

    // Semantic branch: Gaussian posterior, reparameterized sample.
    auto sem_h = apply_mlp(tape, params.sem_trunk, x_sem_t, /*final_linear=*/false);
    auto mu = tape.linear(sem_h, params.sem_mu_w, params.sem_mu_b);
    auto log_sigma = tape.linear(sem_h, params.sem_log_sigma_w, params.sem_log_sigma_b);
    auto z_sem = tape.gaussian_sample(mu, log_sigma, rng);
    auto kl = tape.kl_std_normal(mu, log_sigma);

    ElboGraph graph;
    TensorPtr z_syn_input;   // what the decoder sees
    TensorPtr code_pred;

    auto syn_h = apply_mlp(tape, params.syn_trunk, x_syn_t, /*final_linear=*/false);
    auto z_syn = tape.linear(syn_h, params.syn_out_w, params.syn_out_b);

    if (cfg.gaussian_bottleneck) {
        auto syn_log_sigma = tape.linear(syn_h, params.syn_log_sigma_w, params.syn_log_sigma_b);
        z_syn_input = tape.gaussian_sample(z_syn, syn_log_sigma, rng);
        kl = tape.add(kl, tape.kl_std_normal(z_syn, syn_log_sigma));
        code_pred = ad::zeros({1});
    } else {
        const double tau = tau_at(cfg.schedule, step);

        // Per-level Gumbel noise, drawn level-major so a reseeded stream
        // replays identically.
        std::vector<TensorPtr> gumbel(cfg.depth);
        for (int d = 0; d < cfg.depth; ++d) {
            std::vector<double> g(n * k);
            for (double& v : g) {
                v = rng.gumbel();
            }
            gumbel[d] = ad::make_tensor({n, k}, std::move(g));
        }
        // Depth gates per sample; cumulative masks select how much of the
        // soft composition each row keeps.
        std::vector<TensorPtr> cum_mask(cfg.depth);
        {
            std::vector<std::vector<double>> col(cfg.depth, std::vector<double>(n));
            for (std::size_t i = 0; i < n; ++i) {
                const DepthMask mask = sample_depth_mask(cfg.p_depth, cfg.depth, rng);
                for (int d = 0; d < cfg.depth; ++d) {
                    col[d][i] = static_cast<double>(mask.cumulative[d]);
                }
            }
            for (int d = 0; d < cfg.depth; ++d) {
                cum_mask[d] = ad::make_tensor({n}, std::move(col[d]));
            }
        }

        graph.sampled_codes.assign(cfg.depth, std::vector<int>(n));
        TensorPtr residual = z_syn;
        TensorPtr composed;
        for (int d = 0; d < cfg.depth; ++d) {
            auto sqdist = tape.pairwise_sqdist(residual, params.codebook_levels[d]);
            auto scores = tape.scale(sqdist, -1.0);
            auto noisy = tape.scale(tape.add(scores, gumbel[d]), 1.0 / tau);
            // Hard samples (argmax of the noisy scores) become the
            // sketch-prediction targets.
            for (std::size_t i = 0; i < n; ++i) {
                const double* row = noisy->data.data() + i * k;
                graph.sampled_codes[d][i] =
                    static_cast<int>(std::max_element(row, row + k) - row);
            }
            auto weights = tape.softmax_rows(noisy);
            auto soft_cw = tape.matmul(weights, params.codebook_levels[d]);
            auto masked = tape.mul_colvec(soft_cw, cum_mask[d]);
            composed = composed ? tape.add(composed, masked) : masked;
            if (d + 1 < cfg.depth) {
                residual = tape.sub(residual, soft_cw);
            }
        }
        z_syn_input = composed;

        // Sketch heads see z_sem and the partial hard composition; both the
        // targets and the partial sums are detached constants.
        for (int d = 0; d < cfg.depth; ++d) {
            std::vector<double> partial(n * static_cast<std::size_t>(cfg.syn_dim), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double* row = partial.data() + i * cfg.syn_dim;
                for (int prev = 0; prev < d; ++prev) {
                    const double* e =
                        params.codebook_levels[prev]->data.data() +
                        static_cast<std::size_t>(graph.sampled_codes[prev][i]) * cfg.syn_dim;
                    for (int j = 0; j < cfg.syn_dim; ++j) {
                        row[j] += e[j];
                    }
                }
            }
            auto partial_t =
                ad::make_tensor({n, static_cast<std::size_t>(cfg.syn_dim)}, std::move(partial));
            auto head_in = tape.concat_cols(z_sem, partial_t);
            auto logits =
                apply_mlp(tape, params.sketch_heads[d], head_in, /*final_linear=*/true);
            auto ce = tape.cross_entropy(logits, graph.sampled_codes[d]);
            code_pred = code_pred ? tape.add(code_pred, ce) : ce;
        }
    }

    auto decoder_in = tape.concat_cols(z_sem, z_syn_input);
    auto y_hat = apply_mlp(tape, params.decoder, decoder_in, /*final_linear=*/true);
    auto recon = tape.mse(y_hat, y_t);

    auto total = tape.add(recon, tape.add(tape.scale(kl, cfg.kl_weight),
                                          tape.scale(code_pred, cfg.code_pred_weight)));
    graph.total = total;
    graph.recon = recon;
    graph.kl = kl;
    graph.code_pred = code_pred;
    return graph;
}

LossComponents elbo_loss(ModelParams& params, std::span<const double> x_sem,
                         std::span<const double> x_syn, std::span<const double> y, int batch,
                         long step, RngStream& rng) {
    Tape tape;
    const ElboGraph graph = build_elbo(tape, params, x_sem, x_syn, y, batch, step, rng);
    LossComponents out;
    out.total = graph.total->data[0];
    out.recon = graph.recon->data[0];
    out.kl = graph.kl->data[0];
    out.code_pred = graph.code_pred->data[0];
    if (!std::isfinite(out.total)) {
        throw NumericError("non-finite loss at step " + std::to_string(step));
    }
    return out;
}

namespace {

TrainResult run_training(ModelParams params, const synth::TripleSet& data, long start_step,
                         long steps) {
    if (data.n < 1) {
        throw DataError("training dataset is empty");
    }
    if (data.dim != params.data_dim) {
        throw ShapeError("dataset width does not match the model");
    }
    const TrainConfig& cfg = params.config;
    const auto dd = static_cast<std::size_t>(params.data_dim);
    const int batch = std::min<int>(cfg.batch_size, data.n);

    ad::AdamState adam;
    adam.lr = cfg.lr;
    auto parameters = params.parameters();

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(steps));

    std::vector<double> bx_sem(static_cast<std::size_t>(batch) * dd);
    std::vector<double> bx_syn(static_cast<std::size_t>(batch) * dd);
    std::vector<double> by(static_cast<std::size_t>(batch) * dd);

    Tape tape;
    for (long step = start_step; step < start_step + steps; ++step) {
        RngStream batch_rng(derive_seed(cfg.seed, "batch", static_cast<uint64_t>(step)));
        for (int i = 0; i < batch; ++i) {
            const int pick = batch_rng.uniform_int(data.n);
            std::copy_n(data.sem(pick), dd, bx_sem.data() + static_cast<std::size_t>(i) * dd);
            std::copy_n(data.syn(pick), dd, bx_syn.data() + static_cast<std::size_t>(i) * dd);
            std::copy_n(data.tgt(pick), dd, by.data() + static_cast<std::size_t>(i) * dd);
        }

        RngStream noise_rng(derive_seed(cfg.seed, "elbo", static_cast<uint64_t>(step)));
        const ElboGraph graph = build_elbo(tape, params, bx_sem, bx_syn, by, batch, step,
                                           noise_rng);
        if (!std::isfinite(graph.total->data[0])) {
            throw NumericError("training diverged: non-finite loss at step " +
                               std::to_string(step));
        }
        ad::zero_grads(parameters);
        tape.backward(graph.total);
        ad::adam_step(parameters, adam);
        tape.clear();

        result.history.push_back({step, graph.recon->data[0], graph.kl->data[0],
                                  graph.code_pred->data[0], tau_at(cfg.schedule, step)});
    }
    result.params = std::move(params);
    return result;
}

} // namespace

TrainResult train(const TrainConfig& config, const synth::TripleSet& data) {
    config.validate();
    return run_training(init_model(config, data.dim), data, 0, config.steps);
}

TrainResult train_from(ModelParams params, const synth::TripleSet& data, long start_step,
                       long steps) {
    if (start_step < 0 || steps < 0) {
        throw ConfigError("start_step and steps must be non-negative");
    }
    return run_training(std::move(params), data, start_step, steps);
}

SketchBeamResult predict_sketch(std::span<const double> z_sem, const ModelParams& params,
                                int beam_width) {
    if (beam_width < 1) {
        throw ConfigError("beam_width must be >= 1");
    }
    if (static_cast<int>(z_sem.size()) != params.config.sem_dim) {
        throw ShapeError("z_sem width does not match the model");
    }
    const int depth = params.config.depth;
    const int k = params.config.codes_per_level;
    const int syn = params.config.syn_dim;

    struct Hypothesis {
        HrqPath path;
        double log_prob = 0.0;
        std::vector<double> partial; // running composition
    };
    std::vector<Hypothesis> beam{{HrqPath{}, 0.0, std::vector<double>(syn, 0.0)}};

    for (int d = 0; d < depth; ++d) {
        std::vector<Hypothesis> expanded;
        expanded.reserve(beam.size() * static_cast<std::size_t>(k));
        for (const Hypothesis& hyp : beam) {
            const auto scores =
                log_softmax(head_logits(params, d, z_sem, hyp.partial));
            for (int q = 0; q < k; ++q) {
                Hypothesis next;
                next.path = hyp.path;
                next.path.push_back(q);
                next.log_prob = hyp.log_prob + scores[q];
                next.partial = hyp.partial;
                const double* e = params.codebook_levels[d]->data.data() +
                                  static_cast<std::size_t>(q) * syn;
                for (int j = 0; j < syn; ++j) {
                    next.partial[j] += e[j];
                }
                expanded.push_back(std::move(next));
            }
        }
        // Deterministic ranking: higher probability first, lexicographic
        // path order on ties.
        std::sort(expanded.begin(), expanded.end(), [](const Hypothesis& a, const Hypothesis& b) {
            if (a.log_prob != b.log_prob) {
                return a.log_prob > b.log_prob;
            }
            return a.path < b.path;
        });
        if (static_cast<int>(expanded.size()) > beam_width) {
            expanded.resize(static_cast<std::size_t>(beam_width));
        }
        beam = std::move(expanded);
    }

    SketchBeamResult result;
    result.paths.reserve(beam.size());
    for (const Hypothesis& hyp : beam) {
        result.paths.emplace_back(hyp.path, hyp.log_prob);
    }
    return result;
}

std::vector<std::vector<double>> generate(std::span<const double> x_sem,
                                          const ModelParams& params, int beam_width) {
    const auto z_sem = sem_mean(params, x_sem);
    const auto sketch = predict_sketch(z_sem, params, beam_width);
    const Codebook cb = params.codebook_snapshot();
    std::vector<std::vector<double>> outputs;
    outputs.reserve(sketch.paths.size());
    for (const auto& [path, log_prob] : sketch.paths) {
        outputs.push_back(decode(params, z_sem, compose(path, cb)));
    }
    return outputs;
}

std::vector<double> generate_truncated(std::span<const double> x_sem,
                                       const HrqPath& exemplar_path, int keep_levels,
                                       const ModelParams& params) {
    const int depth = params.config.depth;
    if (keep_levels < 0 || keep_levels > depth) {
        throw ConfigError("keep_levels must be in [0, depth]");
    }
    if (static_cast<int>(exemplar_path.size()) != depth) {
        throw ShapeError("exemplar path length does not match depth");
    }
    const int syn = params.config.syn_dim;
    std::vector<double> z_syn(syn, 0.0);
    for (int d = 0; d < keep_levels; ++d) {
        const double* e = params.codebook_levels[d]->data.data() +
                          static_cast<std::size_t>(exemplar_path[d]) * syn;
        for (int j = 0; j < syn; ++j) {
            z_syn[j] += e[j];
        }
    }
    return decode(params, sem_mean(params, x_sem), z_syn);
}

std::vector<double> sem_mean(const ModelParams& params, std::span<const double> x) {
    const auto h = apply_mlp_plain(params.sem_trunk, x, /*final_linear=*/false);
    return affine(h, params.sem_mu_w, params.sem_mu_b);
}

std::vector<double> syn_encode(const ModelParams& params, std::span<const double> x) {
    const auto h = apply_mlp_plain(params.syn_trunk, x, /*final_linear=*/false);
    return affine(h, params.syn_out_w, params.syn_out_b);
}

std::vector<double> decode(const ModelParams& params, std::span<const double> z_sem,
                           std::span<const double> z_syn) {
    std::vector<double> joint;
    joint.reserve(z_sem.size() + z_syn.size());
    joint.insert(joint.end(), z_sem.begin(), z_sem.end());
    joint.insert(joint.end(), z_syn.begin(), z_syn.end());
    return apply_mlp_plain(params.decoder, joint, /*final_linear=*/true);
}

std::vector<double> head_logits(const ModelParams& params, int level,
                                std::span<const double> z_sem,
                                std::span<const double> partial_sum) {
    if (level < 0 || level >= params.config.depth) {
        throw IndexError("head level out of range");
    }
    std::vector<double> joint;
    joint.reserve(z_sem.size() + partial_sum.size());
    joint.insert(joint.end(), z_sem.begin(), z_sem.end());
    joint.insert(joint.end(), partial_sum.begin(), partial_sum.end());
    return apply_mlp_plain(params.sketch_heads[static_cast<std::size_t>(level)], joint,
                           /*final_linear=*/true);
}

textio::Document checkpoint_to_doc(const ModelParams& params, long step) {
    const TrainConfig& cfg = params.config;
    textio::Document doc;
    doc.kind = "checkpoint";
    doc.set_meta("step", std::to_string(step));
    doc.set_meta("data_dim", std::to_string(params.data_dim));
    doc.set_meta("depth", std::to_string(cfg.depth));
    doc.set_meta("codes_per_level", std::to_string(cfg.codes_per_level));
    doc.set_meta("sem_dim", std::to_string(cfg.sem_dim));
    doc.set_meta("syn_dim", std::to_string(cfg.syn_dim));
    doc.set_meta("hidden_dim", std::to_string(cfg.hidden_dim));
    doc.set_meta("p_depth", textio::format_double(cfg.p_depth));
    doc.set_meta("alpha_init", textio::format_double(cfg.alpha_init));
    doc.set_meta("tau_init", textio::format_double(cfg.schedule.tau_init));
    doc.set_meta("tau_half_life", std::to_string(cfg.schedule.half_life_steps));
    doc.set_meta("tau_min", textio::format_double(cfg.schedule.tau_min));
    doc.set_meta("tau_mode", kTauModeNames[static_cast<int>(cfg.schedule.mode)]);
    doc.set_meta("batch_size", std::to_string(cfg.batch_size));
    doc.set_meta("steps", std::to_string(cfg.steps));
    doc.set_meta("lr", textio::format_double(cfg.lr));
    doc.set_meta("kl_weight", textio::format_double(cfg.kl_weight));
    doc.set_meta("code_pred_weight", textio::format_double(cfg.code_pred_weight));
    doc.set_meta("seed", std::to_string(cfg.seed));
    doc.set_meta("gaussian_bottleneck", cfg.gaussian_bottleneck ? "1" : "0");
    for (const auto& [name, tensor] : params.named_parameters()) {
        doc.arrays.push_back({name, tensor->shape, tensor->data});
    }
    return doc;
}

Checkpoint checkpoint_from_doc(const textio::Document& doc) {
    if (doc.kind != "checkpoint") {
        throw FormatError("expected a checkpoint document, got '" + doc.kind + "'");
    }
    TrainConfig cfg;
    cfg.depth = static_cast<int>(doc.meta_int("depth"));
    cfg.codes_per_level = static_cast<int>(doc.meta_int("codes_per_level"));
    cfg.sem_dim = static_cast<int>(doc.meta_int("sem_dim"));
    cfg.syn_dim = static_cast<int>(doc.meta_int("syn_dim"));
    cfg.hidden_dim = static_cast<int>(doc.meta_int("hidden_dim"));
    cfg.p_depth = doc.meta_double("p_depth");
    cfg.alpha_init = doc.meta_double("alpha_init");
    cfg.schedule.tau_init = doc.meta_double("tau_init");
    cfg.schedule.half_life_steps = static_cast<int>(doc.meta_int("tau_half_life"));
    cfg.schedule.tau_min = doc.meta_double("tau_min");
    const std::string mode = doc.require_meta("tau_mode");
    if (mode == kTauModeNames[0]) {
        cfg.schedule.mode = TauMode::ProseExponential;
    } else if (mode == kTauModeNames[1]) {
        cfg.schedule.mode = TauMode::PrintedSigmoid;
    } else {
        throw FormatError("unknown tau mode '" + mode + "'");
    }
    cfg.batch_size = static_cast<int>(doc.meta_int("batch_size"));
    cfg.steps = doc.meta_int("steps");
    cfg.lr = doc.meta_double("lr");
    cfg.kl_weight = doc.meta_double("kl_weight");
    cfg.code_pred_weight = doc.meta_double("code_pred_weight");
    cfg.seed = static_cast<uint64_t>(doc.meta_int("seed"));
    cfg.gaussian_bottleneck = doc.meta_int("gaussian_bottleneck") != 0;

    Checkpoint ckpt;
    ckpt.step = doc.meta_int("step");
    ckpt.params = init_model(cfg, static_cast<int>(doc.meta_int("data_dim")));
    for (auto& [name, tensor] : ckpt.params.named_parameters()) {
        const auto& arr = doc.require_array(name);
        if (arr.shape != tensor->shape) {
            throw FormatError("parameter '" + name + "' has the wrong shape");
        }
        tensor->data = arr.data;
    }
    return ckpt;
}

void save_checkpoint(const ModelParams& params, long step, const std::filesystem::path& path) {
    textio::save(checkpoint_to_doc(params, step), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_doc(textio::load(path));
}

} // namespace hrq::model
