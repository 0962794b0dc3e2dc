#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hrq/codebook.hpp"
#include "hrq/synthdata.hpp"
#include "hrq/tensor.hpp"

namespace hrq::model {

// Hyperparameters for the dual-branch model. Widths follow the desk-scale
// defaults; the paper-scale values are accepted through the same fields.
struct TrainConfig {
    int depth = 3;
    int codes_per_level = 16;
    int sem_dim = 16;
    int syn_dim = 48;
    int hidden_dim = 64;
    double p_depth = 0.3;
    double alpha_init = 0.5;
    GumbelSchedule schedule;
    int batch_size = 64;
    long steps = 2000;
    double lr = 0.01;
    double kl_weight = 1.0;
    double code_pred_weight = 1.0;
    uint64_t seed = 1;
    // Continuous Gaussian syntactic bottleneck instead of HRQ; used by the
    // post-hoc clustering baseline.
    bool gaussian_bottleneck = false;

    void validate() const;
};

// Two-layer tanh trunk / stack. apply_* helpers put tanh after every layer
// except, optionally, the last.
struct Mlp {
    std::vector<ad::TensorPtr> weights;
    std::vector<ad::TensorPtr> biases;
};

struct ModelParams {
    TrainConfig config;
    int data_dim = 0;

    Mlp sem_trunk; // data_dim -> hidden -> hidden, tanh throughout
    ad::TensorPtr sem_mu_w, sem_mu_b;
    ad::TensorPtr sem_log_sigma_w, sem_log_sigma_b;

    Mlp syn_trunk; // data_dim -> hidden -> hidden, tanh throughout
    ad::TensorPtr syn_out_w, syn_out_b;
    ad::TensorPtr syn_log_sigma_w, syn_log_sigma_b; // gaussian bottleneck only

    Mlp decoder; // sem_dim+syn_dim -> hidden -> hidden -> data_dim

    std::vector<ad::TensorPtr> codebook_levels; // depth x [K, syn_dim]
    std::vector<Mlp> sketch_heads; // depth x (sem_dim+syn_dim -> hidden -> hidden -> K)

    std::vector<ad::TensorPtr> parameters() const;
    std::vector<std::pair<std::string, ad::TensorPtr>> named_parameters() const;
    Codebook codebook_snapshot() const;
};

ModelParams init_model(const TrainConfig& config, int data_dim);

struct LossComponents {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    double code_pred = 0.0;
};

struct ElboGraph {
    ad::TensorPtr total;
    ad::TensorPtr recon;
    ad::TensorPtr kl;
    ad::TensorPtr code_pred;
    std::vector<std::vector<int>> sampled_codes; // [depth][batch]
};

// Builds the training objective on `tape` for a batch laid out row-major.
// Noise (Gaussian reparameterization, Gumbel, depth gates) is drawn from
// `rng` in a fixed order, so a reseeded stream replays the same graph.
ElboGraph build_elbo(ad::Tape& tape, ModelParams& params,
                     std::span<const double> x_sem, std::span<const double> x_syn,
                     std::span<const double> y, int batch, long step, RngStream& rng);

// Loss evaluation without a parameter update.
LossComponents elbo_loss(ModelParams& params, std::span<const double> x_sem,
                         std::span<const double> x_syn, std::span<const double> y, int batch,
                         long step, RngStream& rng);

struct HistoryRow {
    long step = 0;
    double recon = 0.0;
    double kl = 0.0;
    double code_pred = 0.0;
    double tau = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<HistoryRow> history;
};

TrainResult train(const TrainConfig& config, const synth::TripleSet& data);
// Resume variant: continues the schedule and sub-streams at `start_step`.
TrainResult train_from(ModelParams params, const synth::TripleSet& data, long start_step,
                       long steps);

struct SketchBeamResult {
    // Complete paths with total log-probability, best first.
    std::vector<std::pair<HrqPath, double>> paths;
};

// Beam search over the per-level sketch heads conditioned on z_sem and the
// partial composition of the path so far.
SketchBeamResult predict_sketch(std::span<const double> z_sem, const ModelParams& params,
                                int beam_width);

// Decode the top beam_width predicted sketches with the posterior-mean
// semantic encoding of x_sem.
std::vector<std::vector<double>> generate(std::span<const double> x_sem,
                                          const ModelParams& params, int beam_width);

// Oracle-sketch generation truncated to the first keep_levels codes;
// keep_levels = 0 decodes from the zero syntactic vector.
std::vector<double> generate_truncated(std::span<const double> x_sem,
                                       const HrqPath& exemplar_path, int keep_levels,
                                       const ModelParams& params);

// Plain (non-tape) forward helpers used at evaluation time.
std::vector<double> sem_mean(const ModelParams& params, std::span<const double> x);
std::vector<double> syn_encode(const ModelParams& params, std::span<const double> x);
std::vector<double> decode(const ModelParams& params, std::span<const double> z_sem,
                           std::span<const double> z_syn);
std::vector<double> head_logits(const ModelParams& params, int level,
                                std::span<const double> z_sem,
                                std::span<const double> partial_sum);

// Checkpoint = config + step + every named parameter array.
struct Checkpoint {
    ModelParams params;
    long step = 0;
};

textio::Document checkpoint_to_doc(const ModelParams& params, long step);
Checkpoint checkpoint_from_doc(const textio::Document& doc);
void save_checkpoint(const ModelParams& params, long step, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace hrq::model
