#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrq/codebook.hpp"
#include "hrq/model.hpp"
#include "hrq/synthdata.hpp"

namespace hrq::baselines {

// Lloyd's algorithm with k-means++ seeding. Assignment ties break toward the
// lowest centroid index; empty clusters are re-seeded to the point farthest
// from its current centroid.
struct KmeansResult {
    std::vector<double> centroids; // [k][dim]
    std::vector<int> assignments;  // [n]
    std::vector<double> iteration_distortion; // total sq distance after each iteration
};

KmeansResult kmeans(const std::vector<double>& points, int n, int dim, int k, int iters,
                    uint64_t seed);

// Level-by-level k-means over residuals: level 0 clusters the vectors, each
// deeper level clusters what the shallower levels left behind. The result is
// a codebook usable by every quantizer operation.
Codebook recursive_kmeans(const std::vector<double>& vectors, int n, int dim, int depth,
                          int codes_per_level, int iters, uint64_t seed);

enum class AblationKind {
    Full,
    NoInitScaling,
    NoHierarchy,
    NoDepthDropout,
    PostHocKMeans,
};

const char* ablation_name(AblationKind kind);
AblationKind ablation_from_name(const std::string& name);

// Config deltas for each variant: NoHierarchy flattens to depth 1 with
// depth*K codes (same total code rows), NoInitScaling sets alpha_init = 1,
// NoDepthDropout sets p_depth = 0.
model::TrainConfig apply_ablation(AblationKind kind, model::TrainConfig base);

struct AblationReport {
    std::string name;
    uint64_t seed = 0;
    double distortion = 0.0;  // relative quantization distortion on eval
    double recon_error = 0.0; // oracle-sketch full-depth generation error
    std::vector<double> code_pred_accuracy; // per level
    std::vector<double> truncation_error;   // keep = 0..depth
};

// Trains the variant and evaluates on the held-out split. PostHocKMeans
// first trains a continuous Gaussian-bottleneck model, fits recursive
// k-means on the frozen syntactic encodings, then trains the sketch heads
// against the resulting paths.
AblationReport run_ablation(AblationKind kind, const synth::TripleSet& train_set,
                            const synth::TripleSet& eval_set, const model::TrainConfig& base);

} // namespace hrq::baselines
