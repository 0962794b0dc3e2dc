#pragma once

#include <vector>

#include "hrq/model.hpp"
#include "hrq/synthdata.hpp"

namespace hrq::eval {

// Hard quantization path of the syntactic encoding of every row.
std::vector<HrqPath> oracle_paths(const model::ModelParams& params,
                                  const synth::TripleSet& data);

// Mean squared residual of the syntactic encodings after keeping the first
// k levels of their hard quantization, for k = 0..depth. Entry 0 is the mean
// squared encoding norm.
std::vector<double> residual_distortion_curve(const model::ModelParams& params,
                                              const synth::TripleSet& data);

// Full-depth quantization distortion normalized by the variance of the
// encodings, so models with differently scaled encoders stay comparable.
double relative_distortion(const model::ModelParams& params, const synth::TripleSet& data);

// Same measure for an externally fitted codebook over raw vectors.
double relative_distortion_on(const Codebook& cb, const std::vector<double>& vectors, int n,
                              int dim);

// Mean squared error of oracle-sketch generation truncated to k levels,
// k = 0..depth.
std::vector<double> truncated_generation_errors(const model::ModelParams& params,
                                                const synth::TripleSet& data);

// Fraction of rows whose greedy sketch prediction matches the oracle path,
// per level.
std::vector<double> sketch_accuracy(const model::ModelParams& params,
                                    const synth::TripleSet& data);

// Composite cluster id of the first `prefix` codes of each path.
std::vector<int> path_prefix_ids(const std::vector<HrqPath>& paths, int prefix,
                                 int codes_per_level);

// Mean squared reconstruction error of full-model generation: top-1
// predicted sketch decoded with the posterior-mean semantics.
double generation_error(const model::ModelParams& params, const synth::TripleSet& data,
                        int beam_width);

} // namespace hrq::eval
