#pragma once

#include <cstdint>
#include <vector>

#include "hrq/textio.hpp"

namespace hrq::synth {

// Hierarchical Gaussian mixture: `branching` children per node over `levels`
// levels, each child mean perturbing its parent at a per-level scale. Scales
// must be strictly decreasing so deeper levels are genuinely finer.
struct HierSpec {
    int levels = 3;
    int branching = 4;
    int dim = 16;
    std::vector<double> scales = {8.0, 2.0, 0.5};
    int n_samples = 4096;
    double noise_sigma = 0.1;
    uint64_t seed = 1;

    int leaf_count() const;
    void validate() const;
};

// Samples plus their ancestor index at every level of the generating tree.
struct LabeledVectors {
    int n = 0;
    int dim = 0;
    int levels = 0;
    std::vector<double> vectors;    // [n][dim]
    std::vector<int> labels;        // [n][levels]; labels[i*levels+l] in [0, branching^(l+1))

    int label(int i, int level) const { return labels[static_cast<std::size_t>(i) * levels + level]; }
    const double* vec(int i) const { return vectors.data() + static_cast<std::size_t>(i) * dim; }
};

// Paraphrase-analog triples: y mixes a content factor and a form factor
// through fixed random linear maps; x_sem shares y's content with a
// different form, x_syn shares y's form with a different content.
struct TripleSet {
    int n = 0;
    int dim = 0;        // width of x_sem / x_syn / y
    int form_levels = 0;
    std::vector<double> x_sem; // [n][dim]
    std::vector<double> x_syn; // [n][dim]
    std::vector<double> y;     // [n][dim]
    std::vector<int> content_id; // [n]
    std::vector<int> form_path;  // [n][form_levels], ancestor index per level

    const double* sem(int i) const { return x_sem.data() + static_cast<std::size_t>(i) * dim; }
    const double* syn(int i) const { return x_syn.data() + static_cast<std::size_t>(i) * dim; }
    const double* tgt(int i) const { return y.data() + static_cast<std::size_t>(i) * dim; }
    int form_label(int i, int level) const {
        return form_path[static_cast<std::size_t>(i) * form_levels + level];
    }
};

struct ParaOptions {
    int content_dim = 8;
    double content_scale = 1.0;
    double form_weight = 1.0;   // 0 collapses the form factor (diagnostic mode)
    double noise_sigma = 0.05;
    // Probability that a triple's target form is the content's preferred
    // leaf rather than a uniform draw. 0 = independent factors.
    double form_content_coupling = 0.0;
};

LabeledVectors gen_hier_mixture(const HierSpec& spec);

TripleSet gen_paraphrase_analog(int n_contents, const HierSpec& form_spec, int dim_out,
                                int n_triples, uint64_t seed, const ParaOptions& opt = {});

// Fraction of points whose predicted cluster's majority truth label matches
// their own truth label.
double cluster_purity(const std::vector<int>& predicted, const std::vector<int>& truth);

// Autoencoding view of a mixture: x_sem = x_syn = y = vector, form_path =
// the mixture labels. Used when the model trains directly on clustered
// vectors rather than paraphrase-analog pairs.
TripleSet autoencode_triples(const LabeledVectors& data);

// Deterministic prefix/suffix split.
std::pair<TripleSet, TripleSet> split_triples(const TripleSet& data, int n_train);

// Serialization (kind "dataset-mixture" / "dataset-triples").
textio::Document mixture_to_doc(const LabeledVectors& data);
LabeledVectors mixture_from_doc(const textio::Document& doc);
textio::Document triples_to_doc(const TripleSet& data);
TripleSet triples_from_doc(const textio::Document& doc);

} // namespace hrq::synth
