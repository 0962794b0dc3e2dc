#include "hrq/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hrq/error.hpp"
#include "hrq/rng.hpp"

namespace hrq::synth {

namespace {

// Leaf means of the hierarchical tree plus the ancestor index per level for
// every leaf. Leaves are indexed depth-first so leaf -> ancestors is just
// repeated division by the branching factor.
struct MixtureTree {
    int levels = 0;
    int branching = 0;
    int dim = 0;
    std::vector<double> leaf_means; // [leaves][dim]

    int leaves() const {
        int n = 1;
        for (int l = 0; l < levels; ++l) {
            n *= branching;
        }
        return n;
    }
    // Ancestor index at `level` (0-based, coarse to fine) of `leaf`.
    int ancestor(int leaf, int level) const {
        int shift = 1;
        for (int l = level + 1; l < levels; ++l) {
            shift *= branching;
        }
        return leaf / shift;
    }
};

MixtureTree build_tree(const HierSpec& spec, RngStream& rng) {
    MixtureTree tree;
    tree.levels = spec.levels;
    tree.branching = spec.branching;
    tree.dim = spec.dim;

    // Expand level by level: every node mean = parent mean + scaled noise.
    std::vector<double> parents(1ull * spec.dim, 0.0);
    int parent_count = 1;
    for (int level = 0; level < spec.levels; ++level) {
        const double scale = spec.scales[level];
        std::vector<double> children(static_cast<std::size_t>(parent_count) * spec.branching *
                                     spec.dim);
        for (int p = 0; p < parent_count; ++p) {
            for (int b = 0; b < spec.branching; ++b) {
                double* child =
                    children.data() +
                    (static_cast<std::size_t>(p) * spec.branching + b) * spec.dim;
                const double* parent = parents.data() + static_cast<std::size_t>(p) * spec.dim;
                for (int j = 0; j < spec.dim; ++j) {
                    child[j] = parent[j] + scale * rng.normal();
                }
            }
        }
        parents = std::move(children);
        parent_count *= spec.branching;
    }
    tree.leaf_means = std::move(parents);
    return tree;
}

} // namespace

int HierSpec::leaf_count() const {
    int n = 1;
    for (int l = 0; l < levels; ++l) {
        n *= branching;
    }
    return n;
}

void HierSpec::validate() const {
    if (levels < 1 || dim < 1 || n_samples < 0) {
        throw ConfigError("mixture spec fields must be positive");
    }
    if (branching < 2) {
        throw ConfigError("branching must be >= 2");
    }
    if (static_cast<int>(scales.size()) != levels) {
        throw ConfigError("need one scale per level");
    }
    for (int l = 0; l < levels; ++l) {
        if (!(scales[l] > 0.0)) {
            throw ConfigError("scales must be positive");
        }
        if (l > 0 && !(scales[l] < scales[l - 1])) {
            throw ConfigError("scales must be strictly decreasing");
        }
    }
    if (!(noise_sigma > 0.0)) {
        throw ConfigError("noise_sigma must be positive");
    }
}

LabeledVectors gen_hier_mixture(const HierSpec& spec) {
    spec.validate();
    RngStream tree_rng(derive_seed(spec.seed, "mixture-tree"));
    RngStream sample_rng(derive_seed(spec.seed, "mixture-samples"));
    const MixtureTree tree = build_tree(spec, tree_rng);
    const int leaves = tree.leaves();

    LabeledVectors data;
    data.n = spec.n_samples;
    data.dim = spec.dim;
    data.levels = spec.levels;
    data.vectors.resize(static_cast<std::size_t>(spec.n_samples) * spec.dim);
    data.labels.resize(static_cast<std::size_t>(spec.n_samples) * spec.levels);

    for (int i = 0; i < spec.n_samples; ++i) {
        const int leaf = sample_rng.uniform_int(leaves);
        const double* mean = tree.leaf_means.data() + static_cast<std::size_t>(leaf) * spec.dim;
        double* v = data.vectors.data() + static_cast<std::size_t>(i) * spec.dim;
        for (int j = 0; j < spec.dim; ++j) {
            v[j] = mean[j] + spec.noise_sigma * sample_rng.normal();
        }
        for (int l = 0; l < spec.levels; ++l) {
            data.labels[static_cast<std::size_t>(i) * spec.levels + l] = tree.ancestor(leaf, l);
        }
    }
    return data;
}

TripleSet gen_paraphrase_analog(int n_contents, const HierSpec& form_spec, int dim_out,
                                int n_triples, uint64_t seed, const ParaOptions& opt) {
    if (n_contents < 2) {
        throw ConfigError("need at least 2 contents");
    }
    form_spec.validate();
    if (form_spec.leaf_count() < 2) {
        throw ConfigError("form hierarchy needs at least 2 leaves");
    }
    if (dim_out < 1 || n_triples < 0) {
        throw ConfigError("dim_out and n_triples must be positive");
    }
    if (opt.content_dim < 1 || !(opt.noise_sigma >= 0.0) ||
        opt.form_content_coupling < 0.0 || opt.form_content_coupling >= 1.0) {
        // coupling = 1 would pin x_sem's form to y's, which the off-role
        // constraint forbids.
        throw ConfigError("bad paraphrase-analog options");
    }

    RngStream factor_rng(derive_seed(seed, "para-factors"));
    RngStream map_rng(derive_seed(seed, "para-maps"));
    RngStream draw_rng(derive_seed(seed, "para-draws"));

    const MixtureTree form_tree = build_tree(form_spec, factor_rng);
    const int leaves = form_tree.leaves();

    // Content prototypes.
    std::vector<double> contents(static_cast<std::size_t>(n_contents) * opt.content_dim);
    for (double& v : contents) {
        v = opt.content_scale * factor_rng.normal();
    }

    // Fixed random linear maps into the observation space, scaled like
    // random projections so outputs stay O(factor scale).
    std::vector<double> map_a(static_cast<std::size_t>(opt.content_dim) * dim_out);
    for (double& v : map_a) {
        v = map_rng.normal() / std::sqrt(static_cast<double>(opt.content_dim));
    }
    std::vector<double> map_b(static_cast<std::size_t>(form_spec.dim) * dim_out);
    for (double& v : map_b) {
        v = map_rng.normal() / std::sqrt(static_cast<double>(form_spec.dim));
    }

    TripleSet set;
    set.n = n_triples;
    set.dim = dim_out;
    set.form_levels = form_spec.levels;
    set.x_sem.resize(static_cast<std::size_t>(n_triples) * dim_out);
    set.x_syn.resize(static_cast<std::size_t>(n_triples) * dim_out);
    set.y.resize(static_cast<std::size_t>(n_triples) * dim_out);
    set.content_id.resize(n_triples);
    set.form_path.resize(static_cast<std::size_t>(n_triples) * form_spec.levels);

    auto draw_form_leaf = [&](int content) {
        if (opt.form_content_coupling > 0.0 &&
            draw_rng.uniform() < opt.form_content_coupling) {
            return content % leaves; // the content's preferred leaf
        }
        return draw_rng.uniform_int(leaves);
    };

    // Observation = A content + weight * B (leaf mean + within-leaf jitter) + noise.
    auto emit = [&](double* out, int content, int leaf) {
        const double* cvec = contents.data() + static_cast<std::size_t>(content) * opt.content_dim;
        std::vector<double> fvec(form_spec.dim);
        const double* mean = form_tree.leaf_means.data() + static_cast<std::size_t>(leaf) * form_spec.dim;
        for (int j = 0; j < form_spec.dim; ++j) {
            fvec[j] = mean[j] + form_spec.noise_sigma * draw_rng.normal();
        }
        for (int j = 0; j < dim_out; ++j) {
            double v = 0.0;
            for (int k = 0; k < opt.content_dim; ++k) {
                v += cvec[k] * map_a[static_cast<std::size_t>(k) * dim_out + j];
            }
            for (int k = 0; k < form_spec.dim; ++k) {
                v += opt.form_weight * fvec[k] * map_b[static_cast<std::size_t>(k) * dim_out + j];
            }
            out[j] = v + opt.noise_sigma * draw_rng.normal();
        }
    };

    for (int i = 0; i < n_triples; ++i) {
        const int content = draw_rng.uniform_int(n_contents);
        const int leaf = draw_form_leaf(content);

        // Off-role factors must differ from y's.
        int sem_leaf = draw_form_leaf(content);
        while (sem_leaf == leaf) {
            sem_leaf = draw_form_leaf(content);
        }
        int syn_content = draw_rng.uniform_int(n_contents);
        while (syn_content == content) {
            syn_content = draw_rng.uniform_int(n_contents);
        }

        emit(set.y.data() + static_cast<std::size_t>(i) * dim_out, content, leaf);
        emit(set.x_sem.data() + static_cast<std::size_t>(i) * dim_out, content, sem_leaf);
        emit(set.x_syn.data() + static_cast<std::size_t>(i) * dim_out, syn_content, leaf);

        set.content_id[i] = content;
        for (int l = 0; l < form_spec.levels; ++l) {
            set.form_path[static_cast<std::size_t>(i) * form_spec.levels + l] =
                form_tree.ancestor(leaf, l);
        }
    }
    return set;
}

double cluster_purity(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.empty() || predicted.size() != truth.size()) {
        throw UsageError("cluster_purity: label arrays must be non-empty and aligned");
    }
    std::map<int, std::map<int, long>> by_cluster;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++by_cluster[predicted[i]][truth[i]];
    }
    long majority_total = 0;
    for (const auto& [cluster, counts] : by_cluster) {
        long best = 0;
        for (const auto& [label, count] : counts) {
            best = std::max(best, count);
        }
        majority_total += best;
    }
    return static_cast<double>(majority_total) / static_cast<double>(predicted.size());
}

TripleSet autoencode_triples(const LabeledVectors& data) {
    TripleSet set;
    set.n = data.n;
    set.dim = data.dim;
    set.form_levels = data.levels;
    set.x_sem = data.vectors;
    set.x_syn = data.vectors;
    set.y = data.vectors;
    set.form_path = data.labels;
    set.content_id.resize(data.n);
    for (int i = 0; i < data.n; ++i) {
        set.content_id[i] = data.label(i, data.levels - 1); // leaf index
    }
    return set;
}

std::pair<TripleSet, TripleSet> split_triples(const TripleSet& data, int n_train) {
    if (n_train < 1 || n_train >= data.n) {
        throw ConfigError("n_train must leave both splits non-empty");
    }
    auto take = [&](int from, int count) {
        TripleSet out;
        out.n = count;
        out.dim = data.dim;
        out.form_levels = data.form_levels;
        const std::size_t d = static_cast<std::size_t>(data.dim);
        const std::size_t f = static_cast<std::size_t>(data.form_levels);
        out.x_sem.assign(data.x_sem.begin() + from * d, data.x_sem.begin() + (from + count) * d);
        out.x_syn.assign(data.x_syn.begin() + from * d, data.x_syn.begin() + (from + count) * d);
        out.y.assign(data.y.begin() + from * d, data.y.begin() + (from + count) * d);
        out.content_id.assign(data.content_id.begin() + from, data.content_id.begin() + from + count);
        out.form_path.assign(data.form_path.begin() + from * f,
                             data.form_path.begin() + (from + count) * f);
        return out;
    };
    return {take(0, n_train), take(n_train, data.n - n_train)};
}

textio::Document mixture_to_doc(const LabeledVectors& data) {
    textio::Document doc;
    doc.kind = "dataset-mixture";
    doc.set_meta("n", std::to_string(data.n));
    doc.set_meta("dim", std::to_string(data.dim));
    doc.set_meta("levels", std::to_string(data.levels));
    doc.arrays.push_back({"vectors",
                          {static_cast<std::size_t>(data.n), static_cast<std::size_t>(data.dim)},
                          data.vectors});
    textio::IntArray labels;
    labels.name = "labels";
    labels.shape = {static_cast<std::size_t>(data.n), static_cast<std::size_t>(data.levels)};
    labels.data.assign(data.labels.begin(), data.labels.end());
    doc.iarrays.push_back(std::move(labels));
    return doc;
}

LabeledVectors mixture_from_doc(const textio::Document& doc) {
    if (doc.kind != "dataset-mixture") {
        throw FormatError("expected a dataset-mixture document, got '" + doc.kind + "'");
    }
    LabeledVectors data;
    data.n = static_cast<int>(doc.meta_int("n"));
    data.dim = static_cast<int>(doc.meta_int("dim"));
    data.levels = static_cast<int>(doc.meta_int("levels"));
    data.vectors = doc.require_array("vectors").data;
    const auto& labels = doc.require_iarray("labels");
    data.labels.assign(labels.data.begin(), labels.data.end());
    if (data.vectors.size() != static_cast<std::size_t>(data.n) * data.dim ||
        data.labels.size() != static_cast<std::size_t>(data.n) * data.levels) {
        throw FormatError("dataset-mixture arrays do not match the header");
    }
    return data;
}

textio::Document triples_to_doc(const TripleSet& data) {
    textio::Document doc;
    doc.kind = "dataset-triples";
    doc.set_meta("n", std::to_string(data.n));
    doc.set_meta("dim", std::to_string(data.dim));
    doc.set_meta("form_levels", std::to_string(data.form_levels));
    const std::vector<std::size_t> shape = {static_cast<std::size_t>(data.n),
                                            static_cast<std::size_t>(data.dim)};
    doc.arrays.push_back({"x_sem", shape, data.x_sem});
    doc.arrays.push_back({"x_syn", shape, data.x_syn});
    doc.arrays.push_back({"y", shape, data.y});
    textio::IntArray content;
    content.name = "content_id";
    content.shape = {static_cast<std::size_t>(data.n)};
    content.data.assign(data.content_id.begin(), data.content_id.end());
    doc.iarrays.push_back(std::move(content));
    textio::IntArray form;
    form.name = "form_path";
    form.shape = {static_cast<std::size_t>(data.n), static_cast<std::size_t>(data.form_levels)};
    form.data.assign(data.form_path.begin(), data.form_path.end());
    doc.iarrays.push_back(std::move(form));
    return doc;
}

TripleSet triples_from_doc(const textio::Document& doc) {
    if (doc.kind != "dataset-triples") {
        throw FormatError("expected a dataset-triples document, got '" + doc.kind + "'");
    }
    TripleSet data;
    data.n = static_cast<int>(doc.meta_int("n"));
    data.dim = static_cast<int>(doc.meta_int("dim"));
    data.form_levels = static_cast<int>(doc.meta_int("form_levels"));
    data.x_sem = doc.require_array("x_sem").data;
    data.x_syn = doc.require_array("x_syn").data;
    data.y = doc.require_array("y").data;
    const auto& content = doc.require_iarray("content_id");
    data.content_id.assign(content.data.begin(), content.data.end());
    const auto& form = doc.require_iarray("form_path");
    data.form_path.assign(form.data.begin(), form.data.end());
    const std::size_t expect = static_cast<std::size_t>(data.n) * data.dim;
    if (data.x_sem.size() != expect || data.x_syn.size() != expect || data.y.size() != expect ||
        data.content_id.size() != static_cast<std::size_t>(data.n) ||
        data.form_path.size() != static_cast<std::size_t>(data.n) * data.form_levels) {
        throw FormatError("dataset-triples arrays do not match the header");
    }
    return data;
}

} // namespace hrq::synth
