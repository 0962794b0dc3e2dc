#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace hrq::metrics {

using Tokens = std::vector<std::string>;

// Hypotheses with one or more references per segment, aligned by index.
struct Corpus {
    std::vector<Tokens> hypotheses;
    std::vector<std::vector<Tokens>> references;
};

// Raw corpus-level n-gram counts, exposed so tests can check clipping and
// brevity bookkeeping directly.
struct BleuStats {
    std::array<long, 4> matched{};  // clipped n-gram matches, n = 1..4
    std::array<long, 4> possible{}; // hypothesis n-gram totals
    long hyp_len = 0;
    long ref_len = 0; // closest reference length per segment, ties to shorter
};

BleuStats corpus_stats(const Corpus& corpus);
double bleu_from_stats(const BleuStats& stats);

// Corpus BLEU on the 0..100 scale: geometric mean of the four modified
// n-gram precisions times the brevity penalty, no smoothing. Returns 0 when
// any precision is 0.
double corpus_bleu(const Corpus& corpus);

// alpha * bleu_refs - (1 - alpha) * bleu_inputs
double ibleu(double bleu_refs, double bleu_inputs, double alpha);

// corpus_bleu with the inputs as single references.
double self_bleu(const std::vector<Tokens>& outputs, const std::vector<Tokens>& inputs);

// Mean over ordered pairs (i, j), i != j, of corpus_bleu with candidate list
// i as hypotheses and list j as single references. candidate_sets[s][i] is
// candidate i for input s; every set must have the same count >= 2.
double pairwise_bleu(const std::vector<std::vector<Tokens>>& candidate_sets);

struct MetricReport {
    double bleu = 0.0;
    double self_bleu = 0.0;
    double ibleu = 0.0;
    double p_bleu = 0.0;
    double alpha = 0.8;
};

MetricReport make_report(double bleu, double self_bleu, double alpha, double p_bleu = 0.0);

// Whitespace tokenization, lowercased unless disabled.
Tokens tokenize(std::string_view line, bool lowercase = true);

// Half-up rounding to 2 decimals, as used in reports.
double round_report(double v);

} // namespace hrq::metrics
