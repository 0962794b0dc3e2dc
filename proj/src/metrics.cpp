#include "hrq/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

#include "hrq/error.hpp"

namespace hrq::metrics {

namespace {

constexpr int kMaxOrder = 4;

// Joined n-gram -> count. Tokens cannot contain spaces after tokenize(), and
// for pre-tokenized input the joined key is still a faithful n-gram identity
// as long as callers keep tokens space-free.
using NgramCounts = std::map<std::string, long>;

NgramCounts count_ngrams(const Tokens& tokens, int order) {
    NgramCounts counts;
    if (static_cast<int>(tokens.size()) < order) {
        return counts;
    }
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < order; ++k) {
            key += ' ';
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

void validate(const Corpus& corpus) {
    if (corpus.hypotheses.empty()) {
        throw UsageError("empty corpus");
    }
    if (corpus.references.size() != corpus.hypotheses.size()) {
        throw UsageError("reference list length does not match hypothesis count");
    }
    for (const auto& refs : corpus.references) {
        if (refs.empty()) {
            throw UsageError("every segment needs at least one reference");
        }
    }
}

} // namespace

BleuStats corpus_stats(const Corpus& corpus) {
    validate(corpus);
    BleuStats stats;
    for (std::size_t s = 0; s < corpus.hypotheses.size(); ++s) {
        const Tokens& hyp = corpus.hypotheses[s];
        const auto& refs = corpus.references[s];

        const long hlen = static_cast<long>(hyp.size());
        stats.hyp_len += hlen;
        // Closest reference length; ties resolved toward the shorter one.
        long best_rlen = static_cast<long>(refs[0].size());
        for (const Tokens& ref : refs) {
            const long rlen = static_cast<long>(ref.size());
            const long d_new = std::labs(rlen - hlen);
            const long d_old = std::labs(best_rlen - hlen);
            if (d_new < d_old || (d_new == d_old && rlen < best_rlen)) {
                best_rlen = rlen;
            }
        }
        stats.ref_len += best_rlen;

        for (int order = 1; order <= kMaxOrder; ++order) {
            const auto hyp_counts = count_ngrams(hyp, order);
            if (hyp_counts.empty()) {
                continue; // segment shorter than the order
            }
            NgramCounts max_ref_counts;
            for (const Tokens& ref : refs) {
                for (const auto& [key, count] : count_ngrams(ref, order)) {
                    long& slot = max_ref_counts[key];
                    slot = std::max(slot, count);
                }
            }
            for (const auto& [key, count] : hyp_counts) {
                stats.possible[order - 1] += count;
                const auto it = max_ref_counts.find(key);
                if (it != max_ref_counts.end()) {
                    stats.matched[order - 1] += std::min(count, it->second);
                }
            }
        }
    }
    return stats;
}

double bleu_from_stats(const BleuStats& stats) {
    double log_precision_sum = 0.0;
    for (int n = 0; n < kMaxOrder; ++n) {
        if (stats.matched[n] == 0 || stats.possible[n] == 0) {
            return 0.0; // no smoothing
        }
        log_precision_sum += std::log(static_cast<double>(stats.matched[n]) /
                                      static_cast<double>(stats.possible[n]));
    }
    double brevity = 1.0;
    if (stats.hyp_len == 0) {
        return 0.0;
    }
    if (stats.hyp_len < stats.ref_len) {
        brevity = std::exp(1.0 - static_cast<double>(stats.ref_len) /
                                     static_cast<double>(stats.hyp_len));
    }
    return 100.0 * brevity * std::exp(log_precision_sum / kMaxOrder);
}

double corpus_bleu(const Corpus& corpus) {
    return bleu_from_stats(corpus_stats(corpus));
}

double ibleu(double bleu_refs, double bleu_inputs, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must be in [0, 1]");
    }
    return alpha * bleu_refs - (1.0 - alpha) * bleu_inputs;
}

double self_bleu(const std::vector<Tokens>& outputs, const std::vector<Tokens>& inputs) {
    if (outputs.size() != inputs.size()) {
        throw UsageError("self_bleu: outputs and inputs must be aligned");
    }
    Corpus corpus;
    corpus.hypotheses = outputs;
    corpus.references.reserve(inputs.size());
    for (const Tokens& in : inputs) {
        corpus.references.push_back({in});
    }
    return corpus_bleu(corpus);
}

double pairwise_bleu(const std::vector<std::vector<Tokens>>& candidate_sets) {
    if (candidate_sets.empty()) {
        throw UsageError("pairwise_bleu: no candidate sets");
    }
    const std::size_t m = candidate_sets[0].size();
    if (m < 2) {
        throw UsageError("pairwise_bleu: every set needs at least 2 candidates");
    }
    for (const auto& set : candidate_sets) {
        if (set.size() != m) {
            throw UsageError("pairwise_bleu: candidate counts differ between sets");
        }
    }
    double total = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) {
                continue;
            }
            Corpus corpus;
            corpus.hypotheses.reserve(candidate_sets.size());
            corpus.references.reserve(candidate_sets.size());
            for (const auto& set : candidate_sets) {
                corpus.hypotheses.push_back(set[i]);
                corpus.references.push_back({set[j]});
            }
            total += corpus_bleu(corpus);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

MetricReport make_report(double bleu, double self, double alpha, double p_bleu) {
    MetricReport report;
    report.bleu = bleu;
    report.self_bleu = self;
    report.alpha = alpha;
    report.ibleu = ibleu(bleu, self, alpha);
    report.p_bleu = p_bleu;
    return report;
}

Tokens tokenize(std::string_view line, bool lowercase) {
    Tokens tokens;
    std::string current;
    for (char ch : line) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(lowercase ? static_cast<char>(std::tolower(
                                              static_cast<unsigned char>(ch)))
                                        : ch);
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

double round_report(double v) {
    return std::floor(v * 100.0 + 0.5) / 100.0;
}

} // namespace hrq::metrics
