#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sgic {

inline constexpr double kDefaultProbFloor = 1e-12;

// Per-token emitted probabilities of one generation, validated and floored.
// Under greedy decoding the emitted-token probability equals the per-position
// maximum, which is what the confidence product is defined over.
class TokenProbSequence {
public:
    // Validates: non-empty, every element <= 1; elements below `floor` are
    // clamped to `floor`. Elements > 1 are rejected.
    static TokenProbSequence from_probs(std::vector<double> probs, double floor = kDefaultProbFloor);

    // Convenience for backends that report logprobs of emitted tokens.
    static TokenProbSequence from_logprobs(const std::vector<double>& logprobs,
                                           double floor = kDefaultProbFloor);

    const std::vector<double>& probs() const { return probs_; }
    std::size_t size() const { return probs_.size(); }

private:
    explicit TokenProbSequence(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::vector<double> probs_;
};

// Product of emitted-token probabilities; the raw answer confidence.
struct RawConfidence {
    double value = 0.0;  // in (0, 1]
};

enum class Split { train, validation, test, custom };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Mean raw confidence over every generated answer of one split. Must lie
// strictly inside (0, 1) or scaling is undefined.
struct CorpusMean {
    double value = 0.0;
    std::size_t population = 0;
    Split split = Split::custom;
};

enum class ScaleMode {
    piecewise,   // divide by mean below the mean, by (1 - mean) above; bounded, no clamping
    as_printed,  // divide by (1 - mean) everywhere; can exceed [-1, 1], clamped
};

// Answer score on the 0-100 display scale. confidence + uncertainty == 100.
struct ScaledAnswerScore {
    double confidence_scaled = 0.0;  // [0, 100]
    double uncertainty = 0.0;        // 100 - confidence_scaled
    bool clamped = false;            // true iff the [0, 100] clamp fired
};

// Per-document uncertainty scores: raw values and their min-max normalization
// onto [0, 100]. A degenerate range (all equal, or a single document) maps
// every score to the neutral 50.
struct DocScoreSet {
    std::vector<double> raw;
    std::vector<double> normalized;
};

RawConfidence sequence_confidence(const TokenProbSequence& probs);

CorpusMean corpus_mean(std::span<const RawConfidence> raws, Split split);

ScaledAnswerScore scale_answer_score(RawConfidence raw, const CorpusMean& mean,
                                     ScaleMode mode = ScaleMode::piecewise);

// 1 - product of probe-token probabilities; in [0, 1).
double document_raw_uncertainty(const TokenProbSequence& probs);

DocScoreSet normalize_document_scores(const std::vector<double>& raws);

// Hook for swapping in a different sequence-level estimator. Only the
// probability product ships; everything downstream goes through this type.
using SequenceScorer = std::function<double(const TokenProbSequence&)>;

inline SequenceScorer product_scorer() {
    return [](const TokenProbSequence& p) { return sequence_confidence(p).value; };
}

}  // namespace sgic
