#include "sgic/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgic/errors.hpp"

namespace sgic {

TokenProbSequence TokenProbSequence::from_probs(std::vector<double> probs, double floor) {
    if (probs.empty()) {
        throw InvalidInputError("token probability sequence is empty");
    }
    if (floor <= 0.0 || floor > 1.0) {
        throw InvalidInputError("probability floor must be in (0, 1]");
    }
    for (double& p : probs) {
        if (!std::isfinite(p) || p > 1.0) {
            throw InvalidInputError("token probability out of range: " + std::to_string(p));
        }
        if (p < floor) p = floor;
    }
    return TokenProbSequence(std::move(probs));
}

TokenProbSequence TokenProbSequence::from_logprobs(const std::vector<double>& logprobs,
                                                   double floor) {
    std::vector<double> probs;
    probs.reserve(logprobs.size());
    for (double lp : logprobs) {
        if (!std::isfinite(lp) || lp > 0.0) {
            throw InvalidInputError("token logprob out of range: " + std::to_string(lp));
        }
        probs.push_back(std::exp(lp));
    }
    return from_probs(std::move(probs), floor);
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
        case Split::custom: return "custom";
    }
    return "custom";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation" || s == "dev") return Split::validation;
    if (s == "test") return Split::test;
    if (s == "custom") return Split::custom;
    throw InvalidInputError("unknown split: " + s);
}

RawConfidence sequence_confidence(const TokenProbSequence& probs) {
    // Log-space product; lengths up to a few hundred tokens underflow a naive
    // product long before they underflow the sum of logs. Products too small
    // for a double saturate at the smallest normal value to stay positive.
    double log_sum = 0.0;
    for (double p : probs.probs()) {
        log_sum += std::log(p);
    }
    return RawConfidence{std::max(std::exp(log_sum), std::numeric_limits<double>::min())};
}

CorpusMean corpus_mean(std::span<const RawConfidence> raws, Split split) {
    if (raws.empty()) {
        throw InvalidInputError("corpus mean over an empty answer set");
    }
    double sum = 0.0;
    for (const RawConfidence& r : raws) sum += r.value;
    const double mean = sum / static_cast<double>(raws.size());
    if (mean <= 0.0 || mean >= 1.0) {
        throw DegenerateMeanError("corpus mean " + std::to_string(mean) +
                                  " leaves the answer scale undefined");
    }
    return CorpusMean{mean, raws.size(), split};
}

ScaledAnswerScore scale_answer_score(RawConfidence raw, const CorpusMean& mean, ScaleMode mode) {
    const double m = mean.value;
    if (m <= 0.0 || m >= 1.0) {
        throw DegenerateMeanError("corpus mean must lie strictly inside (0, 1)");
    }
    double shifted;
    if (mode == ScaleMode::piecewise && raw.value < m) {
        shifted = (raw.value - m) / m;
    } else {
        shifted = (raw.value - m) / (1.0 - m);
    }
    ScaledAnswerScore out;
    double conf = 100.0 * (0.5 + 0.5 * shifted);
    if (conf < 0.0) {
        conf = 0.0;
        out.clamped = true;
    } else if (conf > 100.0) {
        conf = 100.0;
        out.clamped = true;
    }
    out.confidence_scaled = conf;
    out.uncertainty = 100.0 - conf;
    return out;
}

double document_raw_uncertainty(const TokenProbSequence& probs) {
    return 1.0 - sequence_confidence(probs).value;
}

DocScoreSet normalize_document_scores(const std::vector<double>& raws) {
    if (raws.empty()) {
        throw InvalidInputError("no document scores to normalize");
    }
    const auto [lo_it, hi_it] = std::minmax_element(raws.begin(), raws.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    DocScoreSet out;
    out.raw = raws;
    out.normalized.reserve(raws.size());
    if (hi == lo) {
        // No document is distinguished; neutral midpoint for all.
        out.normalized.assign(raws.size(), 50.0);
        return out;
    }
    for (double r : raws) {
        // Ratio first: lo/hi endpoints then land on 0 and 100 exactly, and the
        // clamp absorbs the last rounding step of the scale-up.
        const double ratio = (r - lo) / (hi - lo);
        out.normalized.push_back(std::clamp(100.0 * ratio, 0.0, 100.0));
    }
    return out;
}

}  // namespace sgic
