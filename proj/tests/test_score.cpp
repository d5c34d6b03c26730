#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sgic/errors.hpp"
#include "sgic/score.hpp"
#include "sgic/util.hpp"

using namespace sgic;

namespace {

// Independent reference: plain left-to-right product of the floored probs.
double naive_product(const std::vector<double>& probs) {
    double p = 1.0;
    for (double x : probs) p *= std::max(x, kDefaultProbFloor);
    return p;
}

std::vector<double> random_probs(Rng& rng, std::size_t max_len) {
    std::vector<double> probs(1 + rng.index(max_len));
    for (double& p : probs) {
        // Mix ordinary, near-one, and sub-floor magnitudes.
        const double pick = rng.uniform(0.0, 1.0);
        if (pick < 0.1)
            p = rng.uniform(0.0, 1e-12);
        else if (pick < 0.2)
            p = rng.uniform(0.999, 1.0);
        else
            p = rng.uniform(1e-6, 1.0);
    }
    return probs;
}

}  // namespace

TEST_CASE("sequence confidence equals the naive product across 1000 random cases") {
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const auto probs = random_probs(rng, 40);
        const double got = sequence_confidence(TokenProbSequence::from_probs(probs)).value;
        CHECK(std::abs(got - naive_product(probs)) <= 1e-9);
        CHECK(got > 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("sequence confidence stays positive for long low-probability sequences") {
    // Representable case: both paths agree.
    std::vector<double> moderate(100, 0.05);
    const double got = sequence_confidence(TokenProbSequence::from_probs(moderate)).value;
    CHECK(got > 0.0);
    CHECK(std::abs(std::log(got) - 100 * std::log(0.05)) < 1e-9);
    // Beyond double range: the product saturates instead of collapsing to zero.
    std::vector<double> extreme(400, 0.01);
    const double sat = sequence_confidence(TokenProbSequence::from_probs(extreme)).value;
    CHECK(sat > 0.0);
    CHECK(sat == std::numeric_limits<double>::min());
}

TEST_CASE("token probability validation") {
    CHECK_THROWS_AS(TokenProbSequence::from_probs({}), InvalidInputError);
    CHECK_THROWS_AS(TokenProbSequence::from_probs({1.2}), InvalidInputError);
    CHECK_THROWS_AS(TokenProbSequence::from_probs({0.5}, 0.0), InvalidInputError);
    const auto floored = TokenProbSequence::from_probs({1e-30, 0.5});
    CHECK(floored.probs()[0] == kDefaultProbFloor);
    CHECK(floored.probs()[1] == 0.5);
}

TEST_CASE("logprob entry point matches exp of the inputs") {
    const auto seq = TokenProbSequence::from_logprobs({-0.5, -2.0});
    CHECK(seq.probs()[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(TokenProbSequence::from_logprobs({0.5}), InvalidInputError);
}

TEST_CASE("scaling maps the corpus mean exactly to the 50/50 midpoint") {
    Rng rng(202);
    for (int i = 0; i < 200; ++i) {
        const double m = rng.uniform(0.05, 0.95);
        const CorpusMean mean{m, 10, Split::validation};
        const auto at_mean = scale_answer_score(RawConfidence{m}, mean);
        CHECK(at_mean.confidence_scaled == 50.0);
        CHECK(at_mean.uncertainty == 50.0);
        CHECK_FALSE(at_mean.clamped);
    }
}

TEST_CASE("piecewise scaling is monotone, bounded, and never clamps") {
    Rng rng(303);
    for (int i = 0; i < 1000; ++i) {
        const CorpusMean mean{rng.uniform(0.05, 0.95), 10, Split::validation};
        double a = rng.uniform(1e-9, 1.0);
        double b = rng.uniform(1e-9, 1.0);
        if (a > b) std::swap(a, b);
        const auto lo = scale_answer_score(RawConfidence{a}, mean);
        const auto hi = scale_answer_score(RawConfidence{b}, mean);
        CHECK(lo.confidence_scaled <= hi.confidence_scaled);
        for (const auto& s : {lo, hi}) {
            CHECK(s.confidence_scaled >= 0.0);
            CHECK(s.confidence_scaled <= 100.0);
            CHECK(s.uncertainty == 100.0 - s.confidence_scaled);
            CHECK_FALSE(s.clamped);
        }
    }
}

TEST_CASE("as-printed scaling clamps low-confidence answers and flags it") {
    const CorpusMean mean{0.8, 10, Split::validation};
    const auto s = scale_answer_score(RawConfidence{0.1}, mean, ScaleMode::as_printed);
    CHECK(s.confidence_scaled == 0.0);
    CHECK(s.uncertainty == 100.0);
    CHECK(s.clamped);
    // Above the mean both modes agree.
    const auto above = scale_answer_score(RawConfidence{0.9}, mean, ScaleMode::as_printed);
    const auto piecewise = scale_answer_score(RawConfidence{0.9}, mean, ScaleMode::piecewise);
    CHECK(above.confidence_scaled == piecewise.confidence_scaled);
}

TEST_CASE("corpus mean validates its range and reports the population") {
    const std::vector<RawConfidence> raws{{0.2}, {0.6}, {0.7}};
    const CorpusMean m = corpus_mean(raws, Split::train);
    CHECK(m.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.population == 3);
    CHECK(m.split == Split::train);

    CHECK_THROWS_AS(corpus_mean({}, Split::train), InvalidInputError);
    const std::vector<RawConfidence> ones{{1.0}, {1.0}};
    CHECK_THROWS_AS(corpus_mean(ones, Split::train), DegenerateMeanError);
    CHECK_THROWS_AS(scale_answer_score(RawConfidence{0.5}, CorpusMean{1.0, 1, Split::train}),
                    DegenerateMeanError);
}

TEST_CASE("document raw uncertainty is one minus the probe product") {
    const auto seq = TokenProbSequence::from_probs({0.8, 0.5});
    CHECK(document_raw_uncertainty(seq) == doctest::Approx(1.0 - 0.4).epsilon(1e-12));
}

TEST_CASE("min-max document normalization: worked example") {
    // Probe products 0.8 / 0.5 / 0.2 leave raw uncertainties 0.2 / 0.5 / 0.8.
    const auto set = normalize_document_scores({0.2, 0.5, 0.8});
    REQUIRE(set.normalized.size() == 3);
    CHECK(set.normalized[0] == doctest::Approx(0.0));
    CHECK(set.normalized[1] == doctest::Approx(50.0));
    CHECK(set.normalized[2] == doctest::Approx(100.0));
    CHECK(set.raw == std::vector<double>{0.2, 0.5, 0.8});
}

TEST_CASE("min-max normalization is affine-invariant and rank-preserving") {
    Rng rng(404);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> raws(2 + rng.index(8));
        for (double& r : raws) r = rng.uniform(0.0, 1.0);
        if (raws[0] == raws[1]) raws[0] += 0.1;  // keep the range non-degenerate

        const auto base = normalize_document_scores(raws);
        const double a = rng.uniform(0.1, 5.0);
        const double b = rng.uniform(-3.0, 3.0);
        std::vector<double> shifted = raws;
        for (double& r : shifted) r = a * r + b;
        const auto affine = normalize_document_scores(shifted);

        for (std::size_t k = 0; k < raws.size(); ++k) {
            CHECK(std::abs(base.normalized[k] - affine.normalized[k]) <= 1e-9);
            CHECK(base.normalized[k] >= 0.0);
            CHECK(base.normalized[k] <= 100.0);
            for (std::size_t j = 0; j < raws.size(); ++j) {
                if (raws[k] < raws[j]) CHECK(base.normalized[k] <= base.normalized[j]);
            }
        }
    }
}

TEST_CASE("degenerate document score ranges collapse to the neutral midpoint") {
    const auto equal = normalize_document_scores({0.4, 0.4, 0.4});
    for (double v : equal.normalized) CHECK(v == 50.0);
    const auto single = normalize_document_scores({0.73});
    CHECK(single.normalized == std::vector<double>{50.0});
    CHECK_THROWS_AS(normalize_document_scores({}), InvalidInputError);
}
