#pragma once

#include <map>
#include <string>
#include <vector>

#include "sgic/calibrate.hpp"
#include "sgic/types.hpp"

namespace sgic {

// Standard extractive-QA normalization: lowercase, strip punctuation, drop
// the articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& text);

// 1 iff the normalized prediction equals any normalized gold.
int exact_match(const std::string& pred, const std::vector<std::string>& golds);

// Token-multiset F1 against each gold, maximum over golds, in [0, 1].
// Both sides empty after normalization -> 1; exactly one empty -> 0.
double f1_score(const std::string& pred, const std::vector<std::string>& golds);

// Rank-based (Mann-Whitney) AUROC of scores predicting label=true, ties
// counted half. Labels mark incorrect answers; scores are uncertainties.
double auroc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct PairMetrics {
    double em = 0.0;
    double f1 = 0.0;
};

// Per-sample EM/F1 for aligned prediction/gold lists. The parallel version
// splits across OpenMP threads; the serial one is the reference the tests and
// the benchmark compare against.
std::vector<PairMetrics> batch_metrics(const std::vector<std::string>& preds,
                                       const std::vector<std::vector<std::string>>& golds);
std::vector<PairMetrics> batch_metrics_serial(const std::vector<std::string>& preds,
                                              const std::vector<std::vector<std::string>>& golds);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SampleResult {
    std::string id;
    QType qtype = QType::single_hop;
    double em = 0.0;  // per-sample, in [0, 1]
    double f1 = 0.0;
};

struct EvalSlice {
    double em = 0.0;  // percentages
    double f1 = 0.0;
    long n = 0;
};

enum class Breakdown { overall, by_qtype };

struct EvalReport {
    EvalSlice overall;
    std::map<std::string, EvalSlice> by_qtype;  // keyed by qtype name; empty for overall-only

    json to_json() const;
    std::string to_text() const;  // aligned-column table
};

EvalReport report(const std::vector<SampleResult>& results, Breakdown breakdown);

// ---------------------------------------------------------------------------
// Round-transition analytics over calibration traces
// ---------------------------------------------------------------------------

struct TransitionCell {
    long count = 0;
    double mean_uncertainty = 0.0;  // of the destination round's answer
};

struct TrajectoryStats {
    long n_traces = 0;
    long excluded = 0;  // traces lacking correctness info
    long initially_incorrect = 0;
    // Of the initially-incorrect traces: final choice correct / final choice
    // incorrect after at least one answer change / answer never changed.
    long calibrated_success = 0;
    long calibrated_fail = 0;
    long never_changed = 0;
    // round k -> transition-class name -> {count, mean uncertainty}.
    std::map<int, std::map<std::string, TransitionCell>> per_round;
    std::map<int, long> rounds_to_success;  // earliest correct calibration round
    double within_two_rounds_fraction = 0.0;  // of successes, corrected by round 2

    json to_json() const;
};

TrajectoryStats trajectory_stats(const std::vector<CalibrationTrace>& traces);

}  // namespace sgic
