#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgic/gateway.hpp"
#include "sgic/prompt.hpp"
#include "sgic/score.hpp"
#include "sgic/types.hpp"

namespace sgic {

enum class ScoreMode { computed, injected, oracle };
enum class MeanPolicy { fixed_round0, per_round };

std::string to_string(ScoreMode m);
ScoreMode score_mode_from_string(const std::string& s);
std::string to_string(MeanPolicy p);
MeanPolicy mean_policy_from_string(const std::string& s);

struct CalibrationConfig {
    int max_rounds = 5;            // calibration rounds after the initial answer
    bool stop_on_repeat = false;   // stop when the answer repeats (answer-only ablation)
    bool stop_on_correct = false;  // stop at the first correct round (trainset building)
    ScoreMode score_mode = ScoreMode::computed;
    MeanPolicy mean_policy = MeanPolicy::fixed_round0;
    ScaleMode scale_mode = ScaleMode::piecewise;
    double temperature = 0.0;  // decode temperature for scored generations
    int max_tokens = 256;
    int max_in_flight = 8;
    // Round 0 competes in final selection only when no calibration round
    // exists, unless this widens the pool.
    bool include_round0_in_selection = false;
    std::uint64_t oracle_seed = 12345;
    TemplateSet templates = TemplateSet::defaults();
    RenderOptions render;
    // Supplies per-sample external scores for score_mode == injected.
    std::function<std::vector<double>(const QASample&)> external_scores;

    void validate() const;  // throws InvalidInputError listing every problem
};

struct CalibrationRound {
    int round_index = 0;  // 0 is the initial answer
    std::string answer_text;
    double raw_confidence = 0.0;
    ScaledAnswerScore scaled;
    std::optional<bool> correct;  // set when gold answers are known

    json to_json() const;
    static CalibrationRound from_json(const json& j);
};

enum class Transition { CC, CI, IC, II };
std::string to_string(Transition t);
Transition transition_from_string(const std::string& s);
Transition classify_transition(bool prev_correct, bool next_correct);

struct CalibrationTrace {
    std::string sample_id;
    DocScoreSet doc_scores;
    std::vector<CalibrationRound> rounds;  // rounds[0] = initial answer
    int final_choice = -1;                 // round index; -1 until selected
    std::vector<Transition> transitions;   // rounds.size()-1 entries when gold known
    bool complete = false;
    std::string error;  // non-empty marks a failed/partial trace

    // Flattened store format: one record per round (round 0 carries the doc
    // scores) plus one final record per sample.
    std::vector<json> to_records() const;
};

json doc_scores_to_json(const DocScoreSet& s);
DocScoreSet doc_scores_from_json(const json& j);

// Groups flattened records back into traces, preserving first-seen sample order.
std::vector<CalibrationTrace> traces_from_records(const std::vector<json>& records);
std::vector<json> traces_to_records(const std::vector<CalibrationTrace>& traces);

// --- single-sample operations -------------------------------------------------

// Round 0: answer from the full documents. Scaled score left for the caller,
// which knows the corpus mean.
CalibrationRound run_initial(const QASample& sample, Gateway& gateway,
                             const CalibrationConfig& config);

// One probe generation per document; raw = 1 - prob product, then min-max.
DocScoreSet score_documents(const QASample& sample, Gateway& gateway,
                            const CalibrationConfig& config);

// Externally supplied relevance scores, min-max normalized.
DocScoreSet inject_scores(const QASample& sample, const std::vector<double>& external);

// Gold-aware synthetic scores: relevant documents draw from [0, 20],
// irrelevant from [80, 100], seeded per sample.
DocScoreSet oracle_scores(const QASample& sample, std::uint64_t seed);

// Scales a round's raw confidence against the given mean and fills the
// 0-100 display fields.
void apply_answer_scale(CalibrationRound& round, const CorpusMean& mean, ScaleMode mode);

// Earliest round with minimal uncertainty. Pool = calibration rounds; round 0
// joins only when include_round0 is set or no calibration round exists.
int select_min_uncertainty(const std::vector<CalibrationRound>& rounds, bool include_round0);

// Full single-sample loop. When no corpus mean is supplied the sample's own
// round-0 raw confidence serves as the reference (its round 0 then scales to
// exactly 50).
CalibrationTrace calibrate(const QASample& sample, Gateway& gateway,
                           const CalibrationConfig& config,
                           std::optional<CorpusMean> mean = std::nullopt);

// --- sampling baseline --------------------------------------------------------

struct BaselineResult {
    std::vector<CalibrationRound> rounds;  // one per successful generation
    std::vector<std::string> errors;       // per-slot failures
    int selected = -1;                     // index into rounds, min uncertainty
};

// n independent temperature-0.7 generations from the initial prompt, each
// scored; selection by minimal uncertainty.
BaselineResult baseline_sample(const QASample& sample, Gateway& gateway, int n,
                               const CalibrationConfig& config,
                               std::optional<CorpusMean> mean = std::nullopt);

// --- corpus driver ------------------------------------------------------------

struct CorpusOptions {
    std::filesystem::path traces_path;   // empty disables persistence
    std::filesystem::path prompts_path;  // optional audit log of every prompt
    // Existing complete traces at traces_path are kept; unfinished samples are
    // recomputed (greedy calls replay from the gateway cache).
    bool resume = true;
    // Test hook: throw after this many persisted waves to simulate a crash.
    int abort_after_waves = -1;
    std::function<void(int wave_index, std::size_t samples_done)> on_wave;
};

struct CorpusResult {
    std::vector<CalibrationTrace> traces;  // sample order
    CorpusMean mean;
    std::size_t resumed = 0;  // traces taken from disk unchanged
};

// Lockstep wave driver: wave 0 issues every probe and initial generation,
// freezes the corpus mean from the round-0 raw confidences, then runs each
// calibration round as one batched wave. Traces are flushed atomically at
// every wave boundary in sample order, so the store is byte-deterministic.
CorpusResult calibrate_corpus(const std::vector<QASample>& samples, Gateway& gateway,
                              const CalibrationConfig& config, const CorpusOptions& opts = {});

}  // namespace sgic
