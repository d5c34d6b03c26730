#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgic/calibrate.hpp"
#include "sgic/types.hpp"

namespace sgic {

enum class RecordKind { revise, preserve };
std::string to_string(RecordKind k);
RecordKind record_kind_from_string(const std::string& s);

// One SFT example. Revise records pair an incorrect score-annotated history
// with the gold answer; preserve records pair a correct round-0 answer's
// prompt with that gold answer, teaching the model to leave it alone.
struct TrainRecord {
    std::string input_text;   // full calibration prompt with history
    std::string target_text;  // a gold answer of the source sample
    RecordKind kind = RecordKind::revise;
    std::string sample_id;
    int rounds_consumed = 0;  // history rounds embedded in the input

    json to_json() const;
    static TrainRecord from_json(const json& j);
};

struct BuildReport {
    long input_samples = 0;
    long revise_candidates = 0;
    long preserve_candidates = 0;
    long pruned_samples = 0;   // never correct within the round limit
    long errored_samples = 0;  // gateway/scoring failures
    long revise_emitted = 0;   // after ratio downsampling
    long preserve_emitted = 0;
    std::map<int, long> rounds_histogram;  // first-correct round -> samples

    json to_json() const;
};

struct BuildOptions {
    // revise:preserve mixing ratio; the majority kind is downsampled
    // (stable, by sample order). 1:0 suppresses preserve records entirely.
    int ratio_revise = 1;
    int ratio_preserve = 1;
    std::filesystem::path traces_path;  // persisted calibration traces (optional)
};

// Preserve record for a trace whose round 0 is already correct: the input is a
// calibration prompt whose single history line shows that answer with its
// uncertainty; the target is the matching gold answer.
TrainRecord substitution_op(const QASample& sample, const CalibrationTrace& trace,
                            const CalibrationConfig& config);

// Runs calibration over every sample (stopping at the first correct round),
// then prunes never-correct samples and emits revise/preserve records.
std::pair<std::vector<TrainRecord>, BuildReport> build(const std::vector<QASample>& samples,
                                                       Gateway& gateway,
                                                       const CalibrationConfig& config,
                                                       const BuildOptions& options = {});

// JSONL instruction pairs, ordered by sample id; one line per record.
void export_sft(const std::vector<TrainRecord>& records, const std::filesystem::path& path);
std::vector<TrainRecord> load_sft(const std::filesystem::path& path);

}  // namespace sgic
