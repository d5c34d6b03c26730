#include "sgic/trainset.hpp"

#include <algorithm>

#include "sgic/errors.hpp"
#include "sgic/eval.hpp"
#include "sgic/jsonl.hpp"

namespace sgic {

std::string to_string(RecordKind k) { return k == RecordKind::revise ? "revise" : "preserve"; }

RecordKind record_kind_from_string(const std::string& s) {
    if (s == "revise") return RecordKind::revise;
    if (s == "preserve") return RecordKind::preserve;
    throw InvalidInputError("unknown record kind: " + s);
}

json TrainRecord::to_json() const {
    json j;
    j["instruction"] = input_text;
    j["input"] = "";
    j["output"] = target_text;
    j["sample_id"] = sample_id;
    j["kind"] = to_string(kind);
    j["rounds"] = rounds_consumed;
    return j;
}

TrainRecord TrainRecord::from_json(const json& j) {
    TrainRecord r;
    r.input_text = j.at("instruction").get<std::string>();
    r.target_text = j.at("output").get<std::string>();
    r.kind = record_kind_from_string(j.at("kind").get<std::string>());
    r.sample_id = j.at("sample_id").get<std::string>();
    r.rounds_consumed = j.at("rounds").get<int>();
    return r;
}

json BuildReport::to_json() const {
    json j;
    j["input_samples"] = input_samples;
    j["revise_candidates"] = revise_candidates;
    j["preserve_candidates"] = preserve_candidates;
    j["pruned_samples"] = pruned_samples;
    j["errored_samples"] = errored_samples;
    j["revise_emitted"] = revise_emitted;
    j["preserve_emitted"] = preserve_emitted;
    json hist = json::object();
    for (const auto& [round, count] : rounds_histogram) hist[std::to_string(round)] = count;
    j["rounds_histogram"] = std::move(hist);
    return j;
}

namespace {

// The gold string the answer EM-matches; records must never carry a target
// outside the sample's gold set.
std::string matched_gold(const QASample& sample, const std::string& answer) {
    const std::string norm = normalize_answer(answer);
    for (const auto& g : sample.gold_answers)
        if (normalize_answer(g) == norm) return g;
    throw InvalidInputError("sample " + sample.id + ": answer does not match any gold answer");
}

std::vector<RoundHistoryEntry> history_prefix(const CalibrationTrace& trace, std::size_t count) {
    std::vector<RoundHistoryEntry> history;
    for (std::size_t i = 0; i < count; ++i) {
        RoundHistoryEntry e;
        e.round_index = trace.rounds[i].round_index + 1;
        e.answer_text = trace.rounds[i].answer_text;
        e.uncertainty_display = display_score(trace.rounds[i].scaled.uncertainty);
        history.push_back(std::move(e));
    }
    return history;
}

}  // namespace

TrainRecord substitution_op(const QASample& sample, const CalibrationTrace& trace,
                            const CalibrationConfig& config) {
    if (trace.rounds.empty() || !trace.rounds[0].correct.value_or(false))
        throw InvalidInputError("substitution_op needs a trace whose round 0 is correct (sample " +
                                sample.id + ")");
    TrainRecord rec;
    rec.kind = RecordKind::preserve;
    rec.sample_id = sample.id;
    rec.rounds_consumed = 1;
    rec.input_text = render_calibration(config.templates, sample, trace.doc_scores,
                                        history_prefix(trace, 1), config.render);
    rec.target_text = matched_gold(sample, trace.rounds[0].answer_text);
    return rec;
}

std::pair<std::vector<TrainRecord>, BuildReport> build(const std::vector<QASample>& samples,
                                                       Gateway& gateway,
                                                       const CalibrationConfig& config,
                                                       const BuildOptions& options) {
    if (options.ratio_revise < 0 || options.ratio_preserve < 0 ||
        (options.ratio_revise == 0 && options.ratio_preserve == 0))
        throw InvalidInputError("mixing ratio must have a positive side");
    {
        std::string missing;
        for (const auto& s : samples)
            if (s.gold_answers.empty()) missing += (missing.empty() ? "" : ", ") + s.id;
        if (!missing.empty())
            throw InvalidInputError("trainset building needs gold answers; missing for: " + missing);
    }

    CalibrationConfig cfg = config;
    cfg.stop_on_correct = true;  // calibrate until correct or the round limit
    CorpusOptions copts;
    copts.traces_path = options.traces_path;
    const CorpusResult run = calibrate_corpus(samples, gateway, cfg, copts);

    BuildReport report;
    report.input_samples = static_cast<long>(samples.size());
    std::vector<TrainRecord> revise, preserve;

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const QASample& sample = samples[i];
        const CalibrationTrace& trace = run.traces[i];
        if (!trace.error.empty()) {
            ++report.errored_samples;
            continue;
        }
        if (trace.rounds[0].correct.value_or(false)) {
            preserve.push_back(substitution_op(sample, trace, cfg));
            ++report.preserve_candidates;
            ++report.rounds_histogram[0];
            continue;
        }
        std::size_t first_correct = 0;  // 0 = none
        for (std::size_t k = 1; k < trace.rounds.size(); ++k) {
            if (trace.rounds[k].correct.value_or(false)) {
                first_correct = k;
                break;
            }
        }
        if (first_correct == 0) {
            ++report.pruned_samples;
            continue;
        }
        TrainRecord rec;
        rec.kind = RecordKind::revise;
        rec.sample_id = sample.id;
        rec.rounds_consumed = static_cast<int>(first_correct);
        // History stops before the correcting round: the target supplies the
        // correction, so including it would leak the label.
        rec.input_text = render_calibration(cfg.templates, sample, trace.doc_scores,
                                            history_prefix(trace, first_correct), cfg.render);
        rec.target_text = matched_gold(sample, trace.rounds[first_correct].answer_text);
        revise.push_back(std::move(rec));
        ++report.revise_candidates;
        ++report.rounds_histogram[static_cast<int>(first_correct)];
    }

    std::size_t n_revise = revise.size(), n_preserve = preserve.size();
    if (options.ratio_preserve == 0) {
        n_preserve = 0;
    } else if (options.ratio_revise == 0) {
        n_revise = 0;
    } else {
        const std::size_t t = std::min(revise.size() / options.ratio_revise,
                                       preserve.size() / options.ratio_preserve);
        n_revise = std::min(revise.size(), t * options.ratio_revise);
        n_preserve = std::min(preserve.size(), t * options.ratio_preserve);
    }

    std::vector<TrainRecord> records;
    records.insert(records.end(), revise.begin(), revise.begin() + n_revise);
    records.insert(records.end(), preserve.begin(), preserve.begin() + n_preserve);
    report.revise_emitted = static_cast<long>(n_revise);
    report.preserve_emitted = static_cast<long>(n_preserve);
    return {std::move(records), std::move(report)};
}

void export_sft(const std::vector<TrainRecord>& records, const std::filesystem::path& path) {
    if (records.empty()) throw InvalidInputError("no train records to export");
    std::vector<TrainRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const TrainRecord& a, const TrainRecord& b) {
                         return a.sample_id < b.sample_id;
                     });
    std::vector<json> lines;
    lines.reserve(sorted.size());
    for (const auto& r : sorted) lines.push_back(r.to_json());
    write_jsonl_atomic(path, lines);
}

std::vector<TrainRecord> load_sft(const std::filesystem::path& path) {
    std::vector<TrainRecord> records;
    for (const auto& j : read_jsonl(path)) records.push_back(TrainRecord::from_json(j));
    return records;
}

}  // namespace sgic
