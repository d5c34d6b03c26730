#include "sgic/calibrate.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "sgic/errors.hpp"
#include "sgic/eval.hpp"
#include "sgic/jsonl.hpp"
#include "sgic/util.hpp"

namespace sgic {

std::string to_string(ScoreMode m) {
    switch (m) {
        case ScoreMode::computed: return "computed";
        case ScoreMode::injected: return "injected";
        case ScoreMode::oracle: return "oracle";
    }
    return "computed";
}

ScoreMode score_mode_from_string(const std::string& s) {
    if (s == "computed") return ScoreMode::computed;
    if (s == "injected") return ScoreMode::injected;
    if (s == "oracle") return ScoreMode::oracle;
    throw InvalidInputError("unknown score mode: " + s);
}

std::string to_string(MeanPolicy p) {
    return p == MeanPolicy::fixed_round0 ? "fixed_round0" : "per_round";
}

MeanPolicy mean_policy_from_string(const std::string& s) {
    if (s == "fixed_round0") return MeanPolicy::fixed_round0;
    if (s == "per_round") return MeanPolicy::per_round;
    throw InvalidInputError("unknown mean policy: " + s);
}

void CalibrationConfig::validate() const {
    std::vector<std::string> problems;
    if (max_rounds < 1) problems.push_back("max_rounds must be >= 1");
    if (max_tokens < 1) problems.push_back("max_tokens must be >= 1");
    if (max_in_flight < 1) problems.push_back("max_in_flight must be >= 1");
    if (temperature < 0.0) problems.push_back("temperature must be >= 0");
    if (render.doc_token_limit < 1) problems.push_back("doc_token_limit must be >= 1");
    if (score_mode == ScoreMode::injected && !external_scores)
        problems.push_back("score_mode=injected needs an external score source");
    if (!problems.empty()) {
        std::string msg = "invalid calibration config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw InvalidInputError(msg);
    }
}

json CalibrationRound::to_json() const {
    json j;
    j["round_index"] = round_index;
    j["answer_text"] = answer_text;
    j["raw_confidence"] = raw_confidence;
    j["confidence_scaled"] = scaled.confidence_scaled;
    j["uncertainty"] = scaled.uncertainty;
    j["clamped"] = scaled.clamped;
    if (correct.has_value())
        j["correct"] = *correct;
    else
        j["correct"] = nullptr;
    return j;
}

CalibrationRound CalibrationRound::from_json(const json& j) {
    CalibrationRound r;
    r.round_index = j.at("round_index").get<int>();
    r.answer_text = j.at("answer_text").get<std::string>();
    r.raw_confidence = j.at("raw_confidence").get<double>();
    r.scaled.confidence_scaled = j.at("confidence_scaled").get<double>();
    r.scaled.uncertainty = j.at("uncertainty").get<double>();
    r.scaled.clamped = j.at("clamped").get<bool>();
    if (j.contains("correct") && !j.at("correct").is_null()) r.correct = j.at("correct").get<bool>();
    return r;
}

std::string to_string(Transition t) {
    switch (t) {
        case Transition::CC: return "CC";
        case Transition::CI: return "CI";
        case Transition::IC: return "IC";
        case Transition::II: return "II";
    }
    return "II";
}

Transition transition_from_string(const std::string& s) {
    if (s == "CC") return Transition::CC;
    if (s == "CI") return Transition::CI;
    if (s == "IC") return Transition::IC;
    if (s == "II") return Transition::II;
    throw InvalidInputError("unknown transition: " + s);
}

Transition classify_transition(bool prev_correct, bool next_correct) {
    if (prev_correct) return next_correct ? Transition::CC : Transition::CI;
    return next_correct ? Transition::IC : Transition::II;
}

json doc_scores_to_json(const DocScoreSet& s) {
    json j;
    j["raw"] = s.raw;
    j["normalized"] = s.normalized;
    return j;
}

DocScoreSet doc_scores_from_json(const json& j) {
    DocScoreSet s;
    s.raw = j.at("raw").get<std::vector<double>>();
    s.normalized = j.at("normalized").get<std::vector<double>>();
    return s;
}

std::vector<json> CalibrationTrace::to_records() const {
    std::vector<json> records;
    for (const auto& r : rounds) {
        json rec;
        rec["type"] = "round";
        rec["sample_id"] = sample_id;
        rec["round"] = r.to_json();
        if (r.round_index == 0 && !doc_scores.normalized.empty())
            rec["doc_scores"] = doc_scores_to_json(doc_scores);
        records.push_back(std::move(rec));
    }
    if (complete || !error.empty()) {
        json rec;
        rec["type"] = "final";
        rec["sample_id"] = sample_id;
        rec["final_choice"] = final_choice;
        json trans = json::array();
        for (auto t : transitions) trans.push_back(to_string(t));
        rec["transitions"] = std::move(trans);
        rec["complete"] = complete;
        rec["error"] = error;
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<json> traces_to_records(const std::vector<CalibrationTrace>& traces) {
    std::vector<json> records;
    for (const auto& t : traces)
        for (auto& r : t.to_records()) records.push_back(std::move(r));
    return records;
}

std::vector<CalibrationTrace> traces_from_records(const std::vector<json>& records) {
    std::vector<CalibrationTrace> traces;
    std::map<std::string, std::size_t> index;
    auto slot = [&](const std::string& id) -> CalibrationTrace& {
        auto it = index.find(id);
        if (it == index.end()) {
            index.emplace(id, traces.size());
            traces.emplace_back();
            traces.back().sample_id = id;
            return traces.back();
        }
        return traces[it->second];
    };
    for (const auto& rec : records) {
        const std::string type = rec.at("type").get<std::string>();
        const std::string id = rec.at("sample_id").get<std::string>();
        CalibrationTrace& t = slot(id);
        if (type == "round") {
            t.rounds.push_back(CalibrationRound::from_json(rec.at("round")));
            if (rec.contains("doc_scores")) t.doc_scores = doc_scores_from_json(rec.at("doc_scores"));
        } else if (type == "final") {
            t.final_choice = rec.at("final_choice").get<int>();
            t.transitions.clear();
            for (const auto& s : rec.at("transitions"))
                t.transitions.push_back(transition_from_string(s.get<std::string>()));
            t.complete = rec.at("complete").get<bool>();
            t.error = rec.value("error", std::string{});
        } else {
            throw InvalidInputError("unknown trace record type: " + type);
        }
    }
    for (auto& t : traces)
        std::sort(t.rounds.begin(), t.rounds.end(),
                  [](const CalibrationRound& a, const CalibrationRound& b) {
                      return a.round_index < b.round_index;
                  });
    return traces;
}

// ---------------------------------------------------------------------------
// Single-sample operations
// ---------------------------------------------------------------------------

namespace {

GenRequest make_request(std::string prompt, const CalibrationConfig& config,
                        double temperature_override = -1.0) {
    GenRequest req;
    req.prompt = std::move(prompt);
    req.temperature = temperature_override >= 0.0 ? temperature_override : config.temperature;
    req.max_tokens = config.max_tokens;
    return req;
}

CalibrationRound round_from_result(int round_index, const GenerationResult& res,
                                   const QASample& sample) {
    CalibrationRound r;
    r.round_index = round_index;
    r.answer_text = res.text;
    r.raw_confidence =
        sequence_confidence(TokenProbSequence::from_probs(res.token_probs)).value;
    if (!sample.gold_answers.empty())
        r.correct = exact_match(res.text, sample.gold_answers) == 1;
    return r;
}

std::vector<RoundHistoryEntry> history_from_rounds(const std::vector<CalibrationRound>& rounds) {
    std::vector<RoundHistoryEntry> history;
    history.reserve(rounds.size());
    for (const auto& r : rounds) {
        RoundHistoryEntry e;
        e.round_index = r.round_index + 1;  // the initial answer displays as Round 1
        e.answer_text = r.answer_text;
        e.uncertainty_display = display_score(r.scaled.uncertainty);
        history.push_back(std::move(e));
    }
    return history;
}

CorpusMean single_raw_mean(double raw, Split split) {
    RawConfidence rc{raw};
    return corpus_mean(std::span<const RawConfidence>(&rc, 1), split);
}

DocScoreSet resolve_doc_scores(const QASample& sample, Gateway& gateway,
                               const CalibrationConfig& config) {
    switch (config.score_mode) {
        case ScoreMode::computed: return score_documents(sample, gateway, config);
        case ScoreMode::injected:
            if (!config.external_scores)
                throw InvalidInputError("score_mode=injected needs an external score source");
            return inject_scores(sample, config.external_scores(sample));
        case ScoreMode::oracle: return oracle_scores(sample, config.oracle_seed);
    }
    throw InvalidInputError("unreachable score mode");
}

}  // namespace

CalibrationRound run_initial(const QASample& sample, Gateway& gateway,
                             const CalibrationConfig& config) {
    const std::string prompt = render_initial(config.templates, sample, config.render);
    try {
        const GenerationResult res = gateway.generate(make_request(prompt, config));
        return round_from_result(0, res, sample);
    } catch (const GatewayError& e) {
        throw GatewayError("sample " + sample.id + ": " + e.what(), e.retryable);
    }
}

DocScoreSet score_documents(const QASample& sample, Gateway& gateway,
                            const CalibrationConfig& config) {
    if (sample.documents.empty())
        throw InvalidInputError("sample " + sample.id + " has no documents to score");
    std::vector<GenRequest> reqs;
    reqs.reserve(sample.documents.size());
    for (const auto& doc : sample.documents)
        reqs.push_back(make_request(
            render_doc_probe(config.templates, sample.question, doc, config.render), config,
            /*temperature_override=*/0.0));

    const auto outcomes = gateway.generate_batch(reqs, config.max_in_flight);
    std::vector<double> raws;
    raws.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok())
            throw GatewayError("sample " + sample.id + ": probe for document " +
                                   sample.documents[i].id + " failed: " + outcomes[i].error,
                               false);
        raws.push_back(document_raw_uncertainty(
            TokenProbSequence::from_probs(outcomes[i].result->token_probs)));
    }
    return normalize_document_scores(raws);
}

DocScoreSet inject_scores(const QASample& sample, const std::vector<double>& external) {
    if (external.size() != sample.documents.size())
        throw InvalidInputError("sample " + sample.id + ": " + std::to_string(external.size()) +
                                " external scores for " + std::to_string(sample.documents.size()) +
                                " documents");
    DocScoreSet s = normalize_document_scores(external);
    s.raw = external;
    return s;
}

DocScoreSet oracle_scores(const QASample& sample, std::uint64_t seed) {
    for (const auto& d : sample.documents)
        if (!d.gold_relevant.has_value())
            throw InvalidInputError("oracle scores need relevance flags; sample " + sample.id +
                                    " document " + d.id + " has none");
    Rng rng(seed ^ fnv1a64(sample.id));
    DocScoreSet s;
    for (const auto& d : sample.documents) {
        const double v = *d.gold_relevant ? rng.uniform(0.0, 20.0) : rng.uniform(80.0, 100.0);
        s.normalized.push_back(v);
        s.raw.push_back(v / 100.0);
    }
    return s;
}

void apply_answer_scale(CalibrationRound& round, const CorpusMean& mean, ScaleMode mode) {
    round.scaled = scale_answer_score(RawConfidence{round.raw_confidence}, mean, mode);
}

int select_min_uncertainty(const std::vector<CalibrationRound>& rounds, bool include_round0) {
    if (rounds.empty()) throw InvalidInputError("cannot select from an empty round list");
    std::size_t start = include_round0 || rounds.size() == 1 ? 0 : 1;
    std::size_t best = start;
    for (std::size_t i = start + 1; i < rounds.size(); ++i)
        if (rounds[i].scaled.uncertainty < rounds[best].scaled.uncertainty) best = i;
    return rounds[best].round_index;
}

CalibrationTrace calibrate(const QASample& sample, Gateway& gateway,
                           const CalibrationConfig& config, std::optional<CorpusMean> mean) {
    config.validate();
    CalibrationTrace trace;
    trace.sample_id = sample.id;
    trace.rounds.push_back(run_initial(sample, gateway, config));
    trace.doc_scores = resolve_doc_scores(sample, gateway, config);

    const CorpusMean ref = mean.has_value()
                               ? *mean
                               : single_raw_mean(trace.rounds[0].raw_confidence, sample.split);
    auto scale_round = [&](CalibrationRound& r) {
        if (config.mean_policy == MeanPolicy::per_round && !mean.has_value())
            apply_answer_scale(r, single_raw_mean(r.raw_confidence, sample.split),
                               config.scale_mode);
        else
            apply_answer_scale(r, ref, config.scale_mode);
    };
    scale_round(trace.rounds[0]);

    for (int k = 1; k <= config.max_rounds; ++k) {
        const std::string prompt = render_calibration(
            config.templates, sample, trace.doc_scores, history_from_rounds(trace.rounds),
            config.render);
        GenerationResult res;
        try {
            res = gateway.generate(make_request(prompt, config));
        } catch (const GatewayError& e) {
            throw GatewayError("sample " + sample.id + " round " + std::to_string(k) + ": " +
                                   e.what(),
                               e.retryable);
        }
        CalibrationRound round = round_from_result(k, res, sample);
        scale_round(round);
        const CalibrationRound& prev = trace.rounds.back();
        if (prev.correct.has_value() && round.correct.has_value())
            trace.transitions.push_back(classify_transition(*prev.correct, *round.correct));
        trace.rounds.push_back(round);

        if (config.stop_on_correct && round.correct.value_or(false)) break;
        if (config.stop_on_repeat &&
            normalize_answer(round.answer_text) ==
                normalize_answer(trace.rounds[trace.rounds.size() - 2].answer_text))
            break;
    }

    trace.final_choice =
        select_min_uncertainty(trace.rounds, config.include_round0_in_selection);
    trace.complete = true;
    return trace;
}

BaselineResult baseline_sample(const QASample& sample, Gateway& gateway, int n,
                               const CalibrationConfig& config,
                               std::optional<CorpusMean> mean) {
    if (n < 1) throw InvalidInputError("baseline needs n >= 1 samples");
    const std::string prompt = render_initial(config.templates, sample, config.render);
    std::vector<GenRequest> reqs(static_cast<std::size_t>(n),
                                 make_request(prompt, config, /*temperature_override=*/0.7));
    const auto outcomes = gateway.generate_batch(reqs, config.max_in_flight);

    BaselineResult out;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) {
            out.errors.push_back("slot " + std::to_string(i) + ": " + outcomes[i].error);
            continue;
        }
        out.rounds.push_back(
            round_from_result(static_cast<int>(out.rounds.size()), *outcomes[i].result, sample));
    }
    if (out.rounds.empty()) return out;

    CorpusMean ref;
    if (mean.has_value()) {
        ref = *mean;
    } else {
        std::vector<RawConfidence> raws;
        for (const auto& r : out.rounds) raws.push_back(RawConfidence{r.raw_confidence});
        ref = corpus_mean(raws, sample.split);
    }
    for (auto& r : out.rounds) apply_answer_scale(r, ref, config.scale_mode);
    out.selected = select_min_uncertainty(out.rounds, /*include_round0=*/true);
    return out;
}

// ---------------------------------------------------------------------------
// Corpus driver
// ---------------------------------------------------------------------------

namespace {

struct SampleState {
    const QASample* sample = nullptr;
    CalibrationTrace trace;
    bool active = false;     // still producing calibration rounds
    bool from_disk = false;  // resumed, left untouched
};

struct PromptAudit {
    std::vector<json> records;
    void add(const std::string& sample_id, const std::string& kind, const std::string& prompt) {
        json j;
        j["sample_id"] = sample_id;
        j["kind"] = kind;
        j["prompt"] = prompt;
        records.push_back(std::move(j));
    }
};

void finish_trace(SampleState& st, const CalibrationConfig& config) {
    if (!st.trace.error.empty()) return;
    st.trace.final_choice =
        select_min_uncertainty(st.trace.rounds, config.include_round0_in_selection);
    st.trace.complete = true;
}

}  // namespace

CorpusResult calibrate_corpus(const std::vector<QASample>& samples, Gateway& gateway,
                              const CalibrationConfig& config, const CorpusOptions& opts) {
    config.validate();
    if (samples.empty()) throw InvalidInputError("calibrate_corpus needs at least one sample");

    std::vector<SampleState> states(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) states[i].sample = &samples[i];

    CorpusResult result;
    // Resume: keep complete traces, recompute everything else. Greedy calls of
    // recomputed samples replay from the disk cache, so nothing is re-billed.
    if (opts.resume && !opts.traces_path.empty() && std::filesystem::exists(opts.traces_path)) {
        const auto loaded = traces_from_records(read_jsonl(opts.traces_path));
        std::map<std::string, const CalibrationTrace*> by_id;
        for (const auto& t : loaded) by_id.emplace(t.sample_id, &t);
        for (auto& st : states) {
            auto it = by_id.find(st.sample->id);
            if (it != by_id.end() && it->second->complete && it->second->error.empty()) {
                st.trace = *it->second;
                st.from_disk = true;
                ++result.resumed;
            }
        }
    }

    PromptAudit audit;
    int waves_done = 0;
    std::size_t done_count = 0;
    for (const auto& st : states)
        if (st.from_disk) ++done_count;

    auto flush = [&]() {
        if (!opts.traces_path.empty()) {
            std::vector<json> records;
            for (const auto& st : states) {
                if (st.trace.rounds.empty() && st.trace.error.empty()) continue;
                for (auto& r : st.trace.to_records()) records.push_back(std::move(r));
            }
            write_jsonl_atomic(opts.traces_path, records);
        }
        if (!opts.prompts_path.empty()) write_jsonl_atomic(opts.prompts_path, audit.records);
        ++waves_done;
        if (opts.on_wave) opts.on_wave(waves_done - 1, done_count);
        if (opts.abort_after_waves >= 0 && waves_done >= opts.abort_after_waves)
            throw std::runtime_error("aborted after " + std::to_string(waves_done) +
                                     " waves (test hook)");
    };

    // --- wave 0: every initial generation and every document probe, batched ---
    struct Slot {
        std::size_t state_idx;
        int kind;  // 0 = initial, 1 = probe
        std::size_t doc_idx;
    };
    std::vector<GenRequest> reqs;
    std::vector<Slot> slots;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].from_disk) continue;
        const QASample& s = *states[i].sample;
        states[i].trace.sample_id = s.id;
        const std::string initial_prompt = render_initial(config.templates, s, config.render);
        audit.add(s.id, "initial", initial_prompt);
        reqs.push_back(make_request(initial_prompt, config));
        slots.push_back({i, 0, 0});
        if (config.score_mode == ScoreMode::computed) {
            for (std::size_t d = 0; d < s.documents.size(); ++d) {
                const std::string probe = render_doc_probe(config.templates, s.question,
                                                           s.documents[d], config.render);
                audit.add(s.id, "probe:" + s.documents[d].id, probe);
                reqs.push_back(make_request(probe, config, /*temperature_override=*/0.0));
                slots.push_back({i, 1, d});
            }
        }
    }

    if (!reqs.empty()) {
        const auto outcomes = gateway.generate_batch(reqs, config.max_in_flight);
        // Collect per-sample pieces, then assemble in sample order.
        std::map<std::size_t, std::vector<std::pair<std::size_t, const GenOutcome*>>> probes;
        for (std::size_t r = 0; r < outcomes.size(); ++r) {
            const Slot& slot = slots[r];
            SampleState& st = states[slot.state_idx];
            if (!st.trace.error.empty()) continue;
            if (!outcomes[r].ok()) {
                st.trace.error = (slot.kind == 0 ? "initial generation failed: "
                                                 : "document probe failed: ") +
                                 outcomes[r].error;
                continue;
            }
            if (slot.kind == 0) {
                try {
                    st.trace.rounds.push_back(
                        round_from_result(0, *outcomes[r].result, *st.sample));
                } catch (const std::exception& e) {
                    st.trace.error = std::string("initial scoring failed: ") + e.what();
                }
            } else {
                probes[slot.state_idx].push_back({slot.doc_idx, &outcomes[r]});
            }
        }
        for (std::size_t i = 0; i < states.size(); ++i) {
            SampleState& st = states[i];
            if (st.from_disk || !st.trace.error.empty()) continue;
            try {
                switch (config.score_mode) {
                    case ScoreMode::computed: {
                        std::vector<double> raws(st.sample->documents.size(), 0.0);
                        for (const auto& [d, oc] : probes[i])
                            raws[d] = document_raw_uncertainty(
                                TokenProbSequence::from_probs(oc->result->token_probs));
                        st.trace.doc_scores = normalize_document_scores(raws);
                        break;
                    }
                    case ScoreMode::injected:
                        st.trace.doc_scores =
                            inject_scores(*st.sample, config.external_scores(*st.sample));
                        break;
                    case ScoreMode::oracle:
                        st.trace.doc_scores = oracle_scores(*st.sample, config.oracle_seed);
                        break;
                }
            } catch (const std::exception& e) {
                st.trace.error = std::string("document scoring failed: ") + e.what();
            }
        }
    }

    // Freeze the corpus mean over every successful round-0 raw confidence,
    // including resumed traces, so interrupted and uninterrupted runs agree.
    std::vector<RawConfidence> round0_raws;
    for (const auto& st : states)
        if (st.trace.error.empty() && !st.trace.rounds.empty())
            round0_raws.push_back(RawConfidence{st.trace.rounds[0].raw_confidence});
    if (round0_raws.empty())
        throw InvalidInputError("no sample produced a scorable initial answer");
    result.mean = corpus_mean(round0_raws, samples[0].split);

    for (auto& st : states) {
        if (st.from_disk || !st.trace.error.empty() || st.trace.rounds.empty()) continue;
        apply_answer_scale(st.trace.rounds[0], result.mean, config.scale_mode);
        st.active = true;
        if (config.stop_on_correct && st.trace.rounds[0].correct.value_or(false)) {
            st.active = false;
            finish_trace(st, config);
            ++done_count;
        }
    }
    for (auto& st : states)
        if (!st.from_disk && !st.trace.error.empty()) ++done_count;
    flush();

    // --- calibration waves ---
    for (int k = 1; k <= config.max_rounds; ++k) {
        std::vector<GenRequest> wave_reqs;
        std::vector<std::size_t> wave_states;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (!states[i].active) continue;
            const std::string prompt = render_calibration(
                config.templates, *states[i].sample, states[i].trace.doc_scores,
                history_from_rounds(states[i].trace.rounds), config.render);
            audit.add(states[i].sample->id, "round:" + std::to_string(k), prompt);
            wave_reqs.push_back(make_request(prompt, config));
            wave_states.push_back(i);
        }
        if (wave_reqs.empty()) break;
        const auto outcomes = gateway.generate_batch(wave_reqs, config.max_in_flight);

        // per_round mode rescales against the current wave's own mean.
        std::vector<CalibrationRound> new_rounds(wave_reqs.size());
        std::vector<bool> ok(wave_reqs.size(), false);
        for (std::size_t r = 0; r < outcomes.size(); ++r) {
            SampleState& st = states[wave_states[r]];
            if (!outcomes[r].ok()) {
                st.trace.error =
                    "round " + std::to_string(k) + " generation failed: " + outcomes[r].error;
                st.active = false;
                ++done_count;
                continue;
            }
            try {
                new_rounds[r] = round_from_result(k, *outcomes[r].result, *st.sample);
                ok[r] = true;
            } catch (const std::exception& e) {
                st.trace.error = "round " + std::to_string(k) + " scoring failed: " + e.what();
                st.active = false;
                ++done_count;
            }
        }
        CorpusMean wave_mean = result.mean;
        if (config.mean_policy == MeanPolicy::per_round) {
            std::vector<RawConfidence> raws;
            for (std::size_t r = 0; r < new_rounds.size(); ++r)
                if (ok[r]) raws.push_back(RawConfidence{new_rounds[r].raw_confidence});
            if (!raws.empty()) wave_mean = corpus_mean(raws, samples[0].split);
        }
        for (std::size_t r = 0; r < new_rounds.size(); ++r) {
            if (!ok[r]) continue;
            SampleState& st = states[wave_states[r]];
            apply_answer_scale(new_rounds[r], wave_mean, config.scale_mode);
            const CalibrationRound& prev = st.trace.rounds.back();
            if (prev.correct.has_value() && new_rounds[r].correct.has_value())
                st.trace.transitions.push_back(
                    classify_transition(*prev.correct, *new_rounds[r].correct));
            st.trace.rounds.push_back(new_rounds[r]);

            bool stop = k == config.max_rounds;
            if (config.stop_on_correct && new_rounds[r].correct.value_or(false)) stop = true;
            if (config.stop_on_repeat &&
                normalize_answer(new_rounds[r].answer_text) ==
                    normalize_answer(st.trace.rounds[st.trace.rounds.size() - 2].answer_text))
                stop = true;
            if (stop) {
                st.active = false;
                finish_trace(st, config);
                ++done_count;
            }
        }
        flush();
    }

    for (auto& st : states) result.traces.push_back(std::move(st.trace));
    return result;
}

}  // namespace sgic
