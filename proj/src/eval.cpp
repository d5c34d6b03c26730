#include "sgic/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "sgic/errors.hpp"
#include "sgic/util.hpp"

namespace sgic {

std::string normalize_answer(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (std::ispunct(u)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(u)));
    }
    std::string out;
    for (const auto& tok : split_whitespace(cleaned)) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

int exact_match(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw InvalidInputError("exact_match needs at least one gold answer");
    const std::string p = normalize_answer(pred);
    for (const auto& g : golds)
        if (p == normalize_answer(g)) return 1;
    return 0;
}

namespace {

double f1_single(const std::vector<std::string>& pred_toks,
                 const std::vector<std::string>& gold_toks) {
    if (pred_toks.empty() && gold_toks.empty()) return 1.0;
    if (pred_toks.empty() || gold_toks.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& t : gold_toks) ++counts[t];
    long common = 0;
    for (const auto& t : pred_toks) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / pred_toks.size();
    const double recall = static_cast<double>(common) / gold_toks.size();
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_score(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw InvalidInputError("f1_score needs at least one gold answer");
    const auto pred_toks = split_whitespace(normalize_answer(pred));
    double best = 0.0;
    for (const auto& g : golds)
        best = std::max(best, f1_single(pred_toks, split_whitespace(normalize_answer(g))));
    return best;
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size())
        throw InvalidInputError("auroc: scores and labels differ in length");
    if (scores.empty()) throw InvalidInputError("auroc: empty input");
    long n_pos = 0;
    for (bool l : labels) n_pos += l ? 1 : 0;
    const long n_neg = static_cast<long>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("auroc needs both correct and incorrect samples");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks across ties, then sum the positive-class ranks.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<PairMetrics> batch_metrics_serial(const std::vector<std::string>& preds,
                                              const std::vector<std::vector<std::string>>& golds) {
    if (preds.size() != golds.size())
        throw InvalidInputError("batch_metrics: predictions and golds differ in length");
    for (std::size_t i = 0; i < golds.size(); ++i)
        if (golds[i].empty())
            throw InvalidInputError("batch_metrics: empty gold set at index " + std::to_string(i));
    std::vector<PairMetrics> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        out[i].em = exact_match(preds[i], golds[i]);
        out[i].f1 = f1_score(preds[i], golds[i]);
    }
    return out;
}

std::vector<PairMetrics> batch_metrics(const std::vector<std::string>& preds,
                                       const std::vector<std::vector<std::string>>& golds) {
    if (preds.size() != golds.size())
        throw InvalidInputError("batch_metrics: predictions and golds differ in length");
    for (std::size_t i = 0; i < golds.size(); ++i)
        if (golds[i].empty())
            throw InvalidInputError("batch_metrics: empty gold set at index " + std::to_string(i));
    std::vector<PairMetrics> out(preds.size());
    const std::int64_t n = static_cast<std::int64_t>(preds.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) {
        out[i].em = exact_match(preds[i], golds[i]);
        out[i].f1 = f1_score(preds[i], golds[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

EvalSlice slice_of(const std::vector<const SampleResult*>& rs) {
    EvalSlice s;
    s.n = static_cast<long>(rs.size());
    for (const auto* r : rs) {
        s.em += r->em;
        s.f1 += r->f1;
    }
    if (s.n > 0) {
        s.em = s.em / s.n * 100.0;
        s.f1 = s.f1 / s.n * 100.0;
    }
    return s;
}

json slice_json(const EvalSlice& s) {
    json j;
    j["em"] = s.em;
    j["f1"] = s.f1;
    j["n"] = s.n;
    return j;
}

}  // namespace

json EvalReport::to_json() const {
    json j;
    j["overall"] = slice_json(overall);
    json by = json::object();
    for (const auto& [k, v] : by_qtype) by[k] = slice_json(v);
    j["by_qtype"] = std::move(by);
    return j;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %6s %8s %8s\n", "group", "n", "EM", "F1");
    out << line;
    std::snprintf(line, sizeof(line), "%-12s %6ld %8.2f %8.2f\n", "overall", overall.n,
                  overall.em, overall.f1);
    out << line;
    for (const auto& [k, v] : by_qtype) {
        std::snprintf(line, sizeof(line), "%-12s %6ld %8.2f %8.2f\n", k.c_str(), v.n, v.em, v.f1);
        out << line;
    }
    return out.str();
}

EvalReport report(const std::vector<SampleResult>& results, Breakdown breakdown) {
    if (results.empty()) throw InvalidInputError("report needs at least one result");
    EvalReport rep;
    std::vector<const SampleResult*> all;
    std::map<std::string, std::vector<const SampleResult*>> groups;
    for (const auto& r : results) {
        all.push_back(&r);
        if (breakdown == Breakdown::by_qtype) groups[to_string(r.qtype)].push_back(&r);
    }
    rep.overall = slice_of(all);
    for (const auto& [k, v] : groups) rep.by_qtype[k] = slice_of(v);
    return rep;
}

// ---------------------------------------------------------------------------
// Trajectory analytics
// ---------------------------------------------------------------------------

json TrajectoryStats::to_json() const {
    json j;
    j["n_traces"] = n_traces;
    j["excluded"] = excluded;
    j["initially_incorrect"] = initially_incorrect;
    j["calibrated_success"] = calibrated_success;
    j["calibrated_fail"] = calibrated_fail;
    j["never_changed"] = never_changed;
    json per = json::object();
    for (const auto& [round, classes] : per_round) {
        json cls = json::object();
        for (const auto& [name, cell] : classes) {
            json c;
            c["count"] = cell.count;
            c["mean_uncertainty"] = cell.mean_uncertainty;
            cls[name] = std::move(c);
        }
        per[std::to_string(round)] = std::move(cls);
    }
    j["per_round"] = std::move(per);
    json hist = json::object();
    for (const auto& [round, count] : rounds_to_success) hist[std::to_string(round)] = count;
    j["rounds_to_success"] = std::move(hist);
    j["within_two_rounds_fraction"] = within_two_rounds_fraction;
    return j;
}

TrajectoryStats trajectory_stats(const std::vector<CalibrationTrace>& traces) {
    TrajectoryStats st;
    std::map<int, std::map<std::string, double>> sums;
    long success_within_two = 0;

    for (const auto& t : traces) {
        const bool scored = !t.rounds.empty() &&
                            std::all_of(t.rounds.begin(), t.rounds.end(),
                                        [](const CalibrationRound& r) {
                                            return r.correct.has_value();
                                        });
        if (!scored) {
            ++st.excluded;
            continue;
        }
        ++st.n_traces;

        for (std::size_t k = 1; k < t.rounds.size(); ++k) {
            const std::string cls = to_string(
                classify_transition(*t.rounds[k - 1].correct, *t.rounds[k].correct));
            auto& cell = st.per_round[static_cast<int>(k)][cls];
            ++cell.count;
            sums[static_cast<int>(k)][cls] += t.rounds[k].scaled.uncertainty;
        }

        if (*t.rounds[0].correct) continue;
        ++st.initially_incorrect;

        const CalibrationRound* final_round = &t.rounds.back();
        if (t.final_choice >= 0)
            for (const auto& r : t.rounds)
                if (r.round_index == t.final_choice) final_round = &r;

        if (final_round->correct.value_or(false)) {
            ++st.calibrated_success;
            for (std::size_t k = 1; k < t.rounds.size(); ++k) {
                if (*t.rounds[k].correct) {
                    ++st.rounds_to_success[static_cast<int>(k)];
                    if (k <= 2) ++success_within_two;
                    break;
                }
            }
        } else {
            const std::string base = normalize_answer(t.rounds[0].answer_text);
            const bool changed = std::any_of(
                t.rounds.begin() + 1, t.rounds.end(), [&](const CalibrationRound& r) {
                    return normalize_answer(r.answer_text) != base;
                });
            if (changed)
                ++st.calibrated_fail;
            else
                ++st.never_changed;
        }
    }

    for (auto& [round, classes] : st.per_round)
        for (auto& [name, cell] : classes)
            if (cell.count > 0) cell.mean_uncertainty = sums[round][name] / cell.count;
    st.within_two_rounds_fraction =
        st.calibrated_success > 0
            ? static_cast<double>(success_within_two) / st.calibrated_success
            : 0.0;
    return st;
}

}  // namespace sgic
