#include "sgic/datasets.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "sgic/errors.hpp"
#include "sgic/jsonl.hpp"
#include "sgic/util.hpp"

namespace sgic {

json LoadStats::to_json() const {
    json j;
    j["total"] = total;
    j["loaded"] = loaded;
    j["skipped"] = skipped;
    json reasons = json::object();
    for (const auto& [k, v] : skip_reasons) reasons[k] = v;
    j["skip_reasons"] = std::move(reasons);
    return j;
}

namespace {

void skip(LoadStats& stats, const std::string& reason) {
    ++stats.skipped;
    ++stats.skip_reasons[reason];
}

// Context titles can repeat; document ids must not.
std::string unique_doc_id(std::set<std::string>& used, const std::string& base) {
    std::string id = base;
    int suffix = 2;
    while (!used.insert(id).second) id = base + "#" + std::to_string(suffix++);
    return id;
}

}  // namespace

LoadResult load_hotpotqa(const std::filesystem::path& path, Split split, long limit) {
    json root;
    try {
        root = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw InvalidInputError("cannot parse " + path.string() + ": " + e.what());
    }
    if (!root.is_array())
        throw InvalidInputError(path.string() + ": expected a top-level array of records");

    LoadResult out;
    for (const auto& rec : root) {
        if (limit >= 0 && static_cast<long>(out.samples.size()) >= limit) break;
        ++out.stats.total;
        try {
            QASample s;
            s.id = rec.at("_id").get<std::string>();
            s.question = rec.at("question").get<std::string>();
            const std::string answer = rec.at("answer").get<std::string>();
            if (answer.empty()) {
                skip(out.stats, "empty_answer");
                continue;
            }
            s.gold_answers = {answer};
            const std::string type = rec.at("type").get<std::string>();
            if (type == "bridge") {
                s.qtype = QType::bridge;
            } else if (type == "comparison") {
                s.qtype = QType::comparison;
            } else {
                skip(out.stats, "unknown_type");
                continue;
            }

            std::set<std::string> supporting;
            for (const auto& sf : rec.at("supporting_facts"))
                supporting.insert(sf.at(0).get<std::string>());

            std::set<std::string> used_ids;
            int relevant = 0;
            for (const auto& ctx : rec.at("context")) {
                Document d;
                d.title = ctx.at(0).get<std::string>();
                d.id = unique_doc_id(used_ids, d.title);
                std::string text;
                for (const auto& sent : ctx.at(1)) text += sent.get<std::string>();
                d.text = std::move(text);
                d.gold_relevant = supporting.count(d.title) > 0;
                relevant += *d.gold_relevant ? 1 : 0;
                s.documents.push_back(std::move(d));
            }
            if (s.documents.size() != 10) {
                skip(out.stats, "doc_count");
                continue;
            }
            if (relevant < 2) {
                skip(out.stats, "relevant_count");
                continue;
            }
            if (std::any_of(s.documents.begin(), s.documents.end(),
                            [](const Document& d) { return d.text.empty(); })) {
                skip(out.stats, "empty_document");
                continue;
            }
            s.split = split;
            out.samples.push_back(std::move(s));
            ++out.stats.loaded;
        } catch (const json::exception&) {
            skip(out.stats, "malformed_record");
        }
    }
    return out;
}

LoadResult reconstruct_nq(const std::filesystem::path& path, Split split, long limit,
                          std::uint64_t seed) {
    LoadResult out;
    for (const auto& rec : read_jsonl(path)) {
        if (limit >= 0 && static_cast<long>(out.samples.size()) >= limit) break;
        ++out.stats.total;
        try {
            QASample s;
            s.id = rec.at("id").get<std::string>();
            s.question = rec.at("question").get<std::string>();
            s.gold_answers = rec.at("answers").get<std::vector<std::string>>();
            if (s.gold_answers.empty()) {
                skip(out.stats, "no_answers");
                continue;
            }
            const auto& passages = rec.at("passages");

            long gold_idx = -1;
            for (std::size_t i = 0; i < passages.size(); ++i) {
                if (passages.at(i).value("is_gold", false)) {
                    gold_idx = static_cast<long>(i);
                    break;
                }
            }
            if (gold_idx < 0) {
                skip(out.stats, "no_gold_passage");
                continue;
            }

            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < passages.size(); ++i)
                if (static_cast<long>(i) != gold_idx) pool.push_back(i);
            if (pool.empty()) {
                skip(out.stats, "no_distractors");
                continue;
            }

            // Per-sample seed: document order is stable no matter how the
            // source file is sliced or reordered.
            Rng rng(seed ^ fnv1a64(s.id));
            std::vector<std::size_t> chosen;
            if (pool.size() >= 9) {
                std::vector<std::size_t> shuffled = pool;
                rng.shuffle(shuffled);
                chosen.assign(shuffled.begin(), shuffled.begin() + 9);
            } else {
                chosen = pool;
                while (chosen.size() < 9) chosen.push_back(pool[rng.index(pool.size())]);
                s.flags.push_back("padded_duplicates");
            }

            auto make_doc = [&](std::size_t idx, bool gold, std::set<std::string>& used) {
                const auto& p = passages.at(idx);
                Document d;
                d.id = unique_doc_id(used, "p" + std::to_string(idx));
                d.title = p.value("title", std::string{});
                d.text = p.at("text").get<std::string>();
                d.gold_relevant = gold;
                return d;
            };
            std::set<std::string> used_ids;
            s.documents.push_back(make_doc(static_cast<std::size_t>(gold_idx), true, used_ids));
            for (std::size_t idx : chosen) s.documents.push_back(make_doc(idx, false, used_ids));
            rng.shuffle(s.documents);

            if (std::any_of(s.documents.begin(), s.documents.end(),
                            [](const Document& d) { return d.text.empty(); })) {
                skip(out.stats, "empty_document");
                continue;
            }
            s.qtype = QType::single_hop;
            s.split = split;
            out.samples.push_back(std::move(s));
            ++out.stats.loaded;
        } catch (const json::exception&) {
            skip(out.stats, "malformed_record");
        }
    }
    return out;
}

std::optional<std::string> parse_gsm8k_final_answer(const std::string& answer_text) {
    const std::size_t pos = answer_text.rfind("####");
    if (pos == std::string::npos) return std::nullopt;
    std::size_t end = answer_text.find('\n', pos);
    if (end == std::string::npos) end = answer_text.size();
    std::string tail = answer_text.substr(pos + 4, end - pos - 4);
    std::string cleaned;
    for (char c : tail)
        if (c != ',' && c != '$' && c != ' ' && c != '\t' && c != '\r') cleaned.push_back(c);
    while (!cleaned.empty() && cleaned.back() == '.') cleaned.pop_back();
    if (cleaned.empty()) return std::nullopt;
    return cleaned;
}

LoadResult load_gsm8k_steps(const std::filesystem::path& path, Split split, long limit,
                            Gateway* gateway) {
    LoadResult out;
    for (const auto& rec : read_jsonl(path)) {
        if (limit >= 0 && static_cast<long>(out.samples.size()) >= limit) break;
        ++out.stats.total;
        try {
            QASample s;
            s.question = rec.at("question").get<std::string>();
            const std::string answer = rec.at("answer").get<std::string>();
            s.id = rec.value("id", "gsm8k-" + hex64(fnv1a64(s.question)));

            const auto final_answer = parse_gsm8k_final_answer(answer);
            if (!final_answer) {
                skip(out.stats, "unparseable_final");
                continue;
            }
            s.gold_answers = {*final_answer};

            std::string step_source = answer.substr(0, answer.rfind("####"));
            if (gateway) {
                GenRequest req;
                req.prompt =
                    "Explain your reasoning and give a final answer for the given question.\n"
                    "Question: " +
                    s.question + "\nAnswer:";
                req.temperature = 0.0;
                try {
                    step_source = gateway->generate(req).text;
                } catch (const GatewayError&) {
                    skip(out.stats, "generation_failed");
                    continue;
                }
            }

            std::istringstream lines(step_source);
            std::string line;
            int step_no = 0;
            while (std::getline(lines, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
                if (line.empty()) continue;
                Document d;
                d.id = "s" + std::to_string(++step_no);
                d.text = line;
                s.documents.push_back(std::move(d));
            }
            if (s.documents.empty()) {
                skip(out.stats, "no_steps");
                continue;
            }
            s.qtype = QType::math;
            s.split = split;
            out.samples.push_back(std::move(s));
            ++out.stats.loaded;
        } catch (const json::exception&) {
            skip(out.stats, "malformed_record");
        }
    }
    return out;
}

std::vector<QASample> load_jsonl_samples(const std::filesystem::path& path) {
    std::vector<QASample> samples;
    for (const auto& j : read_jsonl(path)) samples.push_back(QASample::from_json(j));
    return samples;
}

void save_jsonl_samples(const std::vector<QASample>& samples, const std::filesystem::path& path) {
    std::vector<json> records;
    records.reserve(samples.size());
    for (const auto& s : samples) records.push_back(s.to_json());
    write_jsonl_atomic(path, records);
}

}  // namespace sgic
