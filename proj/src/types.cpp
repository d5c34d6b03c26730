#include "sgic/types.hpp"

#include <fstream>
#include <sstream>

#include "sgic/errors.hpp"
#include "sgic/jsonl.hpp"
#include "sgic/util.hpp"

namespace sgic {

std::string to_string(QType q) {
    switch (q) {
        case QType::bridge: return "bridge";
        case QType::comparison: return "comparison";
        case QType::single_hop: return "single_hop";
        case QType::math: return "math";
    }
    return "single_hop";
}

QType qtype_from_string(const std::string& s) {
    if (s == "bridge") return QType::bridge;
    if (s == "comparison") return QType::comparison;
    if (s == "single_hop") return QType::single_hop;
    if (s == "math") return QType::math;
    throw InvalidInputError("unknown question type: " + s);
}

json Document::to_json() const {
    json j;
    j["id"] = id;
    j["title"] = title;
    j["text"] = text;
    if (gold_relevant) j["gold_relevant"] = *gold_relevant;
    if (score) j["score"] = *score;
    return j;
}

Document Document::from_json(const json& j) {
    Document d;
    d.id = j.at("id").get<std::string>();
    d.title = j.value("title", std::string{});
    d.text = j.at("text").get<std::string>();
    if (j.contains("gold_relevant") && !j["gold_relevant"].is_null()) {
        d.gold_relevant = j["gold_relevant"].get<bool>();
    }
    if (j.contains("score") && !j["score"].is_null()) {
        d.score = j["score"].get<double>();
    }
    return d;
}

json QASample::to_json() const {
    json j;
    j["id"] = id;
    j["question"] = question;
    j["qtype"] = to_string(qtype);
    j["split"] = sgic::to_string(split);
    j["gold_answers"] = gold_answers;
    json docs = json::array();
    for (const Document& d : documents) docs.push_back(d.to_json());
    j["documents"] = std::move(docs);
    if (!flags.empty()) j["flags"] = flags;
    return j;
}

QASample QASample::from_json(const json& j) {
    QASample s;
    s.id = j.at("id").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.qtype = qtype_from_string(j.value("qtype", std::string("single_hop")));
    s.split = split_from_string(j.value("split", std::string("validation")));
    s.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    for (const auto& dj : j.at("documents")) {
        s.documents.push_back(Document::from_json(dj));
    }
    if (j.contains("flags")) s.flags = j["flags"].get<std::vector<std::string>>();
    return s;
}

std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInputError("cannot open file: " + path.string());
    }
    std::vector<nlohmann::ordered_json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::ordered_json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidInputError(path.string() + ":" + std::to_string(lineno) +
                                    ": bad JSON line: " + e.what());
        }
    }
    return out;
}

std::string dump_jsonl(const std::vector<nlohmann::ordered_json>& records) {
    std::ostringstream ss;
    for (const auto& r : records) {
        ss << r.dump() << '\n';
    }
    return ss.str();
}

void write_jsonl_atomic(const std::filesystem::path& path,
                        const std::vector<nlohmann::ordered_json>& records) {
    write_text_file_atomic(path, dump_jsonl(records));
}

}  // namespace sgic
