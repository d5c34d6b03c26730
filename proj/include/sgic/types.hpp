#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgic/score.hpp"

namespace sgic {

using json = nlohmann::ordered_json;

enum class QType { bridge, comparison, single_hop, math };

std::string to_string(QType q);
QType qtype_from_string(const std::string& s);

// One retrieved passage in a sample's candidate set.
struct Document {
    std::string id;
    std::string title;
    std::string text;
    std::optional<bool> gold_relevant;
    std::optional<double> score;  // uncertainty score slot, filled by scoring

    json to_json() const;
    static Document from_json(const json& j);
};

// The unit every pipeline operates on: a question plus its fixed candidate
// documents and gold answers.
struct QASample {
    std::string id;
    std::string question;
    std::vector<Document> documents;
    std::vector<std::string> gold_answers;
    QType qtype = QType::single_hop;
    Split split = Split::validation;
    std::vector<std::string> flags;  // loader annotations, e.g. "padded_duplicates"

    json to_json() const;
    static QASample from_json(const json& j);
};

}  // namespace sgic
