#include "sgic/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "sgic/errors.hpp"
#include "sgic/util.hpp"

namespace sgic {

namespace {

const char* kInitialQa =
    "Write a short answer for the question based on the given documents.\n"
    "{documents}\n"
    "Question: {question}\n"
    "Answer:";

const char* kDocProbe =
    "Write a short answer for the question based on the given document.\n"
    "Document: {document}\n"
    "Question: {question}\n"
    "Answer:";

const char* kCalibration =
    "Write a short answer for the question based on the given documents. Each document and "
    "each previous answer is annotated with an uncertainty score from 0 to 100, where a "
    "lower score means the content is more reliable.\n"
    "{documents}\n"
    "Question: {question}\n"
    "Previous Generated Answer:\n"
    "{history}\n"
    "Answer:";

const char* kKeyTag =
    "Write a short answer for the question based on the given documents.\n"
    "<KEY> means this document contains key information of the question.\n"
    "{documents}\n"
    "Question: {question}\n"
    "Answer:";

const char* kGsm8kCalibration =
    "Explain your reasoning and give a final answer for the given question. The initial "
    "reasoning steps are annotated with uncertainty scores from 0 to 100, where a lower "
    "score means the step is more reliable.\n"
    "Question: {question}\n"
    "Reasoning Steps:\n"
    "{steps}\n"
    "Final Answer:";

std::string load_template_file(const std::filesystem::path& path) {
    const std::string raw = read_text_file(path);
    std::ostringstream out;
    std::istringstream in(raw);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        if (!first) out << '\n';
        out << line;
        first = false;
    }
    std::string s = out.str();
    while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
        s.pop_back();
    return s;
}

std::string doc_line(std::size_t index1, const std::string& text) {
    return "Document [" + std::to_string(index1) + "]: " + text;
}

void require_docs(const QASample& sample) {
    if (sample.documents.empty())
        throw InvalidInputError("sample " + sample.id + " has no documents");
}

}  // namespace

TemplateSet TemplateSet::defaults() {
    TemplateSet t;
    t.initial_qa = kInitialQa;
    t.doc_probe = kDocProbe;
    t.calibration = kCalibration;
    t.key_tag = kKeyTag;
    t.gsm8k_calibration = kGsm8kCalibration;
    return t;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
    TemplateSet t;
    t.initial_qa = load_template_file(dir / "initial_qa.txt");
    t.doc_probe = load_template_file(dir / "doc_probe.txt");
    t.calibration = load_template_file(dir / "calibration.txt");
    t.key_tag = load_template_file(dir / "key_tag.txt");
    t.gsm8k_calibration = load_template_file(dir / "gsm8k_calibration.txt");
    return t;
}

Placement placement_from_string(const std::string& s) {
    if (s == "begin") return Placement::begin;
    if (s == "middle") return Placement::middle;
    if (s == "end") return Placement::end;
    if (s == "random") return Placement::random;
    throw InvalidInputError("unknown placement: " + s);
}

std::string to_string(Placement p) {
    switch (p) {
        case Placement::begin: return "begin";
        case Placement::middle: return "middle";
        case Placement::end: return "end";
        case Placement::random: return "random";
    }
    return "begin";
}

int display_score(double score) { return static_cast<int>(round_half_up(score)); }

std::string render_initial(const TemplateSet& t, const QASample& sample,
                           const RenderOptions& opts) {
    require_docs(sample);
    std::ostringstream docs;
    for (std::size_t i = 0; i < sample.documents.size(); ++i) {
        if (i) docs << '\n';
        docs << doc_line(i + 1, truncate_document(sample.documents[i], opts.doc_token_limit).text);
    }
    std::string out = t.initial_qa;
    out = replace_all(out, "{documents}", docs.str());
    out = replace_all(out, "{question}", sample.question);
    return out;
}

std::string render_doc_probe(const TemplateSet& t, const std::string& question,
                             const Document& doc, const RenderOptions& opts) {
    if (doc.text.empty()) throw InvalidInputError("document " + doc.id + " has empty text");
    std::string out = t.doc_probe;
    out = replace_all(out, "{document}", truncate_document(doc, opts.doc_token_limit).text);
    out = replace_all(out, "{question}", question);
    return out;
}

std::string render_calibration(const TemplateSet& t, const QASample& sample,
                               const DocScoreSet& doc_scores,
                               const std::vector<RoundHistoryEntry>& history,
                               const RenderOptions& opts) {
    require_docs(sample);
    if (doc_scores.normalized.size() != sample.documents.size())
        throw InvalidInputError("sample " + sample.id + ": " +
                                std::to_string(doc_scores.normalized.size()) +
                                " doc scores for " + std::to_string(sample.documents.size()) +
                                " documents");
    if (history.empty())
        throw InvalidInputError("sample " + sample.id + ": calibration prompt needs history");
    for (std::size_t i = 1; i < history.size(); ++i)
        if (history[i].round_index <= history[i - 1].round_index)
            throw InvalidInputError("history round indices must be strictly increasing");
    for (const auto& h : history)
        if (h.uncertainty_display < 0 || h.uncertainty_display > 100)
            throw InvalidInputError("history uncertainty " + std::to_string(h.uncertainty_display) +
                                    " outside 0-100");

    std::ostringstream docs;
    for (std::size_t i = 0; i < sample.documents.size(); ++i) {
        if (i) docs << '\n';
        docs << doc_line(i + 1, truncate_document(sample.documents[i], opts.doc_token_limit).text)
             << " (Uncertainty Score: " << display_score(doc_scores.normalized[i]) << ")";
    }
    std::ostringstream hist;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) hist << '\n';
        hist << "Round " << history[i].round_index << ": " << history[i].answer_text
             << " (Uncertainty Score: " << history[i].uncertainty_display << ")";
    }
    std::string out = t.calibration;
    out = replace_all(out, "{documents}", docs.str());
    out = replace_all(out, "{question}", sample.question);
    out = replace_all(out, "{history}", hist.str());
    return out;
}

std::string render_key_tag(const TemplateSet& t, const QASample& sample,
                           const std::set<std::string>& tagged_doc_ids,
                           const RenderOptions& opts) {
    require_docs(sample);
    for (const auto& id : tagged_doc_ids) {
        const bool known = std::any_of(sample.documents.begin(), sample.documents.end(),
                                       [&](const Document& d) { return d.id == id; });
        if (!known)
            throw InvalidInputError("tagged document id not in sample: " + id);
    }
    std::ostringstream docs;
    for (std::size_t i = 0; i < sample.documents.size(); ++i) {
        const auto& d = sample.documents[i];
        if (i) docs << '\n';
        std::string text = truncate_document(d, opts.doc_token_limit).text;
        if (tagged_doc_ids.count(d.id)) text = "<KEY> " + text;
        docs << doc_line(i + 1, text);
    }
    std::string out = t.key_tag;
    out = replace_all(out, "{documents}", docs.str());
    out = replace_all(out, "{question}", sample.question);
    return out;
}

std::string render_gsm8k_calibration(const TemplateSet& t, const std::string& question,
                                     const std::vector<GsmStep>& steps) {
    if (steps.empty()) throw InvalidInputError("gsm8k calibration prompt needs steps");
    std::ostringstream lines;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) lines << '\n';
        // No space before the parenthesis; the step layout glues them.
        lines << (i + 1) << ". " << steps[i].text << "(Uncertainty Score: " << steps[i].score
              << ")";
    }
    std::string out = t.gsm8k_calibration;
    out = replace_all(out, "{question}", question);
    out = replace_all(out, "{steps}", lines.str());
    return out;
}

QASample permute_documents(const QASample& sample, Placement placement, std::uint64_t seed) {
    for (const auto& d : sample.documents)
        if (!d.gold_relevant.has_value())
            throw InvalidInputError("permute_documents needs relevance flags; document " + d.id +
                                    " has none");
    QASample out = sample;
    const std::size_t n = sample.documents.size();

    if (placement == Placement::random) {
        Rng rng(seed);
        rng.shuffle(out.documents);
        return out;
    }

    std::vector<Document> relevant, rest;
    for (const auto& d : sample.documents)
        (*d.gold_relevant ? relevant : rest).push_back(d);
    const std::size_t r = relevant.size();

    std::size_t start = 0;
    switch (placement) {
        case Placement::begin: start = 0; break;
        case Placement::middle: start = (n - r) / 2; break;
        case Placement::end: start = n - r; break;
        case Placement::random: break;  // handled above
    }

    out.documents.clear();
    std::size_t next_rest = 0;
    for (std::size_t slot = 0; slot < n; ++slot) {
        if (slot >= start && slot < start + r)
            out.documents.push_back(relevant[slot - start]);
        else
            out.documents.push_back(rest[next_rest++]);
    }
    return out;
}

Document truncate_document(const Document& doc, int limit_tokens) {
    if (limit_tokens < 1) throw InvalidInputError("token limit must be >= 1");
    // Count whitespace-delimited words, remembering where each one ends so the
    // cut preserves original spacing.
    std::vector<std::size_t> word_ends;
    bool in_word = false;
    for (std::size_t i = 0; i < doc.text.size(); ++i) {
        const bool ws = std::isspace(static_cast<unsigned char>(doc.text[i])) != 0;
        if (!ws && !in_word) in_word = true;
        if (ws && in_word) {
            word_ends.push_back(i);
            in_word = false;
        }
    }
    if (in_word) word_ends.push_back(doc.text.size());

    const std::size_t n = word_ends.size();
    const std::size_t keep =
        std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(limit_tokens) - 1));
    if (n <= keep) return doc;

    Document out = doc;
    out.text = doc.text.substr(0, word_ends[keep - 1]);
    return out;
}

}  // namespace sgic
