#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "sgic/score.hpp"
#include "sgic/types.hpp"

namespace sgic {

// The five prompt layouts, held as plain text with {placeholders}. Wording is
// frozen: golden tests pin the rendered bytes, so edits must update both the
// embedded defaults and the files under templates/.
struct TemplateSet {
    std::string initial_qa;
    std::string doc_probe;
    std::string calibration;
    std::string key_tag;
    std::string gsm8k_calibration;

    static TemplateSet defaults();
    // Reads <dir>/<template_id>.txt for each template. Lines starting with '#'
    // are comments; trailing whitespace is stripped.
    static TemplateSet load_dir(const std::filesystem::path& dir);
};

struct RenderOptions {
    int doc_token_limit = 200;  // whitespace-word cap applied to every document
};

struct RoundHistoryEntry {
    int round_index = 1;  // display index; the initial answer is round 1
    std::string answer_text;
    int uncertainty_display = 0;  // 0-100 integer as shown in the prompt
};

enum class Placement { begin, middle, end, random };
Placement placement_from_string(const std::string& s);
std::string to_string(Placement p);

// Formats a real score the way prompts show it: round-half-up to an integer.
int display_score(double score);

std::string render_initial(const TemplateSet& t, const QASample& sample,
                           const RenderOptions& opts = {});
std::string render_doc_probe(const TemplateSet& t, const std::string& question,
                             const Document& doc, const RenderOptions& opts = {});
std::string render_calibration(const TemplateSet& t, const QASample& sample,
                               const DocScoreSet& doc_scores,
                               const std::vector<RoundHistoryEntry>& history,
                               const RenderOptions& opts = {});
std::string render_key_tag(const TemplateSet& t, const QASample& sample,
                           const std::set<std::string>& tagged_doc_ids,
                           const RenderOptions& opts = {});

struct GsmStep {
    std::string text;
    int score = 0;
};
std::string render_gsm8k_calibration(const TemplateSet& t, const std::string& question,
                                     const std::vector<GsmStep>& steps);

// Reorders documents so the gold-relevant ones land in the requested region;
// every document is preserved exactly once. Requires relevance flags.
QASample permute_documents(const QASample& sample, Placement placement, std::uint64_t seed);

// Caps the text at limit-1 whitespace words (never fewer than one), cutting at
// a word boundary and preserving the original spacing of the kept prefix.
Document truncate_document(const Document& doc, int limit_tokens);

}  // namespace sgic
