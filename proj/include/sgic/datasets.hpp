#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgic/gateway.hpp"
#include "sgic/types.hpp"

namespace sgic {

struct LoadStats {
    long total = 0;    // records seen in the source
    long loaded = 0;   // samples that passed all invariants
    long skipped = 0;  // malformed or invariant-violating records
    std::map<std::string, long> skip_reasons;

    json to_json() const;
};

struct LoadResult {
    std::vector<QASample> samples;
    LoadStats stats;
};

// Official distractor-format JSON: an array of records with question, answer,
// type, 10 context paragraphs, and supporting-fact titles. Samples must have
// 10 documents with at least 2 flagged relevant; others are skipped.
LoadResult load_hotpotqa(const std::filesystem::path& path, Split split, long limit = -1);

// Source JSONL, one page per line:
//   {"id": ..., "question": ..., "answers": [...],
//    "passages": [{"title": ..., "text": ..., "is_gold": bool}, ...]}
// Builds the gold passage plus nine same-page distractors (sampling with
// replacement and flagging "padded_duplicates" when fewer exist), shuffled by
// a per-sample seed. Exactly one gold per emitted sample.
LoadResult reconstruct_nq(const std::filesystem::path& path, Split split, long limit,
                          std::uint64_t seed);

// Grade-school math JSONL with {"question", "answer"} where the answer holds
// newline-separated reasoning steps and a "#### <number>" tail. Each step
// becomes one document. With a gateway, steps come from a model generation
// instead of the reference solution.
LoadResult load_gsm8k_steps(const std::filesystem::path& path, Split split, long limit = -1,
                            Gateway* gateway = nullptr);

// "#### 55,000" -> "55000"; commas, dollar signs, and surrounding space
// stripped. Empty when no final-answer delimiter is present.
std::optional<std::string> parse_gsm8k_final_answer(const std::string& answer_text);

// Internal-format cache: QASample JSONL round-trip.
std::vector<QASample> load_jsonl_samples(const std::filesystem::path& path);
void save_jsonl_samples(const std::vector<QASample>& samples, const std::filesystem::path& path);

}  // namespace sgic
