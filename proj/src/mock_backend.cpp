#include <algorithm>

#include "sgic/errors.hpp"
#include "sgic/gateway.hpp"
#include "sgic/jsonl.hpp"
#include "sgic/util.hpp"

namespace sgic {

MockBackend::MockBackend(std::vector<MockEntry> entries, MockExhaustPolicy policy)
    : entries_(std::move(entries)), policy_(policy) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.text.empty() && e.probs.empty())
            throw InvalidInputError("mock entry " + std::to_string(i) + " has neither text nor probs");
        if (!e.match_prompt.empty()) {
            exact_index_.emplace(fnv1a64(e.match_prompt), i);
        } else if (e.match_contains.empty()) {
            sequence_order_.push_back(i);
        }
    }
}

std::shared_ptr<MockBackend> MockBackend::from_jsonl(const std::filesystem::path& path,
                                                     MockExhaustPolicy policy) {
    std::vector<MockEntry> entries;
    for (const auto& j : read_jsonl(path)) {
        MockEntry e;
        e.text = j.value("text", std::string{});
        e.probs = j.value("probs", std::vector<double>{});
        e.match_prompt = j.value("match_prompt", std::string{});
        if (j.contains("match_contains"))
            e.match_contains = j.at("match_contains").get<std::vector<std::string>>();
        entries.push_back(std::move(e));
    }
    return std::make_shared<MockBackend>(std::move(entries), policy);
}

GenerationResult MockBackend::generate(const GenRequest& req) {
    std::lock_guard<std::mutex> lk(mu_);
    calls_.fetch_add(1);

    const MockEntry* hit = nullptr;
    auto it = exact_index_.find(fnv1a64(req.prompt));
    if (it != exact_index_.end() && entries_[it->second].match_prompt == req.prompt) {
        hit = &entries_[it->second];
    }
    if (!hit) {
        for (const auto& e : entries_) {
            if (e.match_contains.empty()) continue;
            const bool all = std::all_of(
                e.match_contains.begin(), e.match_contains.end(),
                [&](const std::string& s) { return req.prompt.find(s) != std::string::npos; });
            if (all) {
                hit = &e;
                break;
            }
        }
    }
    if (!hit) {
        if (sequence_pos_ < sequence_order_.size()) {
            hit = &entries_[sequence_order_[sequence_pos_++]];
        } else if (policy_ == MockExhaustPolicy::repeat_last && !sequence_order_.empty()) {
            hit = &entries_[sequence_order_.back()];
        } else {
            throw MockScriptExhaustedError("mock script has no entry for prompt (call " +
                                           std::to_string(calls_.load()) + ")");
        }
    }

    GenerationResult r;
    r.text = hit->text;
    r.token_probs = hit->probs;
    r.finish = FinishReason::stop;
    r.backend_id = id();
    return r;
}

}  // namespace sgic
