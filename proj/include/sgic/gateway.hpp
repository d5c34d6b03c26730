#pragma once

#include <atomic>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgic/types.hpp"

namespace sgic {

struct GenRequest {
    std::string prompt;
    double temperature = 0.0;  // 0 means greedy decoding
    int max_tokens = 256;
    std::vector<std::string> stop;
    bool want_logprobs = true;

    // Deterministic content hash over all fields.
    std::string request_key() const;
};

enum class FinishReason { stop, length, error };

std::string to_string(FinishReason f);
FinishReason finish_from_string(const std::string& s);

struct GenerationResult {
    std::string text;
    std::vector<double> token_probs;  // exp(logprob) of each emitted token
    FinishReason finish = FinishReason::stop;
    std::string backend_id;

    json to_json() const;
    static GenerationResult from_json(const json& j);
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenRequest& req) = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend for offline runs and tests.
//
// Matching order per request:
//   1. exact prompt match (canonical hash of the full prompt),
//   2. contains-all match (every listed substring occurs in the prompt),
//      entries tried in script order, reusable,
//   3. ordered-sequence fallback: entries with no matcher, consumed one per
//      call in script order; exhaustion follows the configured policy.
// ---------------------------------------------------------------------------

struct MockEntry {
    std::string match_prompt;                 // exact match when non-empty
    std::vector<std::string> match_contains;  // all-of substrings when non-empty
    std::string text;
    std::vector<double> probs;
};

enum class MockExhaustPolicy { error, repeat_last };

class MockBackend : public Backend {
public:
    explicit MockBackend(std::vector<MockEntry> entries,
                         MockExhaustPolicy policy = MockExhaustPolicy::error);

    // JSONL, one entry per line:
    //   {"text": ..., "probs": [...], "match_prompt"?: ..., "match_contains"?: [...]}
    static std::shared_ptr<MockBackend> from_jsonl(const std::filesystem::path& path,
                                                   MockExhaustPolicy policy = MockExhaustPolicy::error);

    GenerationResult generate(const GenRequest& req) override;
    std::string id() const override { return "mock"; }

    long calls() const { return calls_.load(); }

private:
    std::vector<MockEntry> entries_;
    std::unordered_map<std::uint64_t, std::size_t> exact_index_;
    std::vector<std::size_t> sequence_order_;  // entries with no matcher
    std::size_t sequence_pos_ = 0;
    MockExhaustPolicy policy_;
    std::atomic<long> calls_{0};
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Chat-completions HTTP backend with per-token logprobs.
// ---------------------------------------------------------------------------

struct HttpBackendConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key;
    int timeout_sec = 120;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);
    GenerationResult generate(const GenRequest& req) override;
    std::string id() const override;

private:
    HttpBackendConfig cfg_;
};

// ---------------------------------------------------------------------------
// Gateway: caching, retries, bounded-concurrency batching over a Backend.
// ---------------------------------------------------------------------------

struct GenOutcome {
    std::optional<GenerationResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }
};

struct GatewayOptions {
    std::filesystem::path cache_dir;  // empty disables the disk cache
    int max_retries = 3;              // retry attempts after the first try
    int backoff_base_ms = 500;
    double backoff_factor = 2.0;
};

class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayOptions opts = {});

    // Greedy requests are served from the disk cache when possible and
    // deduplicated in flight; identical concurrent requests cost one backend
    // call. Sampled requests always reach the backend.
    GenerationResult generate(const GenRequest& req);

    // Results come back in input order regardless of completion order.
    // Per-slot failures are reported in the slot, not thrown.
    std::vector<GenOutcome> generate_batch(const std::vector<GenRequest>& reqs,
                                           int max_in_flight);

    long backend_calls() const { return backend_calls_.load(); }
    Backend& backend() { return *backend_; }

private:
    GenerationResult call_with_retries(const GenRequest& req);
    std::optional<GenerationResult> cache_lookup(const std::string& key, const GenRequest& req);
    void cache_store(const std::string& key, const GenRequest& req, const GenerationResult& res);
    std::string cache_key(const GenRequest& req) const;

    std::shared_ptr<Backend> backend_;
    GatewayOptions opts_;
    std::atomic<long> backend_calls_{0};
    std::mutex inflight_mu_;
    std::unordered_map<std::string, std::shared_future<GenerationResult>> inflight_;
};

}  // namespace sgic
