#include "sgic/gateway.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "sgic/errors.hpp"
#include "sgic/jsonl.hpp"
#include "sgic/util.hpp"

namespace sgic {

std::string GenRequest::request_key() const {
    json j;
    j["prompt"] = prompt;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    j["stop"] = stop;
    j["want_logprobs"] = want_logprobs;
    return hex64(fnv1a64(j.dump()));
}

std::string to_string(FinishReason f) {
    switch (f) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_from_string(const std::string& s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    if (s == "error") return FinishReason::error;
    throw InvalidInputError("unknown finish reason: " + s);
}

json GenerationResult::to_json() const {
    json j;
    j["text"] = text;
    j["token_probs"] = token_probs;
    j["finish"] = to_string(finish);
    j["backend_id"] = backend_id;
    return j;
}

GenerationResult GenerationResult::from_json(const json& j) {
    GenerationResult r;
    r.text = j.at("text").get<std::string>();
    r.token_probs = j.at("token_probs").get<std::vector<double>>();
    r.finish = finish_from_string(j.at("finish").get<std::string>());
    r.backend_id = j.value("backend_id", std::string{});
    return r;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions opts)
    : backend_(std::move(backend)), opts_(std::move(opts)) {
    if (!backend_) throw InvalidInputError("Gateway requires a backend");
    if (!opts_.cache_dir.empty()) std::filesystem::create_directories(opts_.cache_dir);
}

std::string Gateway::cache_key(const GenRequest& req) const {
    // Scope the key to the backend so switching models invalidates the cache.
    return hex64(fnv1a64(req.request_key(), fnv1a64(backend_->id())));
}

std::optional<GenerationResult> Gateway::cache_lookup(const std::string& key,
                                                      const GenRequest& req) {
    if (opts_.cache_dir.empty()) return std::nullopt;
    const auto path = opts_.cache_dir / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt;  // truncated write from a killed run; treat as miss
    }
    // The record echoes its request; verify it to rule out hash collisions.
    if (j.value("prompt", std::string{}) != req.prompt) return std::nullopt;
    try {
        return GenerationResult::from_json(j.at("result"));
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void Gateway::cache_store(const std::string& key, const GenRequest& req,
                          const GenerationResult& res) {
    if (opts_.cache_dir.empty()) return;
    json j;
    j["prompt"] = req.prompt;
    j["temperature"] = req.temperature;
    j["max_tokens"] = req.max_tokens;
    j["result"] = res.to_json();
    write_text_file_atomic(opts_.cache_dir / (key + ".json"), j.dump(2) + "\n");
}

GenerationResult Gateway::call_with_retries(const GenRequest& req) {
    int attempt = 0;
    for (;;) {
        try {
            auto res = backend_->generate(req);
            backend_calls_.fetch_add(1);
            return res;
        } catch (const GatewayError& e) {
            backend_calls_.fetch_add(1);
            if (!e.retryable || attempt >= opts_.max_retries) throw;
            const auto delay_ms = static_cast<long>(
                opts_.backoff_base_ms * std::pow(opts_.backoff_factor, attempt));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            ++attempt;
        }
    }
}

GenerationResult Gateway::generate(const GenRequest& req) {
    if (req.temperature != 0.0) return call_with_retries(req);

    const std::string key = cache_key(req);
    if (auto hit = cache_lookup(key, req)) return *hit;

    // In-flight dedup: the first thread to ask becomes the leader and the
    // rest wait on its future instead of issuing duplicate backend calls.
    std::promise<GenerationResult> prom;
    std::shared_future<GenerationResult> fut;
    bool leader = false;
    {
        std::lock_guard<std::mutex> lk(inflight_mu_);
        auto it = inflight_.find(key);
        if (it != inflight_.end()) {
            fut = it->second;
        } else {
            fut = prom.get_future().share();
            inflight_.emplace(key, fut);
            leader = true;
        }
    }
    if (!leader) return fut.get();

    try {
        std::optional<GenerationResult> res = cache_lookup(key, req);
        if (!res) {
            res = call_with_retries(req);
            cache_store(key, req, *res);
        }
        prom.set_value(*res);
    } catch (...) {
        prom.set_exception(std::current_exception());
        std::lock_guard<std::mutex> lk(inflight_mu_);
        inflight_.erase(key);
        throw;
    }
    {
        std::lock_guard<std::mutex> lk(inflight_mu_);
        inflight_.erase(key);
    }
    return fut.get();
}

std::vector<GenOutcome> Gateway::generate_batch(const std::vector<GenRequest>& reqs,
                                                int max_in_flight) {
    if (max_in_flight < 1) throw InvalidInputError("max_in_flight must be >= 1");
    std::vector<GenOutcome> out(reqs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= reqs.size()) return;
            try {
                out[i].result = generate(reqs[i]);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), reqs.size());
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace sgic
