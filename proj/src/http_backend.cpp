#include <cmath>

#include "httplib.h"
#include "sgic/errors.hpp"
#include "sgic/gateway.hpp"

namespace sgic {

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.rfind("http://", 0) != 0)
        throw InvalidInputError("http backend requires an http:// base_url, got: " + cfg_.base_url);
    if (cfg_.model.empty()) throw InvalidInputError("http backend requires a model name");
}

std::string HttpBackend::id() const { return "http:" + cfg_.base_url + ":" + cfg_.model; }

GenerationResult HttpBackend::generate(const GenRequest& req) {
    json body;
    body["model"] = cfg_.model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (!req.stop.empty()) body["stop"] = req.stop;
    if (req.want_logprobs) body["logprobs"] = true;

    // httplib clients are not thread-safe; one per call keeps batching simple.
    httplib::Client cli(cfg_.base_url);
    cli.set_connection_timeout(cfg_.timeout_sec);
    cli.set_read_timeout(cfg_.timeout_sec);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    auto res = cli.Post(cfg_.path, headers, body.dump(), "application/json");
    if (!res)
        throw EndpointUnreachableError("no response from " + cfg_.base_url + ": " +
                                       httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw GatewayError("endpoint returned status " + std::to_string(res->status), true);
    if (res->status != 200)
        throw GatewayError("endpoint returned status " + std::to_string(res->status) + ": " + res->body,
                           false);

    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception& e) {
        throw GatewayError(std::string("unparseable endpoint response: ") + e.what(), false);
    }

    try {
        const auto& choice = j.at("choices").at(0);
        GenerationResult out;
        out.text = choice.at("message").at("content").get<std::string>();
        out.backend_id = id();
        const std::string fr = choice.value("finish_reason", "stop");
        out.finish = fr == "length" ? FinishReason::length : FinishReason::stop;

        if (req.want_logprobs) {
            if (!choice.contains("logprobs") || choice.at("logprobs").is_null() ||
                !choice.at("logprobs").contains("content"))
                throw LogprobsUnavailableError("endpoint did not return token logprobs; "
                                               "confidence scoring requires them");
            for (const auto& tok : choice.at("logprobs").at("content"))
                out.token_probs.push_back(std::exp(tok.at("logprob").get<double>()));
        }
        return out;
    } catch (const json::exception& e) {
        throw GatewayError(std::string("unexpected endpoint response shape: ") + e.what(), false);
    }
}

}  // namespace sgic
