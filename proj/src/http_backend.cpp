#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "xlstance/translation.hpp"

namespace xlstance {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty())
        throw ConfigError("http backend requires an endpoint");
    if (cfg_.api_key.empty())
        throw ConfigError(
            "http backend requires an API key; set it in the config or via the "
            "XLSTANCE_MT_API_KEY environment variable (or use --backend mock)");
    if (cfg_.attempts < 1) throw ConfigError("http backend attempts must be >= 1");
}

bool HttpBackend::supports(const std::string& src, const std::string& dst) const {
    if (cfg_.pairs.empty()) return true;
    if (src == dst) return true;
    return cfg_.pairs.count({src, dst}) > 0;
}

std::string HttpBackend::translate_raw(const std::string& text, const std::string& src,
                                       const std::string& dst) {
    if (src == dst) return text;

    const json body = {{"q", text}, {"source", src}, {"target", dst}, {"format", "text"}};
    int backoff_ms = cfg_.backoff_initial_ms;
    std::string last_error;
    bool saw_rate_limit = false;

    for (int attempt = 1; attempt <= cfg_.attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(cfg_.endpoint);
        client.set_read_timeout(cfg_.timeout_s, 0);
        client.set_connection_timeout(cfg_.timeout_s, 0);
        httplib::Headers headers = {{"Authorization", "Bearer " + cfg_.api_key}};
        auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429) {
            saw_rate_limit = true;
            last_error = "rate limited (429)";
            continue;
        }
        if (res->status != 200) {
            last_error = "unexpected status " + std::to_string(res->status);
            continue;
        }
        try {
            json reply = json::parse(res->body);
            return reply.at("data").at("translations").at(0).at("translatedText").get<std::string>();
        } catch (const json::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
            continue;
        }
    }

    // Distinct error kinds so callers can tell "resume later from cache"
    // apart from a plain outage.
    if (saw_rate_limit)
        throw TranslationError(TranslationErrorKind::rate_limited,
                               "rate limit persisted after " + std::to_string(cfg_.attempts) +
                                   " attempts for pair " + src + "->" + dst);
    throw TranslationError(TranslationErrorKind::transport,
                           "translation failed after " + std::to_string(cfg_.attempts) +
                               " attempts for pair " + src + "->" + dst + ": " + last_error);
}

}  // namespace xlstance
