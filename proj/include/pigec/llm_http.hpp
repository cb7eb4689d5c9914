#pragma once

// HTTP adapters for hosted completion services. Kept out of llm.hpp so
// code that only needs the mock does not pull in cpp-httplib.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "pigec/errors.hpp"
#include "pigec/llm.hpp"

namespace pigec {

enum class WireFormat { Chat, Completion };

struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-3.5-turbo-16k";
    std::string api_key;
    WireFormat wire = WireFormat::Chat;
    std::chrono::seconds timeout{60};
    int max_concurrency = 1;

    /// LLM_BASE_URL, LLM_MODEL and LLM_API_KEY override the defaults.
    static HttpBackendConfig from_env() {
        HttpBackendConfig c;
        if (const char* v = std::getenv("LLM_BASE_URL"); v && *v) c.base_url = v;
        if (const char* v = std::getenv("LLM_MODEL"); v && *v) c.model = v;
        if (const char* v = std::getenv("LLM_API_KEY"); v && *v) c.api_key = v;
        return c;
    }
};

/// Split "scheme://host[:port][/prefix]" into origin and path prefix.
inline std::pair<std::string, std::string> split_base_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw FormatError("base URL needs a scheme: " + std::string(url));
    const auto path_start = url.find('/', scheme_end + 3);
    std::string origin(url.substr(0, path_start));
    std::string prefix = path_start == std::string_view::npos ? std::string() : std::string(url.substr(path_start));
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {origin, prefix};
}

/// Request body in the chat-completions or completions dialect.
inline nlohmann::json make_request_body(const CompletionRequest& req, std::string_view model, WireFormat wire) {
    nlohmann::json body{{"model", model}, {"temperature", req.temperature}, {"max_tokens", req.max_tokens}};
    if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
    if (wire == WireFormat::Chat)
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}});
    else
        body["prompt"] = req.prompt;
    return body;
}

/// Pull the generated text out of a response body.
inline std::string parse_response_body(std::string_view body, WireFormat wire) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendRefusal(std::string("response is not JSON: ") + e.what());
    }
    if (j.contains("error")) throw BackendRefusal("backend error: " + j["error"].dump());
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw BackendRefusal("response has no choices");
    const auto& choice = j["choices"][0];
    if (choice.value("finish_reason", std::string()) == "content_filter")
        throw BackendRefusal("completion withheld by content filter");
    try {
        if (wire == WireFormat::Chat) {
            const auto& content = choice.at("message").at("content");
            return content.is_null() ? std::string() : content.get<std::string>();
        }
        return choice.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendRefusal(std::string("unexpected response shape: ") + e.what());
    }
}

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config)
        : config_(std::move(config)),
          slots_(std::clamp(config_.max_concurrency, 1, 1024)) {
        auto [origin, prefix] = split_base_url(config_.base_url);
        origin_ = std::move(origin);
        path_ = prefix + (config_.wire == WireFormat::Chat ? "/chat/completions" : "/completions");
    }

    std::string generate(const CompletionRequest& request) override {
        const std::string body = make_request_body(request, config_.model, config_.wire).dump();

        slots_.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{slots_};

        httplib::Client client(origin_);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        httplib::Headers headers;
        if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + origin_ + path_);
        if (res->status != 200)
            throw BackendRefusal("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        return parse_response_body(res->body, config_.wire);
    }

    std::string model_name() const override { return config_.model; }
    const HttpBackendConfig& config() const noexcept { return config_; }

private:
    HttpBackendConfig config_;
    std::counting_semaphore<1024> slots_;
    std::string origin_;
    std::string path_;
};

}  // namespace pigec
