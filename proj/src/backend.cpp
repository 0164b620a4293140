#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "carts/backend.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "carts/errors.hpp"

namespace carts {

using json = nlohmann::json;

std::string_view to_string(AgentRole role) {
    switch (role) {
        case AgentRole::keywords: return "keywords";
        case AgentRole::gag: return "gag";
        case AgentRole::feedback: return "feedback";
        case AgentRole::regeneration: return "regeneration";
        case AgentRole::arbitrator: return "arbitrator";
        case AgentRole::judge: return "judge";
    }
    return "gag";
}

ScriptedBackend::ScriptedBackend(std::map<std::string, std::vector<std::string>> streams) {
    for (auto& [key, responses] : streams) streams_[key] = Stream{std::move(responses), 0};
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& script) {
    std::map<std::string, std::vector<std::string>> streams;
    try {
        if (script.is_array()) {
            streams["*"] = script.get<std::vector<std::string>>();
        } else if (script.is_object() && script.contains("streams")) {
            for (const auto& [key, value] : script.at("streams").items())
                streams[key] = value.get<std::vector<std::string>>();
        } else {
            throw InvalidValue("script must be an array or an object with \"streams\"");
        }
    } catch (const json::exception& e) {
        throw InvalidValue(std::string("malformed script: ") + e.what());
    }
    return std::make_shared<ScriptedBackend>(std::move(streams));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path.string());
    json script;
    try {
        script = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidValue("script " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(script);
}

std::string ScriptedBackend::complete(const AgentRequest& request) {
    const std::string role(to_string(request.role));
    const std::string module_prefix = request.module_id + "/";
    const std::vector<std::string> keys = {
        module_prefix + role + ":" + request.scope,
        module_prefix + role,
        role + ":" + request.scope,
        role,
        "*",
    };
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    for (const auto& key : keys) {
        auto it = streams_.find(key);
        if (it == streams_.end()) continue;
        auto& stream = it->second;
        if (stream.cursor >= stream.responses.size()) throw ScriptExhausted(key);
        return stream.responses[stream.cursor++];
    }
    throw ScriptExhausted(keys.front());
}

std::size_t ScriptedBackend::remaining(const std::string& stream) const {
    std::lock_guard lock(mutex_);
    auto it = streams_.find(stream);
    if (it == streams_.end()) return 0;
    return it->second.responses.size() - it->second.cursor;
}

std::vector<AgentRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    std::string endpoint = options_.endpoint;
    while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidConfig("endpoint must start with http:// or https://");
    const auto scheme = endpoint.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw InvalidConfig("unsupported endpoint scheme: " + scheme);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    origin_ = endpoint.substr(0, path_start);
    path_ = (path_start == std::string::npos ? std::string{} : endpoint.substr(path_start)) +
            "/chat/completions";
    if (const char* key = std::getenv(options_.credential_env.c_str())) credential_ = key;
}

std::string HttpBackend::request_body(const AgentRequest& request) const {
    json body = {
        {"model", options_.model},
        {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", options_.temperature},
    };
    if (options_.send_seed) body["seed"] = request.seed & 0x7FFFFFFFFFFFFFFFULL;
    return body.dump();
}

std::string HttpBackend::extract_content(std::string_view response_body) {
    json parsed = json::parse(response_body, nullptr, false);
    if (parsed.is_discarded()) throw BackendError("response body is not JSON");
    const auto* choices = parsed.contains("choices") ? &parsed["choices"] : nullptr;
    if (!choices || !choices->is_array() || choices->empty())
        throw BackendError("response has no choices");
    const auto& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string())
        throw BackendError("response has no choices[0].message.content");
    return first["message"]["content"].get<std::string>();
}

std::string HttpBackend::complete(const AgentRequest& request) {
    httplib::Client client(origin_);
    client.set_connection_timeout(options_.timeout_seconds);
    client.set_read_timeout(options_.timeout_seconds);
    client.set_write_timeout(options_.timeout_seconds);
    httplib::Headers headers;
    if (!credential_.empty()) headers.emplace("Authorization", "Bearer " + credential_);
    auto result = client.Post(path_, headers, request_body(request), "application/json");
    if (!result) {
        throw BackendError("request to " + origin_ + path_ +
                           " failed: " + httplib::to_string(result.error()));
    }
    if (result->status < 200 || result->status >= 300) {
        throw BackendError("request to " + origin_ + path_ + " returned status " +
                           std::to_string(result->status));
    }
    return extract_content(result->body);
}

ThrottledBackend::ThrottledBackend(std::shared_ptr<AgentBackend> inner, std::size_t max_in_flight)
    : inner_(std::move(inner)), limit_(max_in_flight == 0 ? 1 : max_in_flight) {}

std::string ThrottledBackend::complete(const AgentRequest& request) {
    {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < limit_; });
        ++in_flight_;
        peak_ = std::max(peak_, in_flight_);
    }
    struct Release {
        ThrottledBackend* self;
        ~Release() {
            {
                std::lock_guard lock(self->mutex_);
                --self->in_flight_;
            }
            self->cv_.notify_one();
        }
    } release{this};
    return inner_->complete(request);
}

std::size_t ThrottledBackend::peak_in_flight() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

}  // namespace carts
