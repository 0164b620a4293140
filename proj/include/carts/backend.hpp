#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace carts {

enum class AgentRole { keywords, gag, feedback, regeneration, arbitrator, judge };

std::string_view to_string(AgentRole role);

/// One prompt sent to a language agent.
struct AgentRequest {
    AgentRole role = AgentRole::gag;
    std::string module_id;
    /// Chain index, item id or "vanilla"; scripted replay keys on it.
    std::string scope;
    std::string prompt;
    std::uint64_t seed = 0;
};

class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    /// Returns the raw agent text. Throws BackendError.
    virtual std::string complete(const AgentRequest& request) = 0;
    virtual bool is_scripted() const { return false; }
};

/// Replays canned responses in order, one queue per stream.
///
/// A request is served by the first stream that exists among
///   "<module>/<role>:<scope>", "<module>/<role>", "<role>:<scope>", "<role>", "*"
/// and fails with ScriptExhausted once that stream runs dry. Each stream is
/// consumed sequentially, so scripts that give every chain its own stream
/// replay identically regardless of thread interleaving.
class ScriptedBackend final : public AgentBackend {
public:
    explicit ScriptedBackend(std::map<std::string, std::vector<std::string>> streams);

    /// Accepts either {"streams": {key: [..]}} or a bare array (the "*" stream).
    static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& script);
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

    std::string complete(const AgentRequest& request) override;
    bool is_scripted() const override { return true; }

    std::size_t remaining(const std::string& stream) const;
    /// Every request served so far, in arrival order.
    std::vector<AgentRequest> requests() const;

private:
    struct Stream {
        std::vector<std::string> responses;
        std::size_t cursor = 0;
    };

    mutable std::mutex mutex_;
    std::map<std::string, Stream> streams_;
    std::vector<AgentRequest> log_;
};

struct HttpBackendOptions {
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    double temperature = 0.7;
    /// Environment variable holding the bearer credential.
    std::string credential_env = "CARTS_API_KEY";
    int timeout_seconds = 120;
    /// Adds the per-chain seed to the request body.
    bool send_seed = true;
};

/// Chat-completions client: POST <endpoint>/chat/completions.
class HttpBackend final : public AgentBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    std::string complete(const AgentRequest& request) override;

    std::string request_body(const AgentRequest& request) const;
    /// Pulls choices[0].message.content out of a response body. Throws BackendError.
    static std::string extract_content(std::string_view response_body);

    bool has_credential() const { return !credential_.empty(); }

private:
    HttpBackendOptions options_;
    std::string origin_;
    std::string path_;
    std::string credential_;
};

/// Bounds the number of in-flight requests across all users of the wrapped backend.
class ThrottledBackend final : public AgentBackend {
public:
    ThrottledBackend(std::shared_ptr<AgentBackend> inner, std::size_t max_in_flight);

    std::string complete(const AgentRequest& request) override;
    bool is_scripted() const override { return inner_->is_scripted(); }

    std::size_t peak_in_flight() const;

private:
    std::shared_ptr<AgentBackend> inner_;
    std::size_t limit_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
    std::size_t peak_ = 0;
};

}  // namespace carts
