#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "subgrain/errors.hpp"
#include "subgrain/jsonl.hpp"
#include "subgrain/util.hpp"

namespace subgrain::backends {

// ---------------------------------------------------------------- types

enum class Role { describe, summarize, translate };

inline std::string_view role_name(Role r) {
    switch (r) {
        case Role::describe: return "describe";
        case Role::summarize: return "summarize";
        case Role::translate: return "translate";
    }
    return "?";
}

inline Role role_from_name(std::string_view name) {
    if (name == "describe") return Role::describe;
    if (name == "summarize") return Role::summarize;
    if (name == "translate") return Role::translate;
    throw ConfigError("unknown backend role \"" + std::string(name) + "\"");
}

struct DecodingParams {
    int max_new_tokens = 256;
    bool greedy = true;
    double repetition_penalty = 1.0;
    double temperature = 1.0;
    double top_p = 1.0;
};

inline DecodingParams translator_decoding_defaults() {
    return {100, true, 1.1, 1.0, 1.0};
}

inline DecodingParams summarizer_decoding_defaults() {
    return {256, true, 1.0, 1.0, 1.0};
}

inline DecodingParams default_decoding(Role role) {
    return role == Role::translate ? translator_decoding_defaults() : summarizer_decoding_defaults();
}

struct RetryPolicy {
    int attempts = 3;     // total tries, including the first
    int backoff_ms = 200; // fixed wait between tries
};

struct BackendProfile {
    Role role = Role::translate;
    std::string endpoint;   // "mock:echo", "mock:hash", "mock:script:<path>", or an http(s) base URL
    std::string model_name;
    DecodingParams params;
    int max_concurrency = 4;
    int timeout_ms = 30000;
    RetryPolicy retry;
    bool raw_template = false;     // send the pre-formatted chat string instead of messages
    std::uint64_t mock_seed = 0;
    std::string api_key;           // overridden by SUBGRAIN_API_KEY_<ROLE> when set
};

inline std::string resolve_api_key(const BackendProfile& profile) {
    std::string var = "SUBGRAIN_API_KEY_";
    for (const char c : role_name(profile.role)) var += static_cast<char>(std::toupper(c));
    if (const char* env = std::getenv(var.c_str())) return env;
    return profile.api_key;
}

// ------------------------------------------------------------ interface

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    /// One completion. raw_text is the pre-formatted chat string and is only
    /// consulted by transports running in raw-template mode.
    virtual std::string complete(std::string_view system_text, std::string_view user_text,
                                 std::string_view raw_text) = 0;

    virtual std::string describe_image(const std::filesystem::path& image) = 0;
};

// ----------------------------------------------------------------- mock

struct MockRule {
    std::string contains; // substring of the effective prompt text
    std::string output;
    int fail_times = 0;   // throw a retriable error this many times first
};

/// Deterministic stand-in for a model server. Output is either an echo of
/// the user text, a scripted rule match, or a stable function of
/// (role, seed, prompt hash). Counts calls for cache/retry assertions.
class MockBackend : public ChatBackend {
public:
    enum class Mode { echo, hash, scripted };

    MockBackend(Role role, Mode mode, std::uint64_t seed = 0, std::vector<MockRule> rules = {})
        : role_(role), mode_(mode), seed_(seed), rules_(std::move(rules)) {}

    std::string complete(std::string_view system_text, std::string_view user_text,
                         std::string_view raw_text) override {
        calls_.fetch_add(1);
        const std::string prompt = raw_text.empty()
            ? std::string(system_text) + "\n" + std::string(user_text)
            : std::string(raw_text);
        {
            std::lock_guard lock(mutex_);
            prompts_.push_back(prompt);
        }
        if (mode_ == Mode::echo) return "ECHO:" + std::string(user_text);
        if (mode_ == Mode::scripted) {
            std::lock_guard lock(mutex_);
            for (auto& rule : rules_) {
                if (prompt.find(rule.contains) == std::string::npos) continue;
                if (rule.fail_times > 0) {
                    --rule.fail_times;
                    throw BackendError("scripted transport failure", /*retriable=*/true);
                }
                return rule.output;
            }
        }
        return hash_output(prompt);
    }

    std::string describe_image(const std::filesystem::path& image) override {
        calls_.fetch_add(1);
        if (!std::filesystem::exists(image)) {
            throw IoError("cannot read image " + image.string());
        }
        return "mock description of " + replace_all(image.stem().string(), "_", " ");
    }

    std::size_t call_count() const { return calls_.load(); }
    std::vector<std::string> prompts() const {
        std::lock_guard lock(mutex_);
        return prompts_;
    }

private:
    std::string hash_output(std::string_view prompt) const {
        return "mock:" + std::string(role_name(role_)) + ":" + to_hex(fnv1a64(prompt, seed_));
    }

    Role role_;
    Mode mode_;
    std::uint64_t seed_;
    std::vector<MockRule> rules_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

inline std::vector<MockRule> load_mock_script(const std::filesystem::path& path) {
    const Json doc = Json::parse(read_file(path));
    if (!doc.is_array()) throw FormatError(path.string() + ": mock script must be a JSON array");
    std::vector<MockRule> rules;
    for (const auto& entry : doc) {
        MockRule rule;
        rule.contains = entry.at("contains").get<std::string>();
        rule.output = entry.at("output").get<std::string>();
        rule.fail_times = entry.value("fail_times", 0);
        rules.push_back(std::move(rule));
    }
    return rules;
}

// ----------------------------------------------------------------- http

/// Chat-completion JSON client. Message mode posts to /v1/chat/completions
/// with {model, messages, decoding params}; raw-template mode posts the
/// pre-formatted string to /v1/completions as {model, prompt, ...}.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendProfile profile) : profile_(std::move(profile)) {}

    std::string complete(std::string_view system_text, std::string_view user_text,
                         std::string_view raw_text) override {
        Json body;
        const bool raw_mode = profile_.raw_template && !raw_text.empty();
        body["model"] = profile_.model_name;
        if (raw_mode) {
            body["prompt"] = std::string(raw_text);
        } else {
            body["messages"] = Json::array({
                Json{{"role", "system"}, {"content", std::string(system_text)}},
                Json{{"role", "user"}, {"content", std::string(user_text)}},
            });
        }
        append_decoding(body);
        const Json reply = post(raw_mode ? "/v1/completions" : "/v1/chat/completions", body);
        return extract_text(reply, raw_mode);
    }

    std::string describe_image(const std::filesystem::path& image) override {
        std::string bytes;
        try {
            bytes = read_file(image);
        } catch (const IoError&) {
            throw IoError("cannot read image " + image.string());
        }
        Json body;
        body["model"] = profile_.model_name;
        body["messages"] = Json::array({
            Json{{"role", "user"}, {"content", "Describe the image."}},
        });
        body["image_b64"] = httplib::detail::base64_encode(bytes);
        append_decoding(body);
        return extract_text(post("/v1/chat/completions", body), /*raw_mode=*/false);
    }

private:
    void append_decoding(Json& body) const {
        body["max_new_tokens"] = profile_.params.max_new_tokens;
        body["greedy"] = profile_.params.greedy;
        body["repetition_penalty"] = profile_.params.repetition_penalty;
        body["temperature"] = profile_.params.temperature;
        body["top_p"] = profile_.params.top_p;
    }

    Json post(const std::string& path, const Json& body) const {
        httplib::Client client(profile_.endpoint);
        client.set_connection_timeout(std::chrono::milliseconds(profile_.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(profile_.timeout_ms));
        httplib::Headers headers;
        const std::string key = resolve_api_key(profile_);
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

        const auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            throw BackendError("transport failure contacting " + profile_.endpoint + ": " +
                                   httplib::to_string(res.error()),
                               /*retriable=*/true);
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " +
                                   res->body.substr(0, 200),
                               /*retriable=*/false);
        }
        Json reply = Json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) {
            throw BackendError("backend returned invalid JSON: " + res->body.substr(0, 200),
                               /*retriable=*/false);
        }
        return reply;
    }

    static std::string extract_text(const Json& reply, bool raw_mode) {
        std::string text;
        try {
            const auto& choice = reply.at("choices").at(0);
            text = raw_mode ? choice.at("text").get<std::string>()
                            : choice.at("message").at("content").get<std::string>();
        } catch (const Json::exception&) {
            throw BackendError("backend reply missing completion text", /*retriable=*/false);
        }
        if (text.empty()) throw BackendError("backend returned an empty completion", /*retriable=*/false);
        return text;
    }

    BackendProfile profile_;
};

// --------------------------------------------------------------- client

inline std::unique_ptr<ChatBackend> make_transport(const BackendProfile& profile) {
    const std::string& ep = profile.endpoint;
    if (ep == "mock:echo") return std::make_unique<MockBackend>(profile.role, MockBackend::Mode::echo, profile.mock_seed);
    if (ep == "mock:hash") return std::make_unique<MockBackend>(profile.role, MockBackend::Mode::hash, profile.mock_seed);
    if (ep.rfind("mock:script:", 0) == 0) {
        return std::make_unique<MockBackend>(profile.role, MockBackend::Mode::scripted, profile.mock_seed,
                                             load_mock_script(ep.substr(12)));
    }
    if (ep.rfind("http://", 0) == 0 || ep.rfind("https://", 0) == 0) {
        return std::make_unique<HttpBackend>(profile);
    }
    throw ConfigError("unrecognized backend endpoint \"" + ep + "\"");
}

/// Profile-scoped entry point: caps in-flight requests at max_concurrency
/// and retries retriable failures per the profile's policy.
class BackendClient {
public:
    explicit BackendClient(BackendProfile profile)
        : profile_(std::move(profile)),
          transport_(make_transport(profile_)),
          slots_(std::max(1, profile_.max_concurrency)) {}

    BackendClient(BackendProfile profile, std::unique_ptr<ChatBackend> transport)
        : profile_(std::move(profile)),
          transport_(std::move(transport)),
          slots_(std::max(1, profile_.max_concurrency)) {}

    const BackendProfile& profile() const { return profile_; }

    /// Logical requests issued through this client (retries not counted).
    std::size_t calls() const { return calls_.load(); }

    std::string complete(std::string_view system_text, std::string_view user_text,
                         std::string_view raw_text = {}) {
        calls_.fetch_add(1);
        std::string out =
            with_retry([&] { return transport_->complete(system_text, user_text, raw_text); });
        if (out.empty()) {
            throw BackendError("backend returned an empty completion", /*retriable=*/false);
        }
        return out;
    }

    std::string describe_image(const std::filesystem::path& image) {
        calls_.fetch_add(1);
        return with_retry([&] { return transport_->describe_image(image); });
    }

    /// The underlying transport, e.g. to reach MockBackend counters in tests.
    ChatBackend& transport() { return *transport_; }

private:
    template <typename Fn>
    std::string with_retry(Fn&& fn) {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};

        const int attempts = std::max(1, profile_.retry.attempts);
        for (int attempt = 1;; ++attempt) {
            try {
                return fn();
            } catch (const BackendError& e) {
                if (!e.retriable() || attempt >= attempts) throw;
                std::this_thread::sleep_for(std::chrono::milliseconds(profile_.retry.backoff_ms));
            }
        }
    }

    BackendProfile profile_;
    std::unique_ptr<ChatBackend> transport_;
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> calls_{0};
};

// One-shot conveniences mirroring the profile-level operations.

inline std::string complete(const BackendProfile& profile, std::string_view system_text,
                            std::string_view user_text, std::string_view raw_text = {}) {
    BackendClient client(profile);
    return client.complete(system_text, user_text, raw_text);
}

inline std::string describe_frame(const BackendProfile& profile, const std::filesystem::path& image) {
    BackendClient client(profile);
    return client.describe_image(image);
}

} // namespace subgrain::backends
