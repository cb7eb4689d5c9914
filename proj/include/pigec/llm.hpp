#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pigec/errors.hpp"

namespace pigec {

struct CompletionRequest {
    std::string prompt;
    std::vector<std::string> stop_sequences;
    int max_tokens = 256;
    double temperature = 0.0;

    void validate() const {
        if (max_tokens <= 0) throw RangeError("max_tokens must be positive");
        if (temperature < 0) throw RangeError("temperature must be non-negative");
    }
};

/// A text-completion service. Implementations must be callable from
/// several threads at once.
class Backend {
public:
    virtual ~Backend() = default;

    /// Raw model output for the request. Stop sequences are a hint here;
    /// callers truncate again on their side.
    virtual std::string generate(const CompletionRequest& request) = 0;

    virtual std::string model_name() const { return "unknown"; }
};

/// Cut `text` at the earliest occurrence of any stop sequence.
inline std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
    std::size_t cut = text.size();
    for (const auto& s : stops) {
        if (s.empty()) continue;
        if (auto p = text.find(s); p != std::string_view::npos) cut = std::min(cut, p);
    }
    return std::string(text.substr(0, cut));
}

// ---------------------------------------------------------------------------
// Transcript

enum class Direction { ToModel, FromModel };

struct Turn {
    Direction direction = Direction::ToModel;
    std::string text;
    std::int64_t timestamp = 0;

    friend bool operator==(const Turn&, const Turn&) = default;
};

/// Append-only record of one session's exchange with a backend.
class Transcript {
public:
    void append(Direction d, std::string text, std::int64_t timestamp) {
        if (turns_.empty() && d != Direction::ToModel) throw FormatError("transcript must start with a ToModel turn");
        if (d == Direction::FromModel && turns_.back().direction != Direction::ToModel)
            throw FormatError("FromModel turn must follow a ToModel turn");
        turns_.push_back(Turn{d, std::move(text), timestamp});
    }

    const std::vector<Turn>& turns() const noexcept { return turns_; }
    std::size_t size() const noexcept { return turns_.size(); }
    bool empty() const noexcept { return turns_.empty(); }

    friend bool operator==(const Transcript&, const Transcript&) = default;

private:
    std::vector<Turn> turns_;
};

inline nlohmann::json transcript_to_json(const Transcript& t) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& turn : t.turns()) {
        turns.push_back({{"direction", turn.direction == Direction::ToModel ? "to_model" : "from_model"},
                         {"text", turn.text},
                         {"timestamp", turn.timestamp}});
    }
    return {{"turns", std::move(turns)}};
}

inline Transcript transcript_from_json(const nlohmann::json& j) {
    Transcript t;
    for (const auto& turn : j.at("turns")) {
        const auto dir = turn.at("direction").get<std::string>();
        if (dir != "to_model" && dir != "from_model") throw FormatError("bad turn direction '" + dir + "'");
        t.append(dir == "to_model" ? Direction::ToModel : Direction::FromModel, turn.at("text").get<std::string>(),
                 turn.at("timestamp").get<std::int64_t>());
    }
    return t;
}

// ---------------------------------------------------------------------------
// Session: one transcript, retries, stop handling

using Clock = std::function<std::int64_t()>;

/// Counts turns; keeps transcripts byte-identical across runs.
inline Clock logical_clock() {
    auto tick = std::make_shared<std::int64_t>(0);
    return [tick] { return (*tick)++; };
}

/// Milliseconds since the epoch.
inline Clock wall_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{8000};
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

struct SessionOptions {
    RetryPolicy retry{};
    Clock clock{};  // logical clock when empty
    int max_tokens = 256;
    double temperature = 0.0;
};

class Session {
public:
    explicit Session(Backend& backend, SessionOptions options = {})
        : backend_(&backend), options_(std::move(options)) {
        if (!options_.clock) options_.clock = logical_clock();
    }

    /// Send `prompt`, return the reply cut at the first stop sequence.
    std::string complete(const std::string& prompt, std::vector<std::string> stops) {
        CompletionRequest req{prompt, std::move(stops), options_.max_tokens, options_.temperature};
        return complete(req);
    }

    std::string complete(const CompletionRequest& request) {
        request.validate();
        transcript_.append(Direction::ToModel, request.prompt, options_.clock());
        std::string raw = generate_with_retry(request);
        std::string reply = truncate_at_stop(raw, request.stop_sequences);
        transcript_.append(Direction::FromModel, reply, options_.clock());
        ++calls_;
        return reply;
    }

    const Transcript& transcript() const noexcept { return transcript_; }
    Transcript take_transcript() { return std::move(transcript_); }
    std::size_t calls() const noexcept { return calls_; }
    const SessionOptions& options() const noexcept { return options_; }

private:
    std::string generate_with_retry(const CompletionRequest& request) {
        auto delay = options_.retry.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                return backend_->generate(request);
            } catch (const TransportError&) {
                if (attempt >= options_.retry.max_attempts) throw;
                if (options_.retry.sleep) options_.retry.sleep(delay);
                delay = std::min(delay * 2, options_.retry.max_backoff);
            }
        }
    }

    Backend* backend_;
    SessionOptions options_;
    Transcript transcript_;
    std::size_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock

/// Answers with the reply whose pattern is the longest suffix of the prompt.
/// Immutable after construction, so safe to share between threads.
class ScriptedMock : public Backend {
public:
    using Script = std::vector<std::pair<std::string, std::string>>;

    ScriptedMock() = default;
    explicit ScriptedMock(Script script) : script_(std::move(script)) {}
    ScriptedMock(ScriptedMock&& other) noexcept
        : script_(std::move(other.script_)), calls_(other.calls_.load()) {}

    std::string generate(const CompletionRequest& request) override {
        const std::string* best = nullptr;
        std::size_t best_len = 0;
        for (const auto& [pattern, reply] : script_) {
            const bool is_suffix = pattern.size() <= request.prompt.size() &&
                                   request.prompt.compare(request.prompt.size() - pattern.size(), pattern.size(),
                                                          pattern) == 0;
            if (is_suffix && (best == nullptr || pattern.size() > best_len)) {
                best = &reply;
                best_len = pattern.size();
            }
        }
        calls_.fetch_add(1, std::memory_order_relaxed);
        if (!best) {
            const auto tail = request.prompt.size() > 60 ? request.prompt.substr(request.prompt.size() - 60)
                                                         : request.prompt;
            throw NoScriptMatch("no scripted reply for prompt ending in '" + tail + "'");
        }
        return *best;
    }

    std::string model_name() const override { return "scripted-mock"; }

    const Script& script() const noexcept { return script_; }
    std::size_t calls() const noexcept { return calls_.load(); }

    /// Accepts `[{"suffix": ..., "reply": ...}, ...]` or a plain object.
    static ScriptedMock from_json(const nlohmann::json& j) {
        Script script;
        if (j.is_array()) {
            for (const auto& item : j)
                script.emplace_back(item.at("suffix").get<std::string>(), item.at("reply").get<std::string>());
        } else if (j.is_object()) {
            for (const auto& [k, v] : j.items()) script.emplace_back(k, v.get<std::string>());
        } else {
            throw FormatError("mock script must be a JSON array or object");
        }
        return ScriptedMock(std::move(script));
    }

    static ScriptedMock load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open mock script " + path.string());
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("mock script " + path.string() + ": " + e.what());
        }
    }

    static nlohmann::json to_json(const Script& script) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& [k, v] : script) out.push_back({{"suffix", k}, {"reply", v}});
        return out;
    }

private:
    Script script_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace pigec
