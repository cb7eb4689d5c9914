#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "pigec/llm.hpp"
#include "pigec/llm_http.hpp"

using pigec::CompletionRequest;
using pigec::Direction;
using pigec::ScriptedMock;
using pigec::Session;
using pigec::SessionOptions;

namespace {

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(PIGEC_TEST_DATA) + "/" + name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fails the first `failures` calls with the given exception type.
template <class Failure>
class Flaky : public pigec::Backend {
public:
    explicit Flaky(int failures) : failures_(failures) {}
    std::string generate(const CompletionRequest&) override {
        if (calls_++ < failures_) throw Failure("flaky");
        return "ok\nrest";
    }
    int calls() const { return calls_; }

private:
    int failures_;
    int calls_ = 0;
};

SessionOptions recording(std::vector<long>& sleeps) {
    SessionOptions o;
    o.retry.sleep = [&sleeps](std::chrono::milliseconds d) { sleeps.push_back(static_cast<long>(d.count())); };
    return o;
}

}  // namespace

TEST(Truncate, AtEarliestStop) {
    EXPECT_EQ(pigec::truncate_at_stop("abc\ndef", {"\n"}), "abc");
    EXPECT_EQ(pigec::truncate_at_stop("abc\n\ndef\n", {"\n\n"}), "abc");
    EXPECT_EQ(pigec::truncate_at_stop("a;b\nc", {"\n", ";"}), "a");
    EXPECT_EQ(pigec::truncate_at_stop("abc", {"x", ""}), "abc");
}

TEST(Request, Validation) {
    CompletionRequest r{"p", {}, 0, 0};
    EXPECT_THROW(r.validate(), pigec::RangeError);
    r.max_tokens = 5;
    r.temperature = -1;
    EXPECT_THROW(r.validate(), pigec::RangeError);
}

TEST(ScriptedMockTest, EchoAndTruncation) {
    ScriptedMock mock({{"Input: X\nOutput:", "Y"}, {"Q:", "abc\ndef"}});
    Session s(mock);
    EXPECT_EQ(s.complete("Input: X\nOutput:", {"\n"}), "Y");
    EXPECT_EQ(s.complete("Q:", {"\n"}), "abc");
    EXPECT_EQ(s.calls(), 2u);
    EXPECT_EQ(mock.calls(), 2u);
}

TEST(ScriptedMockTest, EmptyScriptFails) {
    ScriptedMock mock;
    EXPECT_THROW(mock.generate({"anything", {}, 10, 0}), pigec::NoScriptMatch);
}

TEST(ScriptedMockTest, LongestSuffixWinsRegardlessOfOrder) {
    ScriptedMock a({{"?:", "short"}, {"disorders ?:", "long"}, {"cats:", "other"}});
    ScriptedMock b({{"cats:", "other"}, {"disorders ?:", "long"}, {"?:", "short"}});
    for (auto* m : {&a, &b}) {
        EXPECT_EQ(m->generate({"2. . → other disorders ?:", {}, 10, 0}), "long");
        EXPECT_EQ(m->generate({"x ?:", {}, 10, 0}), "short");
        EXPECT_EQ(m->generate({"the cats:", {}, 10, 0}), "other");
    }
}

TEST(ScriptedMockTest, JsonForms) {
    const auto arr = ScriptedMock::from_json(nlohmann::json::parse(R"([{"suffix":"a","reply":"1"}])"));
    EXPECT_EQ(arr.script().size(), 1u);
    const auto obj = ScriptedMock::from_json(nlohmann::json::parse(R"({"a":"1","b":"2"})"));
    EXPECT_EQ(obj.script().size(), 2u);
    EXPECT_THROW(ScriptedMock::from_json(nlohmann::json(3)), pigec::FormatError);
    EXPECT_EQ(ScriptedMock::from_json(ScriptedMock::to_json(obj.script())).script(), obj.script());
    EXPECT_THROW(ScriptedMock::load("/nonexistent/script.json"), pigec::IoError);
}

TEST(SessionTest, TranscriptRecordsBothTurns) {
    ScriptedMock mock(ScriptedMock::Script{{"p", "r\nx"}});
    Session s(mock);
    s.complete("p", {"\n"});
    const auto& t = s.transcript();
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t.turns()[0].direction, Direction::ToModel);
    EXPECT_EQ(t.turns()[0].text, "p");
    EXPECT_EQ(t.turns()[1].direction, Direction::FromModel);
    EXPECT_EQ(t.turns()[1].text, "r");
    EXPECT_EQ(t.turns()[0].timestamp, 0);
    EXPECT_EQ(t.turns()[1].timestamp, 1);
    EXPECT_EQ(pigec::transcript_from_json(pigec::transcript_to_json(t)), t);
}

TEST(TranscriptTest, Invariants) {
    pigec::Transcript t;
    EXPECT_THROW(t.append(Direction::FromModel, "x", 0), pigec::FormatError);
    t.append(Direction::ToModel, "a", 0);
    t.append(Direction::FromModel, "b", 1);
    EXPECT_THROW(t.append(Direction::FromModel, "c", 2), pigec::FormatError);
    EXPECT_THROW(pigec::transcript_from_json(nlohmann::json::parse(R"({"turns":[{"direction":"up","text":"","timestamp":0}]})")),
                 pigec::FormatError);
}

TEST(SessionTest, RetriesTransportErrorsWithBackoff) {
    Flaky<pigec::TransportError> backend(3);
    std::vector<long> sleeps;
    Session s(backend, recording(sleeps));
    EXPECT_EQ(s.complete("p", {"\n"}), "ok");
    EXPECT_EQ(backend.calls(), 4);
    EXPECT_EQ(sleeps, (std::vector<long>{500, 1000, 2000}));
}

TEST(SessionTest, BackoffIsCappedAndAttemptsBounded) {
    Flaky<pigec::TransportError> backend(100);
    std::vector<long> sleeps;
    auto opts = recording(sleeps);
    opts.retry.max_attempts = 7;
    Session s(backend, opts);
    EXPECT_THROW(s.complete("p", {}), pigec::TransportError);
    EXPECT_EQ(backend.calls(), 7);
    EXPECT_EQ(sleeps, (std::vector<long>{500, 1000, 2000, 4000, 8000, 8000}));
}

TEST(SessionTest, RefusalIsNotRetried) {
    Flaky<pigec::BackendRefusal> backend(1);
    std::vector<long> sleeps;
    Session s(backend, recording(sleeps));
    EXPECT_THROW(s.complete("p", {}), pigec::BackendRefusal);
    EXPECT_EQ(backend.calls(), 1);
    EXPECT_TRUE(sleeps.empty());
}

// ---------------------------------------------------------------------------
// HTTP adapters against a local server

namespace {

struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    LocalServer() = default;
    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string url(const std::string& prefix = "/v1") const {
        return "http://127.0.0.1:" + std::to_string(port) + prefix;
    }
};

pigec::HttpBackendConfig config_for(const LocalServer& s, pigec::WireFormat wire) {
    pigec::HttpBackendConfig c;
    c.base_url = s.url();
    c.model = "fixture-model";
    c.api_key = "sk-test";
    c.wire = wire;
    c.timeout = std::chrono::seconds(5);
    return c;
}

}  // namespace

TEST(HttpBackendTest, ChatRoundTrip) {
    LocalServer s;
    nlohmann::json seen;
    std::string auth;
    s.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(fixture("chat_completion_response.json"), "application/json");
    });
    s.start();
    pigec::HttpBackend backend(config_for(s, pigec::WireFormat::Chat));
    Session session(backend);
    const auto reply = session.complete("Input: genetic disorder .\nOutput:", {"\n"});
    EXPECT_EQ(reply, " What is the difference between genetic disorders and other disorders?");
    EXPECT_EQ(auth, "Bearer sk-test");
    EXPECT_EQ(seen["model"], "fixture-model");
    EXPECT_EQ(seen["messages"][0]["role"], "user");
    EXPECT_EQ(seen["messages"][0]["content"], "Input: genetic disorder .\nOutput:");
    EXPECT_EQ(seen["stop"], nlohmann::json::array({"\n"}));
    EXPECT_EQ(seen["temperature"], 0.0);
    EXPECT_EQ(seen["max_tokens"], 256);
    EXPECT_EQ(backend.model_name(), "fixture-model");
}

TEST(HttpBackendTest, CompletionWire) {
    LocalServer s;
    nlohmann::json seen;
    s.server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        res.set_content(fixture("completion_response.json"), "application/json");
    });
    s.start();
    pigec::HttpBackend backend(config_for(s, pigec::WireFormat::Completion));
    EXPECT_EQ(backend.generate({"1. disorder → disorders:", {"\n"}, 64, 0}), " The plural form is required here.");
    EXPECT_EQ(seen["prompt"], "1. disorder → disorders:");
    EXPECT_FALSE(seen.contains("messages"));
}

TEST(HttpBackendTest, RetryableStatusThenSuccess) {
    LocalServer s;
    std::atomic<int> hits{0};
    s.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int n = hits++;
        if (n == 0) {
            res.status = 429;
            return;
        }
        if (n == 1) {
            res.status = 503;
            return;
        }
        res.set_content(fixture("chat_completion_response.json"), "application/json");
    });
    s.start();
    pigec::HttpBackend backend(config_for(s, pigec::WireFormat::Chat));
    std::vector<long> sleeps;
    Session session(backend, recording(sleeps));
    EXPECT_FALSE(session.complete("x", {"\n"}).empty());
    EXPECT_EQ(hits.load(), 3);
    EXPECT_EQ(sleeps.size(), 2u);
}

TEST(HttpBackendTest, ClientErrorsAndBadBodiesAreRefusals) {
    LocalServer s;
    s.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const std::string prompt = body["messages"][0]["content"];
        if (prompt == "400") {
            res.status = 400;
            res.set_content(R"({"error":{"message":"bad"}})", "application/json");
        } else if (prompt == "filter") {
            res.set_content(R"({"choices":[{"message":{"content":null},"finish_reason":"content_filter"}]})",
                            "application/json");
        } else if (prompt == "empty") {
            res.set_content(R"({"choices":[]})", "application/json");
        } else {
            res.set_content("not json", "text/plain");
        }
    });
    s.start();
    pigec::HttpBackend backend(config_for(s, pigec::WireFormat::Chat));
    for (const char* p : {"400", "filter", "empty", "garbage"})
        EXPECT_THROW(backend.generate({p, {}, 8, 0}), pigec::BackendRefusal) << p;
}

TEST(HttpBackendTest, UnreachableIsTransportError) {
    pigec::HttpBackendConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.timeout = std::chrono::seconds(2);
    pigec::HttpBackend backend(c);
    EXPECT_THROW(backend.generate({"x", {}, 8, 0}), pigec::TransportError);
}

TEST(HttpBackendTest, ConcurrencyLimit) {
    LocalServer s;
    std::atomic<int> in_flight{0}, peak{0};
    s.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(60));
        --in_flight;
        res.set_content(fixture("chat_completion_response.json"), "application/json");
    });
    s.start();
    auto cfg = config_for(s, pigec::WireFormat::Chat);
    cfg.max_concurrency = 2;
    pigec::HttpBackend backend(cfg);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { backend.generate({"x", {}, 8, 0}); });
    for (auto& t : threads) t.join();
    EXPECT_LE(peak.load(), 2);
    EXPECT_GE(peak.load(), 1);
}

TEST(HttpConfig, BaseUrlAndEnvironment) {
    EXPECT_EQ(pigec::split_base_url("https://api.example.com/v1/"),
              (std::pair<std::string, std::string>{"https://api.example.com", "/v1"}));
    EXPECT_EQ(pigec::split_base_url("http://localhost:8080"),
              (std::pair<std::string, std::string>{"http://localhost:8080", ""}));
    EXPECT_THROW(pigec::split_base_url("localhost"), pigec::FormatError);

    setenv("LLM_BASE_URL", "http://example.test/api", 1);
    setenv("LLM_MODEL", "m1", 1);
    setenv("LLM_API_KEY", "k1", 1);
    const auto c = pigec::HttpBackendConfig::from_env();
    EXPECT_EQ(c.base_url, "http://example.test/api");
    EXPECT_EQ(c.model, "m1");
    EXPECT_EQ(c.api_key, "k1");
    unsetenv("LLM_BASE_URL");
    unsetenv("LLM_MODEL");
    unsetenv("LLM_API_KEY");
}
