#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "geoaot/backend.hpp"
#include "geoaot/chat_backend.hpp"

using namespace geoaot;
using nlohmann::json;

TEST_CASE("scripted backend: per-session turn counters") {
    ScriptedBackend backend(
        [](size_t turn, const std::string&, const Observation&) {
            return "turn " + std::to_string(turn);
        },
        "demo");
    CHECK(backend.name() == "demo");
    CHECK(backend.deterministic());
    CHECK(backend.concurrent_sessions());

    auto s1 = backend.start_session("a");
    auto s2 = backend.start_session("b");
    Observation obs;
    CHECK(s1->complete("p", obs) == "turn 0");
    CHECK(s1->complete("p", obs) == "turn 1");
    // A fresh session starts from zero regardless of the first one.
    CHECK(s2->complete("p", obs) == "turn 0");
}

TEST_CASE("replay backend: graph keys, default fallback, exhaustion") {
    const json doc{{"default", {"MOVE"}},
                   {"by_graph", {{"g1", {"ROTATE +10", "STOP"}}}}};
    ReplayBackend backend(doc);
    Observation obs;

    auto s = backend.start_session("g1");
    CHECK(s->complete("", obs) == "ROTATE +10");
    CHECK(s->complete("", obs) == "STOP");
    CHECK(s->complete("", obs) == "STOP");  // exhausted lists answer STOP

    auto other = backend.start_session("unknown-graph");
    CHECK(other->complete("", obs) == "MOVE");
    CHECK(other->complete("", obs) == "STOP");

    CHECK_THROWS_AS(ReplayBackend(json::array()), std::invalid_argument);
    CHECK_THROWS_AS(ReplayBackend(json{{"default", "not a list"}}), std::invalid_argument);
    CHECK_THROWS_AS(ReplayBackend(json{{"by_graph", {{"g", {1, 2}}}}}), std::invalid_argument);
}

TEST_CASE("replay backend loads the bundled demo script") {
    ReplayBackend backend =
        ReplayBackend::from_file(GEOAOT_FIXTURE_DIR "/replay_demo.json");
    Observation obs;
    auto s = backend.start_session("wb-paris-line");
    const std::string first = s->complete("", obs);
    CHECK(first.find("ROTATE") != std::string::npos);
    CHECK_THROWS_AS(ReplayBackend::from_file("/nope/absent.json"), std::runtime_error);
}

namespace {

struct StubServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server.Post("/v1/chat/completions", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

std::string chat_body(const std::string& content) {
    return json{{"choices", {{{"message", {{"content", content}}}}}}}.dump();
}

Observation view_obs() {
    Observation obs;
    obs.view_ref = "view:test";
    Image img(4, 2, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<float>(i) / static_cast<float>(img.data.size());
    obs.view = img;
    return obs;
}

}  // namespace

TEST_CASE("chat backend: request shape, auth header, image payload") {
    json seen_body;
    std::string seen_auth;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(chat_body("ROTATE +15"), "application/json");
    });

    ChatBackendConfig cfg;
    cfg.base_url = stub.url();
    cfg.model_name = "test-model";
    cfg.api_key = "sk-test-123";
    ChatBackend backend(cfg);
    CHECK(backend.name() == "test-model");
    CHECK(backend.deterministic());

    const Observation obs = view_obs();
    auto session = backend.start_session("ep1");
    CHECK(session->complete("look around", obs) == "ROTATE +15");

    CHECK(seen_auth == "Bearer sk-test-123");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["temperature"] == 0);  // greedy decoding is pinned
    const json& content = seen_body["messages"][0]["content"];
    REQUIRE(content.size() == 2);
    CHECK(content[0]["type"] == "text");
    CHECK(content[0]["text"] == "look around");
    CHECK(content[1]["type"] == "image_url");
    const std::string url = content[1]["image_url"]["url"];
    const std::string expect_prefix = "data:image/x-portable-pixmap;base64,";
    REQUIRE(url.rfind(expect_prefix, 0) == 0);
    // The payload is exactly the base64 PPM encoding of the attached view.
    CHECK(url.substr(expect_prefix.size()) == detail::base64(encode_ppm(*obs.view)));

    // The exchange is logged with its parsed content.
    const auto log = backend.log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].episode_key == "ep1");
    CHECK(log[0].status == 200);
    CHECK(log[0].content == "ROTATE +15");
}

TEST_CASE("chat backend: image transport modes") {
    json seen_body;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = json::parse(req.body);
        res.set_content(chat_body("MOVE"), "application/json");
    });

    ChatBackendConfig cfg;
    cfg.base_url = stub.url();
    cfg.image_transport = ImageTransport::None;
    ChatBackend none(cfg);
    none.start_session("e")->complete("p", view_obs());
    CHECK(seen_body["messages"][0]["content"].size() == 1);

    cfg.image_transport = ImageTransport::Url;
    cfg.image_url_prefix = "https://views.example/";
    ChatBackend url_mode(cfg);
    url_mode.start_session("e")->complete("p", view_obs());
    const json& content = seen_body["messages"][0]["content"];
    REQUIRE(content.size() == 2);
    CHECK(content[1]["image_url"]["url"] == "https://views.example/view:test");
}

TEST_CASE("chat backend: retryable and fatal failures") {
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        const int n = ++calls;
        if (n <= 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
        } else {
            res.set_content(chat_body("STOP"), "application/json");
        }
    });

    ChatBackendConfig cfg;
    cfg.base_url = stub.url();
    ChatBackend backend(cfg);
    auto session = backend.start_session("e");
    const Observation obs = view_obs();

    // Two rate-limit rejections, then success: the caller's retry loop
    // sees retryable errors both times.
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            session->complete("p", obs);
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.retryable());
            CHECK(e.http_status() == 429);
        }
    }
    CHECK(session->complete("p", obs) == "STOP");
    CHECK(backend.log().size() == 3);
}

TEST_CASE("chat backend: non-retryable statuses and malformed bodies") {
    int mode = 0;
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        if (mode == 0) {
            res.status = 400;
            res.set_content("bad request", "text/plain");
        } else {
            res.set_content("{\"choices\": []}", "application/json");
        }
    });

    ChatBackendConfig cfg;
    cfg.base_url = stub.url();
    ChatBackend backend(cfg);
    const Observation obs = view_obs();

    try {
        backend.start_session("e")->complete("p", obs);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK_FALSE(e.retryable());
        CHECK(e.http_status() == 400);
    }

    mode = 1;  // 200 with an unusable body is fatal, not retryable
    try {
        backend.start_session("e")->complete("p", obs);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK_FALSE(e.retryable());
    }
}

TEST_CASE("chat backend: connection failure is retryable") {
    ChatBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:9";  // nothing listens here
    cfg.timeout_seconds = 2;
    ChatBackend backend(cfg);
    try {
        backend.start_session("e")->complete("p", view_obs());
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.retryable());
    }
}

TEST_CASE("chat backend: replay export and log file") {
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        res.set_content(chat_body("MOVE"), "application/json");
    });
    ChatBackendConfig cfg;
    cfg.base_url = stub.url();
    ChatBackend backend(cfg);
    const Observation obs = view_obs();
    backend.start_session("g1")->complete("p1", obs);
    backend.start_session("g1")->complete("p2", obs);
    backend.start_session("g2")->complete("p3", obs);

    const json script = backend.replay_script();
    CHECK(script["by_graph"]["g1"].size() == 2);
    CHECK(script["by_graph"]["g2"] == json::array({"MOVE"}));
    // The export round-trips into a working replay backend.
    ReplayBackend replay(script);
    CHECK(replay.start_session("g2")->complete("", obs) == "MOVE");

    const auto path =
        (std::filesystem::temp_directory_path() / "geoaot_chat_log_test.jsonl").string();
    backend.write_log(path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        const json j = json::parse(line);
        CHECK(j["status"] == 200);
        ++lines;
    }
    CHECK(lines == 3);
    std::filesystem::remove(path);
}

TEST_CASE("chat backend config from environment") {
    setenv("GEOAOT_API_BASE", "http://env.example:1234", 1);
    setenv("GEOAOT_API_KEY", "sk-env", 1);
    const ChatBackendConfig cfg = ChatBackendConfig::from_env();
    CHECK(cfg.base_url == "http://env.example:1234");
    CHECK(cfg.api_key == "sk-env");
    unsetenv("GEOAOT_API_BASE");
    unsetenv("GEOAOT_API_KEY");
    const ChatBackendConfig plain = ChatBackendConfig::from_env();
    CHECK(plain.base_url == "http://localhost:8080");
    CHECK(plain.api_key.empty());
}
