#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

#include "scop/errors.hpp"
#include "scop/gateway.hpp"
#include "scop/util.hpp"
#include "test_helpers.hpp"

using namespace scop;
using nlohmann::json;

namespace {

CompletionRequest basic_request(const std::string& prompt, int n = 1) {
    CompletionRequest r;
    r.model = "m";
    r.user_prompt = prompt;
    r.temperature = 0.5;
    r.n_samples = n;
    return r;
}

/// Independent re-derivation of the scripted draw: hash
/// "{seed}|{digest}|{index}", take the first 64 bits big-endian, scale into
/// the cumulative weights.
std::string simulate_draw(const MockScript& script, const MockRule& rule,
                          const std::string& digest, int index) {
    std::string key = std::to_string(script.seed) + "|" + digest + "|" + std::to_string(index);
    std::string hex = sha256_hex(key);
    std::uint64_t bits = 0;
    for (int i = 0; i < 16; ++i) {
        char c = hex[static_cast<std::size_t>(i)];
        bits = (bits << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    double u = static_cast<double>(bits) * 0x1.0p-64;
    double total = 0.0;
    for (const auto& [text, w] : rule.distribution) total += w;
    double target = u * total;
    double acc = 0.0;
    std::string chosen = rule.distribution.back().first;
    for (const auto& [text, w] : rule.distribution) {
        acc += w;
        if (target < acc) {
            chosen = text;
            break;
        }
    }
    std::string marker = "{index}";
    std::string out;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = chosen.find(marker, pos);
        if (hit == std::string::npos) {
            out += chosen.substr(pos);
            break;
        }
        out += chosen.substr(pos, hit - pos);
        out += std::to_string(index);
        pos = hit + marker.size();
    }
    return out;
}

/// Minimal in-memory provider for exercising the gateway alone.
class RecordingProvider : public Provider {
  public:
    std::vector<std::vector<int>> calls;
    std::atomic<int> concurrent{0};
    std::atomic<int> max_concurrent{0};
    int delay_ms = 0;

    std::vector<std::string> generate(const CompletionRequest& request, const std::string&,
                                      const std::vector<int>& sample_indices) override {
        int now = ++concurrent;
        int seen = max_concurrent.load();
        while (now > seen && !max_concurrent.compare_exchange_weak(seen, now)) {
        }
        if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        {
            static std::mutex m;
            std::lock_guard<std::mutex> lock(m);
            calls.push_back(sample_indices);
        }
        std::vector<std::string> texts;
        for (int index : sample_indices)
            texts.push_back(request.user_prompt + "#" + std::to_string(index));
        --concurrent;
        return texts;
    }
    HealthReport probe() override { return {true, "recording", "m", 0.0, ""}; }
    ProviderKind kind() const override { return ProviderKind::mock; }
};

} // namespace

TEST_CASE("request digest covers exactly the sampling-relevant fields") {
    auto r = basic_request("hi");
    r.max_tokens = 1024;
    r.top_p = 1.0;
    std::string expected = sha256_hex(
        R"({"max_tokens":1024,"model":"m","system_prompt":"","temperature":0.5,"top_p":1.0,"user_prompt":"hi"})");
    CHECK(request_digest(r) == expected);

    auto r2 = r;
    r2.n_samples = 40;
    r2.sample_index_base = 17;
    CHECK(request_digest(r2) == request_digest(r));  // budget slicing reuses the cache

    auto r3 = r;
    r3.temperature = 0.6;
    CHECK(request_digest(r3) != request_digest(r));
    auto r4 = r;
    r4.system_prompt = "be brief";
    CHECK(request_digest(r4) != request_digest(r));
}

TEST_CASE("mock scripts parse and validate") {
    CHECK_THROWS_AS(MockScript::parse("{}", "t"), ValidationError);
    CHECK_THROWS_AS(MockScript::parse("{\"rules\":[]}", "t"), ValidationError);
    CHECK_THROWS_AS(MockScript::parse("not json", "t"), ValidationError);
    CHECK_THROWS_AS(
        MockScript::parse("{\"rules\":[{\"distribution\":[[\"x\",-1.0]]}]}", "t"),
        ValidationError);
    CHECK_THROWS_AS(
        MockScript::parse("{\"rules\":[{\"match_pattern\":\"(\",\"distribution\":[[\"x\",1]]}]}",
                          "t"),
        ValidationError);
    CHECK_THROWS_AS(
        MockScript::parse("{\"rules\":[{\"distribution\":[[\"x\"]]}]}", "t"), ValidationError);
    auto script = MockScript::parse(
        "{\"seed\":9,\"rules\":[{\"match_substring\":\"a\",\"distribution\":[[\"x\",1]]}]}", "t");
    CHECK(script.seed == 9);
    CHECK(script.rules.size() == 1);

    // Entries may also be written as {"text", "weight"} objects.
    auto alt = MockScript::parse(
        "{\"rules\":[{\"distribution\":[{\"text\":\"y\",\"weight\":2.5}]}]}", "t");
    CHECK(alt.rules[0].distribution[0].first == "y");
    CHECK(alt.rules[0].distribution[0].second == 2.5);
}

TEST_CASE("mock draw matches an independent simulation of the documented rule") {
    auto script = MockScript::load(testutil::data_dir() / "mock_adversarial.json");
    MockProvider provider(script);

    auto request = basic_request("ADV-Q1 what is the length?");
    std::string digest = request_digest(request);
    const MockRule& rule = script.rules[2];  // the ADV-Q1 distribution
    int mismatches = 0;
    for (int i = 0; i < 500; ++i) {
        if (provider.draw(request, digest, i) != simulate_draw(script, rule, digest, i))
            ++mismatches;
    }
    CHECK(mismatches == 0);

    // Weighted buckets are all reachable and roughly proportional.
    std::map<std::string, int> counts;
    for (int i = 0; i < 2000; ++i) counts[provider.draw(request, digest, i)]++;
    CHECK(counts.size() == 4);
    CHECK(counts["The answer is 7"] > counts["The answer is 40"]);
}

TEST_CASE("mock rules match on substring and regex, first match wins") {
    MockScript script;
    MockRule both;
    both.match_substring = "alpha";
    both.match_pattern = "beta";
    both.compiled = std::regex("beta");
    both.distribution = {{"both", 1.0}};
    MockRule sub_only;
    sub_only.match_substring = "alpha";
    sub_only.distribution = {{"sub", 1.0}};
    MockRule fallback;
    fallback.distribution = {{"fall", 1.0}};
    script.rules = {both, sub_only, fallback};
    MockProvider provider(script);

    CHECK(provider.draw(basic_request("alpha and beta"), "d", 0) == "both");
    CHECK(provider.draw(basic_request("alpha only"), "d", 0) == "sub");
    CHECK(provider.draw(basic_request("neither"), "d", 0) == "fall");
}

TEST_CASE("an unmatched prompt is a provider error when no fallback exists") {
    MockScript script;
    MockRule rule;
    rule.match_substring = "needle";
    rule.distribution = {{"x", 1.0}};
    script.rules = {rule};
    MockProvider provider(script);
    CHECK_THROWS_AS(provider.generate(basic_request("haystack"), "d", {0}), ProviderError);
}

TEST_CASE("index placeholder substitution") {
    MockScript script;
    MockRule rule;
    rule.distribution = {{"sample {index} of {index}", 1.0}};
    script.rules = {rule};
    MockProvider provider(script);
    CHECK(provider.draw(basic_request("x"), "d", 7) == "sample 7 of 7");
}

TEST_CASE("sample cache persists, validates, and keeps first writes") {
    testutil::TempDir tmp;
    std::string digest(64, 'a');
    {
        SampleCache cache(tmp.path / "cache");
        CHECK(cache.size() == 0);
        cache.insert(digest, 0, "zero");
        cache.insert(digest, 1, "one");
        CHECK(cache.lookup(digest, 0).value() == "zero");
        CHECK(!cache.lookup(digest, 2).has_value());
    }
    {
        SampleCache cache(tmp.path / "cache");
        CHECK(cache.size() == 2);
        CHECK(cache.lookup(digest, 1).value() == "one");
    }
    // A duplicate appended later (e.g. crashed writer) does not override.
    {
        std::ofstream out(tmp.path / "cache" / "records.jsonl", std::ios::app);
        json row = {{"digest", digest}, {"sample_index", 0}, {"text", "OVERRIDE"},
                    {"created_at", "2000-01-01T00:00:00Z"}};
        out << row.dump() << "\n";
    }
    {
        SampleCache cache(tmp.path / "cache");
        CHECK(cache.lookup(digest, 0).value() == "zero");
    }
    // Malformed records are a cache error.
    {
        std::ofstream out(tmp.path / "cache" / "records.jsonl", std::ios::app);
        out << "{\"digest\":\"short\",\"sample_index\":0,\"text\":\"x\"}\n";
    }
    CHECK_THROWS_AS(SampleCache(tmp.path / "cache"), CacheError);
}

TEST_CASE("gateway serves from cache and batches only the misses") {
    testutil::TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    auto cache = std::make_shared<SampleCache>(tmp.path / "cache");
    Gateway gateway(provider, cache);

    auto r5 = basic_request("prompt", 5);
    auto first = gateway.complete(r5);
    REQUIRE(first.texts.size() == 5);
    CHECK(first.texts[0] == "prompt#0");
    CHECK(first.provider == ProviderKind::mock);
    REQUIRE(provider->calls.size() == 1);
    CHECK(provider->calls[0] == std::vector<int>{0, 1, 2, 3, 4});

    // Widening the same request only generates the new tail.
    auto r8 = basic_request("prompt", 8);
    auto second = gateway.complete(r8);
    REQUIRE(second.texts.size() == 8);
    CHECK(second.texts[7] == "prompt#7");
    REQUIRE(provider->calls.size() == 2);
    CHECK(provider->calls[1] == std::vector<int>{5, 6, 7});

    // Fully warm: no provider call, result marked as cache-served.
    auto third = gateway.complete(r8);
    CHECK(third.provider == ProviderKind::cache);
    CHECK(provider->calls.size() == 2);
    CHECK(third.texts == second.texts);

    auto stats = gateway.stats();
    CHECK(stats.provider_calls == 2);
    CHECK(stats.samples_generated == 8);
    CHECK(stats.cache_hits == 5 + 8);
}

TEST_CASE("gateway fills non-contiguous holes in one call") {
    testutil::TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    auto cache = std::make_shared<SampleCache>(tmp.path / "cache");
    auto request = basic_request("holes", 5);
    std::string digest = request_digest(request);
    cache->insert(digest, 0, "holes#0");
    cache->insert(digest, 2, "holes#2");
    cache->insert(digest, 4, "holes#4");

    Gateway gateway(provider, cache);
    auto result = gateway.complete(request);
    REQUIRE(provider->calls.size() == 1);
    CHECK(provider->calls[0] == std::vector<int>{1, 3});
    CHECK(result.texts == std::vector<std::string>{"holes#0", "holes#1", "holes#2", "holes#3",
                                                   "holes#4"});
}

TEST_CASE("sample offsets address the same cache entries") {
    testutil::TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    auto cache = std::make_shared<SampleCache>(tmp.path / "cache");
    Gateway gateway(provider, cache);

    auto base = basic_request("offset", 4);
    gateway.complete(base);

    auto sliced = basic_request("offset", 2);
    sliced.sample_index_base = 2;
    auto result = gateway.complete(sliced);
    CHECK(result.provider == ProviderKind::cache);
    CHECK(result.texts == std::vector<std::string>{"offset#2", "offset#3"});

    auto beyond = basic_request("offset", 3);
    beyond.sample_index_base = 3;
    auto more = gateway.complete(beyond);
    REQUIRE(provider->calls.size() == 2);
    CHECK(provider->calls[1] == std::vector<int>{4, 5});
    CHECK(more.texts == std::vector<std::string>{"offset#3", "offset#4", "offset#5"});
}

TEST_CASE("network-disabled gateways refuse cold requests but serve warm ones") {
    testutil::TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    auto cache = std::make_shared<SampleCache>(tmp.path / "cache");

    Gateway warm(provider, cache);
    warm.complete(basic_request("warmed", 3));

    GatewayOptions offline;
    offline.network_disabled = true;
    Gateway gateway(provider, cache, offline);
    CHECK_THROWS_AS(gateway.complete(basic_request("cold", 1)), ProviderError);
    auto result = gateway.complete(basic_request("warmed", 3));
    CHECK(result.provider == ProviderKind::cache);
    CHECK(provider->calls.size() == 1);  // only the warm-up call
}

TEST_CASE("gateway bounds concurrent provider calls") {
    testutil::TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    provider->delay_ms = 20;
    auto cache = std::make_shared<SampleCache>(tmp.path / "cache");
    GatewayOptions options;
    options.max_in_flight = 2;
    Gateway gateway(provider, cache, options);

    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back(
            [&gateway, i]() { gateway.complete(basic_request("c" + std::to_string(i), 2)); });
    for (auto& t : threads) t.join();
    CHECK(provider->max_concurrent.load() <= 2);
    CHECK(provider->calls.size() == 8);
}

TEST_CASE("request validation rejects bad parameters") {
    testutil::TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    auto cache = std::make_shared<SampleCache>(tmp.path / "cache");
    Gateway gateway(provider, cache);

    auto no_model = basic_request("x");
    no_model.model = "";
    CHECK_THROWS_AS(gateway.complete(no_model), ValidationError);
    auto bad_temp = basic_request("x");
    bad_temp.temperature = 3.0;
    CHECK_THROWS_AS(gateway.complete(bad_temp), ValidationError);
    auto bad_n = basic_request("x", 0);
    CHECK_THROWS_AS(gateway.complete(bad_n), ValidationError);
}

TEST_CASE("replay provider treats every miss as an error") {
    ReplayProvider provider;
    CHECK_THROWS_AS(provider.generate(basic_request("x"), "d", {0}), ProviderError);
    auto health = provider.probe();
    CHECK(health.provider == "cache");
}

// ---------------------------------------------------------------------------
// HTTP provider against a local server

namespace {

struct LocalServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::mutex mutex;
    std::vector<json> bodies;
    std::vector<std::string> auth_headers;
    std::atomic<int> hits{0};

    LocalServer() = default;
    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this]() { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1"; }
};

HttpProviderConfig fast_config(const std::string& base_url) {
    HttpProviderConfig config;
    config.base_url = base_url;
    config.api_key_env = "SCOP_TEST_KEY";
    config.max_attempts = 3;
    config.backoff_initial_ms = 1.0;
    config.backoff_multiplier = 2.0;
    config.timeout_seconds = 5;
    return config;
}

} // namespace

TEST_CASE("http provider sends an openai-style request and collects choices") {
    testutil::set_env("SCOP_TEST_KEY", "test-key-123");
    LocalServer local;
    local.server.Post("/v1/chat/completions",
                      [&](const httplib::Request& req, httplib::Response& res) {
                          {
                              std::lock_guard<std::mutex> lock(local.mutex);
                              local.bodies.push_back(json::parse(req.body));
                              local.auth_headers.push_back(req.get_header_value("Authorization"));
                          }
                          json body = {{"choices", json::array()}};
                          int n = json::parse(req.body).value("n", 1);
                          for (int i = 0; i < n; ++i)
                              body["choices"].push_back(
                                  {{"message",
                                    {{"content", "The answer is " + std::to_string(i)}}}});
                          res.set_content(body.dump(), "application/json");
                      });
    local.start();

    HttpProvider provider(fast_config(local.base_url()));
    auto request = basic_request("What is 2+2?", 3);
    request.system_prompt = "You are a solver.";
    request.max_tokens = 128;
    auto texts = provider.generate(request, request_digest(request), {0, 1, 2});
    REQUIRE(texts.size() == 3);
    CHECK(texts[2] == "The answer is 2");

    REQUIRE(local.bodies.size() == 1);
    const json& body = local.bodies[0];
    CHECK(body["model"] == "m");
    CHECK(body["n"] == 3);
    CHECK(body["temperature"] == doctest::Approx(0.5));
    CHECK(body["max_tokens"] == 128);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "You are a solver.");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "What is 2+2?");
    CHECK(local.auth_headers[0] == "Bearer test-key-123");
}

TEST_CASE("http provider retries transient failures with backoff") {
    testutil::set_env("SCOP_TEST_KEY", "k");
    LocalServer local;
    local.server.Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          int hit = ++local.hits;
                          if (hit == 1) {
                              res.status = 500;
                              return;
                          }
                          if (hit == 2) {
                              res.status = 429;
                              return;
                          }
                          json body = {{"choices",
                                        json::array({{{"message", {{"content", "ok"}}}}})}};
                          res.set_content(body.dump(), "application/json");
                      });
    local.start();

    HttpProvider provider(fast_config(local.base_url()));
    auto texts = provider.generate(basic_request("q"), "d", {0});
    REQUIRE(texts.size() == 1);
    CHECK(texts[0] == "ok");
    CHECK(local.hits.load() == 3);
}

TEST_CASE("http provider gives up after max attempts") {
    testutil::set_env("SCOP_TEST_KEY", "k");
    LocalServer local;
    local.server.Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++local.hits;
                          res.status = 503;
                      });
    local.start();
    HttpProvider provider(fast_config(local.base_url()));
    CHECK_THROWS_AS(provider.generate(basic_request("q"), "d", {0}), ProviderError);
    CHECK(local.hits.load() == 3);
}

TEST_CASE("http provider does not retry client errors") {
    testutil::set_env("SCOP_TEST_KEY", "k");
    LocalServer local;
    local.server.Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++local.hits;
                          res.status = 400;
                          res.set_content("{\"error\":\"bad request\"}", "application/json");
                      });
    local.start();
    HttpProvider provider(fast_config(local.base_url()));
    CHECK_THROWS_AS(provider.generate(basic_request("q"), "d", {0}), ProviderError);
    CHECK(local.hits.load() == 1);
}

TEST_CASE("http provider rejects malformed success responses") {
    testutil::set_env("SCOP_TEST_KEY", "k");
    LocalServer local;
    local.server.Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          res.set_content("{\"choices\":[]}", "application/json");
                      });
    local.start();
    HttpProvider provider(fast_config(local.base_url()));
    CHECK_THROWS_AS(provider.generate(basic_request("q"), "d", {0}), ProviderError);
}

TEST_CASE("a missing api key is detected before any network traffic") {
    testutil::unset_env("SCOP_ABSENT_KEY");
    HttpProviderConfig config = fast_config("http://127.0.0.1:1/v1");
    config.api_key_env = "SCOP_ABSENT_KEY";
    HttpProvider provider(config);
    CHECK_THROWS_AS(provider.generate(basic_request("q"), "d", {0}), ProviderError);
}

TEST_CASE("http probe reports health both ways and never throws") {
    testutil::set_env("SCOP_TEST_KEY", "k");
    LocalServer local;
    local.server.Get("/v1/models", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"data\":[{\"id\":\"solver-remote\"}]}", "application/json");
    });
    local.start();
    HttpProvider provider(fast_config(local.base_url()));
    auto health = provider.probe();
    CHECK(health.healthy);
    CHECK(health.provider == "http");
    CHECK(health.model == "solver-remote");
    CHECK(health.latency_ms >= 0.0);

    HttpProvider dead(fast_config("http://127.0.0.1:1/v1"));
    auto sick = dead.probe();
    CHECK(!sick.healthy);
    CHECK(!sick.detail.empty());
}
