#include "scop/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

using nlohmann::json;

void validate_request(const CompletionRequest& request) {
    if (request.model.empty()) throw ValidationError("completion request: empty model");
    if (request.temperature < 0.0 || request.temperature > 2.0)
        throw ValidationError("completion request: temperature must be in [0,2]");
    if (request.top_p <= 0.0 || request.top_p > 1.0)
        throw ValidationError("completion request: top_p must be in (0,1]");
    if (request.n_samples < 1) throw ValidationError("completion request: n_samples must be >= 1");
    if (request.max_tokens < 1) throw ValidationError("completion request: max_tokens must be >= 1");
    if (request.sample_index_base < 0)
        throw ValidationError("completion request: sample_index_base must be >= 0");
}

// Splits "http://host:port/v1" into client origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    std::size_t scheme = base_url.find("://");
    std::size_t path_start =
        scheme == std::string::npos ? base_url.find('/') : base_url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string origin = base_url.substr(0, path_start);
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {origin, prefix};
}

std::string replace_all(std::string text, const std::string& needle, const std::string& with) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), with);
        pos += with.size();
    }
    return text;
}

} // namespace

std::string to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::http: return "http";
        case ProviderKind::mock: return "mock";
        case ProviderKind::cache: return "cache";
    }
    return "cache";
}

std::string request_digest(const CompletionRequest& request) {
    json canonical = {
        {"max_tokens", request.max_tokens},
        {"model", request.model},
        {"system_prompt", request.system_prompt},
        {"temperature", request.temperature},
        {"top_p", request.top_p},
        {"user_prompt", request.user_prompt},
    };
    return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// Mock provider

MockScript MockScript::parse(const std::string& text, const std::string& where) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw ValidationError(where + ": malformed mock script: " + ex.what());
    }
    MockScript script;
    if (!j.is_object() || !j.contains("rules") || !j["rules"].is_array() || j["rules"].empty())
        throw ValidationError(where + ": mock script needs a non-empty \"rules\" array");
    script.seed = j.value("seed", std::uint64_t{0});
    for (const auto& rule_json : j["rules"]) {
        MockRule rule;
        rule.match_substring = rule_json.value("match_substring", "");
        rule.match_pattern = rule_json.value("match_pattern", "");
        if (!rule.match_pattern.empty()) {
            try {
                rule.compiled.emplace(rule.match_pattern);
            } catch (const std::regex_error& ex) {
                throw ValidationError(where + ": bad match_pattern \"" + rule.match_pattern +
                                      "\": " + ex.what());
            }
        }
        if (!rule_json.contains("distribution") || !rule_json["distribution"].is_array() ||
            rule_json["distribution"].empty())
            throw ValidationError(where + ": rule needs a non-empty \"distribution\" array");
        for (const auto& entry : rule_json["distribution"]) {
            std::string entry_text;
            double weight = 0.0;
            try {
                if (entry.is_array() && entry.size() == 2) {
                    entry_text = entry.at(0).get<std::string>();
                    weight = entry.at(1).get<double>();
                } else if (entry.is_object()) {
                    entry_text = entry.at("text").get<std::string>();
                    weight = entry.at("weight").get<double>();
                } else {
                    throw ValidationError(
                        where + ": distribution entries must be [text, weight] pairs");
                }
            } catch (const json::exception& ex) {
                throw ValidationError(where + ": bad distribution entry: " + ex.what());
            }
            if (!(weight > 0.0))
                throw ValidationError(where + ": distribution weights must be positive");
            rule.distribution.emplace_back(std::move(entry_text), weight);
        }
        script.rules.push_back(std::move(rule));
    }
    return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
}

MockProvider::MockProvider(MockScript script) : script_(std::move(script)) {}

std::string MockProvider::draw(const CompletionRequest& request, const std::string& digest,
                               int sample_index) const {
    const MockRule* matched = nullptr;
    for (const auto& rule : script_.rules) {
        if (!rule.match_substring.empty() &&
            request.user_prompt.find(rule.match_substring) == std::string::npos)
            continue;
        if (rule.compiled && !std::regex_search(request.user_prompt, *rule.compiled)) continue;
        matched = &rule;
        break;
    }
    if (!matched) {
        std::string head = request.user_prompt.substr(0, 120);
        throw ProviderError("no mock rule matches prompt starting with: " + head);
    }

    // Counter-based draw: uniform u from SHA-256(seed|digest|index), then a
    // cumulative walk over the weights.
    std::string key =
        std::to_string(script_.seed) + "|" + digest + "|" + std::to_string(sample_index);
    std::string hex = sha256_hex(key);
    std::uint64_t bits = 0;
    for (int i = 0; i < 16; ++i) {
        char c = hex[static_cast<std::size_t>(i)];
        bits = (bits << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    double u = static_cast<double>(bits) * 0x1.0p-64;

    double total = 0.0;
    for (const auto& [text, weight] : matched->distribution) total += weight;
    double target = u * total;
    double acc = 0.0;
    const std::string* chosen = &matched->distribution.back().first;
    for (const auto& [text, weight] : matched->distribution) {
        acc += weight;
        if (target < acc) {
            chosen = &text;
            break;
        }
    }
    return replace_all(*chosen, "{index}", std::to_string(sample_index));
}

std::vector<std::string> MockProvider::generate(const CompletionRequest& request,
                                                const std::string& digest,
                                                const std::vector<int>& sample_indices) {
    std::vector<std::string> texts;
    texts.reserve(sample_indices.size());
    for (int index : sample_indices) texts.push_back(draw(request, digest, index));
    return texts;
}

HealthReport MockProvider::probe() {
    return {true, "mock", "mock", 0.0, ""};
}

// ---------------------------------------------------------------------------
// HTTP provider

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("http provider: empty base_url");
    if (config_.max_attempts < 1) throw ConfigError("http provider: max_attempts must be >= 1");
}

std::vector<std::string> HttpProvider::generate(const CompletionRequest& request,
                                                const std::string& digest,
                                                const std::vector<int>& sample_indices) {
    (void)digest;
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key)
        throw ProviderError("environment variable " + config_.api_key_env + " is not set");

    auto [origin, prefix] = split_base_url(config_.base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);

    json messages = json::array();
    if (!request.system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
    json body = {
        {"model", request.model},
        {"messages", messages},
        {"temperature", request.temperature},
        {"top_p", request.top_p},
        {"n", sample_indices.size()},
        {"max_tokens", request.max_tokens},
    };
    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    std::string path = prefix + "/chat/completions";
    std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        bool retryable = false;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            retryable = true;
        } else if (res->status == 200) {
            json parsed;
            try {
                parsed = json::parse(res->body);
                const auto& choices = parsed.at("choices");
                if (choices.size() < sample_indices.size())
                    throw ProviderError("response has " + std::to_string(choices.size()) +
                                        " choices, need " +
                                        std::to_string(sample_indices.size()));
                std::vector<std::string> texts;
                texts.reserve(sample_indices.size());
                for (std::size_t i = 0; i < sample_indices.size(); ++i)
                    texts.push_back(choices[i].at("message").at("content").get<std::string>());
                return texts;
            } catch (const json::exception& ex) {
                throw ProviderError(std::string("malformed completion response: ") + ex.what());
            }
        } else {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            retryable = res->status == 429 || res->status >= 500;
        }
        if (!retryable || attempt == config_.max_attempts) throw ProviderError(last_error);
        double delay =
            config_.backoff_initial_ms * std::pow(config_.backoff_multiplier, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }
    throw ProviderError(last_error);
}

HealthReport HttpProvider::probe() {
    HealthReport report;
    report.provider = "http";
    try {
        auto [origin, prefix] = split_base_url(config_.base_url);
        httplib::Client client(origin);
        client.set_connection_timeout(5, 0);
        client.set_read_timeout(5, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto start = std::chrono::steady_clock::now();
        auto res = client.Get(prefix + "/models", headers);
        auto elapsed = std::chrono::steady_clock::now() - start;
        report.latency_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
        if (!res) {
            report.detail = "transport error: " + httplib::to_string(res.error());
            return report;
        }
        if (res->status != 200) {
            report.detail = "HTTP " + std::to_string(res->status);
            return report;
        }
        report.healthy = true;
        try {
            json parsed = json::parse(res->body);
            if (parsed.contains("data") && parsed["data"].is_array() && !parsed["data"].empty())
                report.model = parsed["data"][0].value("id", "");
        } catch (const json::exception&) {
            // Body shape is advisory only; reachability is the health signal.
        }
    } catch (const std::exception& ex) {
        report.healthy = false;
        report.detail = ex.what();
    }
    return report;
}

// ---------------------------------------------------------------------------
// Replay provider

std::vector<std::string> ReplayProvider::generate(const CompletionRequest& request,
                                                  const std::string& digest,
                                                  const std::vector<int>& sample_indices) {
    (void)request;
    throw ProviderError("replay cache miss for digest " + digest + " sample " +
                        std::to_string(sample_indices.empty() ? -1 : sample_indices.front()));
}

HealthReport ReplayProvider::probe() {
    return {true, "cache", "", 0.0, ""};
}

// ---------------------------------------------------------------------------
// Sample cache

SampleCache::SampleCache(const std::filesystem::path& directory)
    : directory_(directory), records_path_(directory / "records.jsonl") {
    ensure_directory(directory_);
    if (!std::filesystem::exists(records_path_)) return;
    try {
        for_each_jsonl(records_path_, [&](std::size_t line_no, const json& row) {
            std::string digest = row.at("digest").get<std::string>();
            int index = row.at("sample_index").get<int>();
            std::string text = row.at("text").get<std::string>();
            if (digest.size() != 64 || index < 0)
                throw CacheError(records_path_.string() + ":" + std::to_string(line_no) +
                                 ": corrupt cache record");
            entries_.emplace(std::make_pair(std::move(digest), index), std::move(text));
        });
    } catch (const json::exception& ex) {
        throw CacheError(records_path_.string() + ": corrupt cache record: " + ex.what());
    } catch (const ValidationError& ex) {
        throw CacheError(ex.what());
    }
}

std::optional<std::string> SampleCache::lookup(const std::string& digest,
                                               int sample_index) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find({digest, sample_index});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void SampleCache::insert(const std::string& digest, int sample_index, const std::string& text) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.emplace(std::make_pair(digest, sample_index), text);
    if (!inserted) return;
    json row = {{"digest", digest},
                {"sample_index", sample_index},
                {"text", text},
                {"created_at", iso8601_utc_now()}};
    std::ofstream out(records_path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open cache file for append: " + records_path_.string());
    out << row.dump() << "\n";
    out.flush();
    if (!out) throw IoError("cannot append cache record: " + records_path_.string());
}

std::size_t SampleCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Gateway

class Gateway::Semaphore {
  public:
    explicit Semaphore(int count) : sem_(count) {}
    void acquire() { sem_.acquire(); }
    void release() { sem_.release(); }

  private:
    std::counting_semaphore<> sem_;
};

Gateway::Gateway(std::shared_ptr<Provider> provider, std::shared_ptr<SampleCache> cache,
                 GatewayOptions options)
    : provider_(std::move(provider)), cache_(std::move(cache)), options_(options) {
    if (!provider_) throw ValidationError("gateway requires a provider");
    if (!cache_) throw ValidationError("gateway requires a cache");
    if (options_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    semaphore_ = std::make_shared<Semaphore>(options_.max_in_flight);
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
    validate_request(request);
    std::string digest = request_digest(request);

    std::vector<std::string> texts(static_cast<std::size_t>(request.n_samples));
    std::vector<int> cold;
    for (int i = 0; i < request.n_samples; ++i) {
        int index = request.sample_index_base + i;
        if (auto hit = cache_->lookup(digest, index)) {
            texts[static_cast<std::size_t>(i)] = std::move(*hit);
        } else {
            cold.push_back(index);
        }
    }
    {
        std::lock_guard lock(stats_mutex_);
        stats_.cache_hits += static_cast<std::size_t>(request.n_samples) - cold.size();
    }
    if (cold.empty()) return {std::move(texts), ProviderKind::cache, std::move(digest)};

    if (options_.network_disabled)
        throw ProviderError("provider calls are disabled and sample " +
                            std::to_string(cold.front()) + " of digest " + digest +
                            " is not cached");

    semaphore_->acquire();
    std::vector<std::string> generated;
    try {
        generated = provider_->generate(request, digest, cold);
    } catch (...) {
        semaphore_->release();
        throw;
    }
    semaphore_->release();

    if (generated.size() != cold.size())
        throw ProviderError("provider returned " + std::to_string(generated.size()) +
                            " texts, expected " + std::to_string(cold.size()));
    for (std::size_t j = 0; j < cold.size(); ++j) {
        cache_->insert(digest, cold[j], generated[j]);
        texts[static_cast<std::size_t>(cold[j] - request.sample_index_base)] =
            std::move(generated[j]);
    }
    {
        std::lock_guard lock(stats_mutex_);
        stats_.provider_calls += 1;
        stats_.samples_generated += cold.size();
    }
    return {std::move(texts), provider_->kind(), std::move(digest)};
}

HealthReport Gateway::probe() { return provider_->probe(); }

GatewayStats Gateway::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

} // namespace scop
