#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scop {

struct CompletionRequest {
    std::string model;
    std::string system_prompt;   // empty means absent
    std::string user_prompt;
    double temperature = 0.7;
    double top_p = 1.0;
    int n_samples = 1;
    int max_tokens = 1024;
    int sample_index_base = 0;   // cache identity of sample i is (digest, base + i)
};

enum class ProviderKind { http, mock, cache };

std::string to_string(ProviderKind kind);

struct CompletionResult {
    std::vector<std::string> texts;
    ProviderKind provider = ProviderKind::cache;
    std::string request_digest;
};

/// SHA-256 hex of the canonical JSON serialization of (model, system_prompt,
/// user_prompt, temperature, top_p, max_tokens), keys sorted, no
/// insignificant whitespace. n_samples and sample_index_base are excluded so
/// re-sliced budgets reuse cached samples.
std::string request_digest(const CompletionRequest& request);

struct HealthReport {
    bool healthy = false;
    std::string provider;
    std::string model;      // model name echo when available
    double latency_ms = 0.0;
    std::string detail;     // cause when unhealthy
};

class Provider {
  public:
    virtual ~Provider() = default;
    /// Generate one text per requested sample index, in order.
    virtual std::vector<std::string> generate(const CompletionRequest& request,
                                              const std::string& digest,
                                              const std::vector<int>& sample_indices) = 0;
    virtual HealthReport probe() = 0;
    virtual ProviderKind kind() const = 0;
};

/// Scripted provider: the first rule whose conditions all hold supplies a
/// weighted answer distribution; each sample is drawn by a counter-based
/// generator keyed on (seed, request digest, sample index), so any slice of
/// samples is reproducible in isolation. "{index}" in a chosen text is
/// replaced with the sample index.
struct MockRule {
    std::string match_substring;             // must appear in the user prompt
    std::string match_pattern;               // regex the user prompt must contain
    std::vector<std::pair<std::string, double>> distribution;
    std::optional<std::regex> compiled;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::uint64_t seed = 0;

    static MockScript load(const std::filesystem::path& path);
    static MockScript parse(const std::string& text, const std::string& where);
};

class MockProvider : public Provider {
  public:
    explicit MockProvider(MockScript script);
    std::vector<std::string> generate(const CompletionRequest& request,
                                      const std::string& digest,
                                      const std::vector<int>& sample_indices) override;
    HealthReport probe() override;
    ProviderKind kind() const override { return ProviderKind::mock; }

    /// The draw rule, exposed so tests can simulate it independently.
    std::string draw(const CompletionRequest& request, const std::string& digest,
                     int sample_index) const;

  private:
    MockScript script_;
};

struct HttpProviderConfig {
    std::string base_url;                       // e.g. http://host:port/v1
    std::string api_key_env = "SCOP_API_KEY";
    int max_attempts = 3;
    double backoff_initial_ms = 1000.0;
    double backoff_multiplier = 2.0;
    int timeout_seconds = 120;
};

class HttpProvider : public Provider {
  public:
    explicit HttpProvider(HttpProviderConfig config);
    std::vector<std::string> generate(const CompletionRequest& request,
                                      const std::string& digest,
                                      const std::vector<int>& sample_indices) override;
    HealthReport probe() override;
    ProviderKind kind() const override { return ProviderKind::http; }

  private:
    HttpProviderConfig config_;
};

/// Replay-only provider: every cache miss is an error.
class ReplayProvider : public Provider {
  public:
    std::vector<std::string> generate(const CompletionRequest& request,
                                      const std::string& digest,
                                      const std::vector<int>& sample_indices) override;
    HealthReport probe() override;
    ProviderKind kind() const override { return ProviderKind::cache; }
};

/// Durable per-sample completion store: an append-only JSONL file of
/// {digest, sample_index, text, created_at} records. First write wins.
class SampleCache {
  public:
    explicit SampleCache(const std::filesystem::path& directory);

    std::optional<std::string> lookup(const std::string& digest, int sample_index) const;
    void insert(const std::string& digest, int sample_index, const std::string& text);
    std::size_t size() const;
    const std::filesystem::path& directory() const { return directory_; }

  private:
    std::filesystem::path directory_;
    std::filesystem::path records_path_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, int>, std::string> entries_;
};

struct GatewayOptions {
    int max_in_flight = 4;
    bool network_disabled = false;  // any provider call becomes an error
};

struct GatewayStats {
    std::size_t provider_calls = 0;
    std::size_t samples_generated = 0;
    std::size_t cache_hits = 0;
};

/// Single entry point for sampling: serves from the cache, batches the
/// missing sample indices into one provider call, and durably caches every
/// generated sample before returning it. Safe to call concurrently; at most
/// max_in_flight provider calls run at once.
class Gateway {
  public:
    Gateway(std::shared_ptr<Provider> provider, std::shared_ptr<SampleCache> cache,
            GatewayOptions options = {});

    CompletionResult complete(const CompletionRequest& request);
    HealthReport probe();
    GatewayStats stats() const;
    ProviderKind provider_kind() const { return provider_->kind(); }

  private:
    std::shared_ptr<Provider> provider_;
    std::shared_ptr<SampleCache> cache_;
    GatewayOptions options_;
    mutable std::mutex stats_mutex_;
    GatewayStats stats_;
    class Semaphore;
    std::shared_ptr<Semaphore> semaphore_;
};

} // namespace scop
