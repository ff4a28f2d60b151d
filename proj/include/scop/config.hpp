#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scop/consistency.hpp"
#include "scop/exemplar_search.hpp"

namespace scop {

/// Minimal TOML table: [section] headers, key = value pairs, strings with
/// escapes and ${ENV} interpolation, integers, floats, booleans,
/// single-line arrays, # comments. Keys are addressed as "section.key".
class TomlValue {
  public:
    enum class Type { string, integer, real, boolean, array };

    Type type = Type::string;
    std::string str;
    std::int64_t integer = 0;
    double real = 0.0;
    bool boolean = false;
    std::vector<TomlValue> array;
};

class TomlTable {
  public:
    static TomlTable parse(const std::string& text, const std::string& where);
    static TomlTable parse_file(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_string_array(const std::string& key) const;

    const std::map<std::string, TomlValue>& values() const { return values_; }

  private:
    const TomlValue* find(const std::string& key) const;
    std::map<std::string, TomlValue> values_;
};

struct ProviderConfig {
    std::string kind = "mock";  // mock | http | cache
    std::string mock_script;    // path, for mock
    std::string base_url;       // for http
    std::string api_key_env = "SCOP_API_KEY";
    int max_attempts = 3;
    double backoff_initial_ms = 1000.0;
    double backoff_multiplier = 2.0;
    int timeout_seconds = 120;
};

/// Everything an experiment needs, parsed from a TOML file with optional
/// JSON overrides (CLI flags and API callers use the same override path).
struct RunConfig {
    std::string config_path;

    std::string dataset_path;
    std::string dataset_name;
    std::optional<std::size_t> dataset_limit;
    std::uint64_t sample_seed = 0;

    ProviderConfig solver_provider;
    ProviderConfig paraphraser_provider;
    int max_in_flight = 4;
    bool network_disabled = false;

    std::string paraphraser_model = "paraphraser";
    double paraphrase_temperature = 0.7;
    int paraphrase_max_tokens = 1024;

    SolverSettings solver;
    std::string cot_exemplar_file;

    std::string scheme = "sc";  // sc | scop_naive | scop_icl
    int k = 1;
    int n_total = 40;
    std::uint64_t seed = 0;
    std::string runs_dir = "runs";
    std::string cache_dir = "cache";
    std::string run_id;
    std::string exemplar_file;
    std::string baseline_run;
    bool include_original_as_form = false;

    SearchConfig search;
    std::string search_output_file = "exemplars.jsonl";

    ApeConfig ape;
    std::string ape_pairs_file;

    static RunConfig load(const std::string& path, const std::string& overrides_json = "{}");
    static RunConfig from_table(const TomlTable& table, const std::string& overrides_json);

    void validate() const;
};

} // namespace scop
