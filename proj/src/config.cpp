#include "scop/config.hpp"

#include <cctype>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

using nlohmann::json;

bool is_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string interpolate_env(const std::string& text, const std::string& where) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
            std::size_t close = text.find('}', i + 2);
            if (close == std::string::npos)
                throw ConfigError(where + ": unterminated ${...} reference");
            std::string name = text.substr(i + 2, close - i - 2);
            const char* value = std::getenv(name.c_str());
            if (!value)
                throw ConfigError(where + ": environment variable " + name + " is not set");
            out += value;
            i = close + 1;
        } else {
            out += text[i++];
        }
    }
    return out;
}

// Scans one value starting at pos; advances pos past it.
TomlValue scan_value(const std::string& line, std::size_t& pos, const std::string& where) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) throw ConfigError(where + ": missing value");
    TomlValue value;
    char c = line[pos];

    if (c == '"') {
        value.type = TomlValue::Type::string;
        ++pos;
        std::string raw;
        bool closed = false;
        while (pos < line.size()) {
            char d = line[pos++];
            if (d == '"') {
                closed = true;
                break;
            }
            if (d == '\\') {
                if (pos >= line.size()) throw ConfigError(where + ": dangling escape");
                char e = line[pos++];
                switch (e) {
                    case 'n': raw += '\n'; break;
                    case 't': raw += '\t'; break;
                    case 'r': raw += '\r'; break;
                    case '"': raw += '"'; break;
                    case '\\': raw += '\\'; break;
                    // Literal $: a sentinel keeps it out of ${ENV}
                    // interpolation and is restored afterwards.
                    case '$': raw += '\x01'; break;
                    default:
                        throw ConfigError(where + ": unsupported escape \\" + std::string(1, e));
                }
                continue;
            }
            raw += d;
        }
        if (!closed) throw ConfigError(where + ": unterminated string");
        value.str = interpolate_env(raw, where);
        for (char& ch : value.str)
            if (ch == '\x01') ch = '$';
        return value;
    }

    if (c == '[') {
        value.type = TomlValue::Type::array;
        ++pos;
        while (true) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos >= line.size()) throw ConfigError(where + ": unterminated array");
            if (line[pos] == ']') {
                ++pos;
                break;
            }
            value.array.push_back(scan_value(line, pos, where));
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos < line.size() && line[pos] == ',') {
                ++pos;
                continue;
            }
            if (pos < line.size() && line[pos] == ']') {
                ++pos;
                break;
            }
            throw ConfigError(where + ": expected ',' or ']' in array");
        }
        return value;
    }

    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ',' && line[pos] != ']' && line[pos] != '#' &&
           line[pos] != ' ' && line[pos] != '\t')
        ++pos;
    std::string token = line.substr(start, pos - start);
    if (token == "true" || token == "false") {
        value.type = TomlValue::Type::boolean;
        value.boolean = token == "true";
        return value;
    }
    if (token.find_first_of(".eE") != std::string::npos &&
        token.find_first_of("0123456789") != std::string::npos) {
        char* end = nullptr;
        value.type = TomlValue::Type::real;
        value.real = std::strtod(token.c_str(), &end);
        if (!end || *end != '\0') throw ConfigError(where + ": bad value \"" + token + "\"");
        return value;
    }
    {
        char* end = nullptr;
        value.type = TomlValue::Type::integer;
        value.integer = std::strtoll(token.c_str(), &end, 10);
        if (token.empty() || !end || *end != '\0')
            throw ConfigError(where + ": bad value \"" + token + "\"");
        return value;
    }
}

} // namespace

TomlTable TomlTable::parse(const std::string& text, const std::string& source) {
    TomlTable table;
    std::string section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line =
            text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        start = end == std::string::npos ? text.size() + 1 : end + 1;
        ++line_no;
        std::string where = source + ":" + std::to_string(line_no);

        std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;

        if (trimmed[0] == '[') {
            std::size_t close = trimmed.find(']');
            if (close == std::string::npos) throw ConfigError(where + ": unterminated section");
            section = trim(trimmed.substr(1, close - 1));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            std::string rest = trim(trimmed.substr(close + 1));
            if (!rest.empty() && rest[0] != '#')
                throw ConfigError(where + ": trailing content after section header");
            continue;
        }

        std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = trim(trimmed.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        for (char c : key)
            if (!is_key_char(c)) throw ConfigError(where + ": bad key \"" + key + "\"");

        std::size_t pos = eq + 1;
        TomlValue value = scan_value(trimmed, pos, where);
        std::string rest = trim(trimmed.substr(pos));
        if (!rest.empty() && rest[0] != '#')
            throw ConfigError(where + ": trailing content after value");

        std::string full_key = section.empty() ? key : section + "." + key;
        if (!table.values_.emplace(full_key, std::move(value)).second)
            throw ConfigError(where + ": duplicate key \"" + full_key + "\"");
    }
    return table;
}

TomlTable TomlTable::parse_file(const std::string& path) {
    return parse(read_file(path), path);
}

const TomlValue* TomlTable::find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

bool TomlTable::has(const std::string& key) const { return find(key) != nullptr; }

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
    const TomlValue* v = find(key);
    if (!v) return fallback;
    if (v->type != TomlValue::Type::string)
        throw ConfigError("config key " + key + " must be a string");
    return v->str;
}

std::int64_t TomlTable::get_int(const std::string& key, std::int64_t fallback) const {
    const TomlValue* v = find(key);
    if (!v) return fallback;
    if (v->type != TomlValue::Type::integer)
        throw ConfigError("config key " + key + " must be an integer");
    return v->integer;
}

double TomlTable::get_real(const std::string& key, double fallback) const {
    const TomlValue* v = find(key);
    if (!v) return fallback;
    if (v->type == TomlValue::Type::integer) return static_cast<double>(v->integer);
    if (v->type != TomlValue::Type::real)
        throw ConfigError("config key " + key + " must be a number");
    return v->real;
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
    const TomlValue* v = find(key);
    if (!v) return fallback;
    if (v->type != TomlValue::Type::boolean)
        throw ConfigError("config key " + key + " must be a boolean");
    return v->boolean;
}

std::vector<std::string> TomlTable::get_string_array(const std::string& key) const {
    const TomlValue* v = find(key);
    if (!v) return {};
    if (v->type != TomlValue::Type::array)
        throw ConfigError("config key " + key + " must be an array");
    std::vector<std::string> out;
    for (const auto& item : v->array) {
        if (item.type != TomlValue::Type::string)
            throw ConfigError("config key " + key + " must be an array of strings");
        out.push_back(item.str);
    }
    return out;
}

namespace {

ProviderConfig provider_from_table(const TomlTable& table, const std::string& section,
                                   const ProviderConfig& base) {
    ProviderConfig p = base;
    p.kind = table.get_string(section + ".kind", base.kind);
    p.mock_script = table.get_string(section + ".mock_script", base.mock_script);
    p.base_url = table.get_string(section + ".base_url", base.base_url);
    p.api_key_env = table.get_string(section + ".api_key_env", base.api_key_env);
    p.max_attempts = static_cast<int>(table.get_int(section + ".max_attempts", base.max_attempts));
    p.backoff_initial_ms = table.get_real(section + ".backoff_initial_ms", base.backoff_initial_ms);
    p.backoff_multiplier = table.get_real(section + ".backoff_multiplier", base.backoff_multiplier);
    p.timeout_seconds =
        static_cast<int>(table.get_int(section + ".timeout_seconds", base.timeout_seconds));
    if (p.kind != "mock" && p.kind != "http" && p.kind != "cache")
        throw ConfigError("config: provider kind must be mock, http, or cache, got \"" + p.kind +
                          "\"");
    return p;
}

} // namespace

RunConfig RunConfig::from_table(const TomlTable& table, const std::string& overrides_json) {
    RunConfig c;

    c.dataset_path = table.get_string("dataset.path", "");
    c.dataset_name = table.get_string("dataset.name", "");
    if (table.has("dataset.limit"))
        c.dataset_limit = static_cast<std::size_t>(table.get_int("dataset.limit", 0));
    c.sample_seed = static_cast<std::uint64_t>(table.get_int("dataset.sample_seed", 0));

    c.solver_provider = provider_from_table(table, "provider", ProviderConfig{});
    c.paraphraser_provider = provider_from_table(table, "paraphraser", c.solver_provider);
    c.max_in_flight = static_cast<int>(table.get_int("provider.max_in_flight", 4));
    c.network_disabled = table.get_bool("provider.network_disabled", false);

    c.paraphraser_model = table.get_string("paraphraser.model", "paraphraser");
    c.paraphrase_temperature = table.get_real("paraphraser.temperature", 0.7);
    c.paraphrase_max_tokens = static_cast<int>(table.get_int("paraphraser.max_tokens", 1024));

    c.solver.model = table.get_string("solver.model", "solver");
    c.solver.system_prompt = table.get_string("solver.system_prompt", "");
    c.solver.temperature = table.get_real("solver.temperature", 0.7);
    c.solver.top_p = table.get_real("solver.top_p", 1.0);
    c.solver.max_tokens = static_cast<int>(table.get_int("solver.max_tokens", 1024));
    try {
        c.solver.mode = solver_mode_from_string(table.get_string("solver.mode", "zero_shot_cot"));
    } catch (const ValidationError& ex) {
        throw ConfigError(ex.what());
    }
    c.solver.expected_shots = static_cast<std::size_t>(table.get_int("solver.cot_shots", 4));
    c.cot_exemplar_file = table.get_string("solver.cot_exemplars", "");

    c.scheme = table.get_string("run.scheme", "sc");
    c.k = static_cast<int>(table.get_int("run.k", c.scheme == "sc" ? 1 : 8));
    c.n_total = static_cast<int>(table.get_int("run.n_total", 40));
    c.seed = static_cast<std::uint64_t>(table.get_int("run.seed", 0));
    c.runs_dir = table.get_string("run.runs_dir", "runs");
    c.cache_dir = table.get_string("run.cache_dir", "cache");
    c.run_id = table.get_string("run.run_id", "");
    c.exemplar_file = table.get_string("run.exemplar_file", "");
    c.baseline_run = table.get_string("run.baseline_run", "");
    c.include_original_as_form = table.get_bool("run.include_original_as_form", false);

    c.search.n_shot = static_cast<int>(table.get_int("search.n_shot", 8));
    c.search.margin = table.get_real("search.margin", 0.3);
    c.search.k_per_problem = static_cast<int>(table.get_int("search.k_per_problem", 4));
    c.search.n_paths = static_cast<int>(table.get_int("search.n_paths", 40));
    c.search.max_steps = static_cast<int>(table.get_int("search.max_steps", 0));
    c.search.seed = static_cast<std::uint64_t>(table.get_int("search.seed", 0));
    c.search_output_file = table.get_string("search.output_file", "exemplars.jsonl");

    c.ape.c_candidates = static_cast<int>(table.get_int("ape.c_candidates", 15));
    c.ape.batch_b = static_cast<int>(table.get_int("ape.batch_b", 30));
    c.ape.epochs_e = static_cast<int>(table.get_int("ape.epochs_e", 1));
    c.ape.n_paths = static_cast<int>(table.get_int("ape.n_paths", 40));
    c.ape.seed = static_cast<std::uint64_t>(table.get_int("ape.seed", 0));
    c.ape.induction_temperature = table.get_real("ape.induction_temperature", 0.7);
    c.ape_pairs_file = table.get_string("ape.pairs_file", "");

    json overrides;
    try {
        overrides = json::parse(overrides_json.empty() ? "{}" : overrides_json);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("bad overrides JSON: ") + ex.what());
    }
    if (!overrides.is_object()) throw ConfigError("overrides must be a JSON object");
    try {
        if (overrides.contains("k")) c.k = overrides["k"].get<int>();
        if (overrides.contains("n_total")) c.n_total = overrides["n_total"].get<int>();
        if (overrides.contains("temperature")) {
            c.solver.temperature = overrides["temperature"].get<double>();
            c.paraphrase_temperature = overrides["temperature"].get<double>();
        }
        if (overrides.contains("margin")) c.search.margin = overrides["margin"].get<double>();
        if (overrides.contains("seed")) {
            auto seed = overrides["seed"].get<std::uint64_t>();
            c.seed = seed;
            c.search.seed = seed;
            c.ape.seed = seed;
        }
        if (overrides.contains("provider")) {
            std::string kind = overrides["provider"].get<std::string>();
            if (kind != "mock" && kind != "http")
                throw ConfigError("provider override must be mock or http, got \"" + kind + "\"");
            c.solver_provider.kind = kind;
            c.paraphraser_provider.kind = kind;
        }
        if (overrides.contains("paraphraser_endpoint")) {
            c.paraphraser_provider.base_url = overrides["paraphraser_endpoint"].get<std::string>();
            c.paraphraser_provider.kind = "http";
        }
        if (overrides.contains("run_id")) c.run_id = overrides["run_id"].get<std::string>();
        if (overrides.contains("runs_dir")) c.runs_dir = overrides["runs_dir"].get<std::string>();
        if (overrides.contains("baseline_run"))
            c.baseline_run = overrides["baseline_run"].get<std::string>();
        if (overrides.contains("scheme")) c.scheme = overrides["scheme"].get<std::string>();
        if (overrides.contains("network_disabled"))
            c.network_disabled = overrides["network_disabled"].get<bool>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("bad override value: ") + ex.what());
    }

    c.search.dataset_name = c.dataset_name;
    c.search.paraphraser_model = c.paraphraser_model;
    c.search.paraphrase_temperature = c.paraphrase_temperature;
    c.search.paraphrase_max_tokens = c.paraphrase_max_tokens;
    c.search.solver = c.solver;
    c.ape.paraphraser_model = c.paraphraser_model;
    c.ape.paraphrase_temperature = c.paraphrase_temperature;
    c.ape.paraphrase_max_tokens = c.paraphrase_max_tokens;
    c.ape.solver = c.solver;

    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path, const std::string& overrides_json) {
    TomlTable table;
    try {
        table = TomlTable::parse_file(path);
    } catch (const IoError& ex) {
        throw ConfigError(ex.what());
    }
    RunConfig c = from_table(table, overrides_json);
    c.config_path = path;
    return c;
}

void RunConfig::validate() const {
    if (scheme != "sc" && scheme != "scop_naive" && scheme != "scop_icl")
        throw ConfigError("config: scheme must be sc, scop_naive, or scop_icl, got \"" + scheme +
                          "\"");
    if (k < 1) throw ConfigError("config: k must be >= 1");
    if (n_total < 1) throw ConfigError("config: n_total must be >= 1");
    if (k > n_total) throw ConfigError("config: k must not exceed n_total");
    if (scheme == "sc" && k != 1) throw ConfigError("config: scheme sc requires k = 1");
    if (solver.temperature < 0.0 || solver.temperature > 2.0)
        throw ConfigError("config: solver temperature must be in [0,2]");
    if (solver.top_p <= 0.0 || solver.top_p > 1.0)
        throw ConfigError("config: solver top_p must be in (0,1]");
    if (solver.max_tokens < 1) throw ConfigError("config: solver max_tokens must be >= 1");
    if (paraphrase_temperature < 0.0 || paraphrase_temperature > 2.0)
        throw ConfigError("config: paraphraser temperature must be in [0,2]");
    if (max_in_flight < 1) throw ConfigError("config: max_in_flight must be >= 1");
    if (search.margin < 0.0 || search.margin > 1.0)
        throw ConfigError("config: search margin must be in [0,1]");
    if (solver_provider.kind == "http" && solver_provider.base_url.empty())
        throw ConfigError("config: http provider requires base_url");
    if (solver_provider.kind == "mock" && solver_provider.mock_script.empty())
        throw ConfigError("config: mock provider requires mock_script");
}

} // namespace scop
