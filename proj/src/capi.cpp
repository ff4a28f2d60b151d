#include "scop/scop.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "scop/config.hpp"
#include "scop/errors.hpp"
#include "scop/runner.hpp"
#include "scop/version.hpp"

struct scop_context {
    scop::RunConfig config;
};

namespace {

thread_local std::string t_last_error;

char* copy_string(const std::string& s) {
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (buf) std::memcpy(buf, s.c_str(), s.size() + 1);
    return buf;
}

template <typename Fn>
scop_status guarded(char** out_json, Fn&& fn) {
    if (out_json) *out_json = nullptr;
    try {
        nlohmann::json result = fn();
        if (out_json) {
            char* buf = copy_string(result.dump(2));
            if (!buf) {
                t_last_error = "out of memory";
                return SCOP_E_INTERNAL;
            }
            *out_json = buf;
        }
        t_last_error.clear();
        return SCOP_OK;
    } catch (const scop::ConfigError& ex) {
        t_last_error = ex.what();
        return SCOP_E_CONFIG;
    } catch (const scop::ProviderError& ex) {
        t_last_error = ex.what();
        return SCOP_E_PROVIDER;
    } catch (const scop::CacheError& ex) {
        t_last_error = ex.what();
        return SCOP_E_IO;
    } catch (const scop::IoError& ex) {
        t_last_error = ex.what();
        return SCOP_E_IO;
    } catch (const scop::StateError& ex) {
        t_last_error = ex.what();
        return SCOP_E_STATE;
    } catch (const scop::ValidationError& ex) {
        t_last_error = ex.what();
        return SCOP_E_INVALID;
    } catch (const std::exception& ex) {
        t_last_error = ex.what();
        return SCOP_E_INTERNAL;
    } catch (...) {
        t_last_error = "unknown failure";
        return SCOP_E_INTERNAL;
    }
}

scop_status invalid(const char* message) {
    t_last_error = message;
    return SCOP_E_INVALID;
}

} // namespace

extern "C" {

const char* scop_version(void) { return scop::kVersion; }

const char* scop_last_error(void) { return t_last_error.c_str(); }

void scop_string_free(char* s) { std::free(s); }

scop_status scop_context_create(const char* config_path, const char* overrides_json,
                                scop_context** out) {
    if (!out) return invalid("out must not be NULL");
    *out = nullptr;
    if (!config_path) return invalid("config_path must not be NULL");
    nlohmann::json overrides = nlohmann::json::object();
    if (overrides_json && *overrides_json) {
        overrides = nlohmann::json::parse(overrides_json, nullptr, false);
        if (overrides.is_discarded() || !overrides.is_object())
            return invalid("overrides_json must be a JSON object");
    }
    scop_context* ctx = nullptr;
    scop_status status = guarded(nullptr, [&]() {
        ctx = new scop_context{scop::RunConfig::load(config_path, overrides.dump())};
        ctx->config.validate();
        return nlohmann::json(nullptr);
    });
    if (status != SCOP_OK) {
        delete ctx;
        return status;
    }
    *out = ctx;
    return SCOP_OK;
}

void scop_context_destroy(scop_context* ctx) { delete ctx; }

scop_status scop_run_paraphrase(scop_context* ctx, char** out_json) {
    if (!ctx) return invalid("ctx must not be NULL");
    return guarded(out_json, [&]() { return scop::run_paraphrase(ctx->config); });
}

scop_status scop_run_solve(scop_context* ctx, char** out_json) {
    if (!ctx) return invalid("ctx must not be NULL");
    return guarded(out_json, [&]() { return scop::run_solve(ctx->config); });
}

scop_status scop_search_exemplars(scop_context* ctx, char** out_json) {
    if (!ctx) return invalid("ctx must not be NULL");
    return guarded(out_json, [&]() { return scop::run_search(ctx->config); });
}

scop_status scop_ape_search(scop_context* ctx, char** out_json) {
    if (!ctx) return invalid("ctx must not be NULL");
    return guarded(out_json, [&]() { return scop::run_ape(ctx->config); });
}

scop_status scop_recompute_metrics(const char* run_dir, const char* baseline_run,
                                   char** out_json) {
    if (!run_dir) return invalid("run_dir must not be NULL");
    std::string baseline = baseline_run ? baseline_run : "";
    return guarded(out_json, [&]() { return scop::recompute_metrics(run_dir, baseline); });
}

scop_status scop_vov(const char* run_dir, const char* baseline_run, char** out_json) {
    if (!run_dir) return invalid("run_dir must not be NULL");
    std::string baseline = baseline_run ? baseline_run : "";
    return guarded(out_json, [&]() { return scop::vov_report(run_dir, baseline); });
}

scop_status scop_difficulty_map(const char* baseline_run, const char* run_dir,
                                char** out_json) {
    if (!baseline_run) return invalid("baseline_run must not be NULL");
    if (!run_dir) return invalid("run_dir must not be NULL");
    return guarded(out_json,
                   [&]() { return scop::difficulty_map_report(baseline_run, run_dir); });
}

scop_status scop_agreement(const char* const* run_dirs, size_t n_runs, char** out_json) {
    if (!run_dirs) return invalid("run_dirs must not be NULL");
    std::vector<std::string> dirs;
    dirs.reserve(n_runs);
    for (size_t i = 0; i < n_runs; ++i) {
        if (!run_dirs[i]) return invalid("run_dirs entries must not be NULL");
        dirs.emplace_back(run_dirs[i]);
    }
    return guarded(out_json, [&]() { return scop::agreement_report(dirs); });
}

scop_status scop_probe(scop_context* ctx, char** out_json) {
    if (!ctx) return invalid("ctx must not be NULL");
    return guarded(out_json, [&]() { return scop::run_probe(ctx->config); });
}

} // extern "C"
