// Command-line front end. Talks to the library exclusively through the C
// interface in scop/scop.h; all orchestration lives behind that boundary.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scop/scop.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitProvider = 3;

int exit_code_for(scop_status status) {
    switch (status) {
        case SCOP_OK: return kExitOk;
        case SCOP_E_CONFIG: return kExitUsage;
        case SCOP_E_PROVIDER: return kExitProvider;
        default: return kExitFailure;
    }
}

int fail(scop_status status) {
    std::fprintf(stderr, "scop: error: %s\n", scop_last_error());
    return exit_code_for(status);
}

// Options shared by every command that starts from a config file.
struct ConfigArgs {
    std::string config_path;
    int k = 0;
    int n_total = 0;
    double temperature = 0.0;
    double margin = 0.0;
    std::uint64_t seed = 0;
    std::string provider;
    std::string paraphraser_endpoint;
    std::string run_id;
    std::string runs_dir;
    std::string baseline;
    std::string scheme;
    bool offline = false;

    CLI::Option* k_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* temp_opt = nullptr;
    CLI::Option* margin_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "Path to the TOML configuration file")
            ->required();
        k_opt = cmd->add_option("--k", k, "Number of surface forms per problem");
        n_opt = cmd->add_option("--n", n_total, "Total reasoning paths per problem");
        temp_opt = cmd->add_option("--temperature", temperature, "Sampling temperature");
        margin_opt = cmd->add_option("--margin", margin, "Acceptance margin for exemplar search");
        seed_opt = cmd->add_option("--seed", seed, "Deterministic seed");
        cmd->add_option("--provider", provider, "Provider backend")
            ->check(CLI::IsMember({"mock", "http"}));
        cmd->add_option("--paraphraser-endpoint", paraphraser_endpoint,
                        "HTTP base URL for the paraphraser provider");
        cmd->add_option("--run-id", run_id, "Explicit run identifier");
        cmd->add_option("--runs-dir", runs_dir, "Directory that holds run artifacts");
        cmd->add_option("--baseline", baseline, "Baseline run directory");
        cmd->add_option("--scheme", scheme, "Sampling scheme")
            ->check(CLI::IsMember({"sc", "scop_naive", "scop_icl"}));
        cmd->add_flag("--offline", offline, "Fail instead of calling providers on cache misses");
    }

    std::string overrides() const {
        json o = json::object();
        if (k_opt->count()) o["k"] = k;
        if (n_opt->count()) o["n_total"] = n_total;
        if (temp_opt->count()) o["temperature"] = temperature;
        if (margin_opt->count()) o["margin"] = margin;
        if (seed_opt->count()) o["seed"] = seed;
        if (!provider.empty()) o["provider"] = provider;
        if (!paraphraser_endpoint.empty()) o["paraphraser_endpoint"] = paraphraser_endpoint;
        if (!run_id.empty()) o["run_id"] = run_id;
        if (!runs_dir.empty()) o["runs_dir"] = runs_dir;
        if (!baseline.empty()) o["baseline_run"] = baseline;
        if (!scheme.empty()) o["scheme"] = scheme;
        if (offline) o["network_disabled"] = true;
        return o.dump();
    }
};

struct ContextHandle {
    scop_context* ctx = nullptr;
    ~ContextHandle() { scop_context_destroy(ctx); }
};

int print_and_free(char* out_json) {
    if (out_json) {
        std::printf("%s\n", out_json);
        scop_string_free(out_json);
    }
    return kExitOk;
}

int run_context_command(const ConfigArgs& args,
                        scop_status (*fn)(scop_context*, char**)) {
    ContextHandle handle;
    scop_status status =
        scop_context_create(args.config_path.c_str(), args.overrides().c_str(), &handle.ctx);
    if (status != SCOP_OK) return fail(status);
    char* out = nullptr;
    status = fn(handle.ctx, &out);
    if (status != SCOP_OK) return fail(status);
    return print_and_free(out);
}

int run_probe_command(const ConfigArgs& args) {
    ContextHandle handle;
    scop_status status =
        scop_context_create(args.config_path.c_str(), args.overrides().c_str(), &handle.ctx);
    if (status != SCOP_OK) return fail(status);
    char* out = nullptr;
    status = scop_probe(handle.ctx, &out);
    if (status != SCOP_OK) return fail(status);
    bool healthy = false;
    if (out) {
        json doc = json::parse(out, nullptr, false);
        healthy = doc.is_object() && doc.value("healthy", false);
    }
    print_and_free(out);
    return healthy ? kExitOk : kExitProvider;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surface-form consistency harness for math reasoning"};
    app.set_version_flag("--version", scop_version());
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    ConfigArgs paraphrase_args, solve_args, search_args, ape_args, probe_args;

    CLI::App* cmd_paraphrase =
        app.add_subcommand("paraphrase", "Generate paraphrase forms for every dataset problem");
    paraphrase_args.attach(cmd_paraphrase);

    CLI::App* cmd_solve =
        app.add_subcommand("solve", "Sample reasoning paths, vote, and write run artifacts");
    solve_args.attach(cmd_solve);

    CLI::App* cmd_search = app.add_subcommand(
        "search-exemplars", "Search the training set for margin-clearing paraphrase exemplars");
    search_args.attach(cmd_search);

    CLI::App* cmd_ape =
        app.add_subcommand("ape", "Induce and score paraphrase instructions on a dev set");
    ape_args.attach(cmd_ape);

    std::string metrics_run, metrics_baseline;
    CLI::App* cmd_metrics =
        app.add_subcommand("metrics", "Recompute metrics and reports from recorded samples");
    cmd_metrics->add_option("--run", metrics_run, "Run directory")->required();
    cmd_metrics->add_option("--baseline", metrics_baseline, "Baseline run directory");

    std::string vov_run, vov_baseline;
    CLI::App* cmd_vov =
        app.add_subcommand("vov", "Variance-over-variants report for a finished run");
    cmd_vov->add_option("--run", vov_run, "Run directory")->required();
    cmd_vov->add_option("--baseline", vov_baseline, "Baseline run directory");

    std::string dmap_run, dmap_baseline;
    CLI::App* cmd_dmap = app.add_subcommand(
        "difficulty-map", "Classify per-problem difficulty shifts against a baseline run");
    cmd_dmap->add_option("--baseline", dmap_baseline, "Baseline run directory")->required();
    cmd_dmap->add_option("--run", dmap_run, "Paraphrased run directory")->required();

    std::vector<std::string> agreement_runs;
    CLI::App* cmd_agreement =
        app.add_subcommand("agreement", "Rank agreement across two or more runs");
    cmd_agreement->add_option("--run", agreement_runs, "Run directory (repeat for each run)")
        ->required()
        ->expected(-2);

    CLI::App* cmd_probe = app.add_subcommand("probe", "Health-check the configured providers");
    probe_args.attach(cmd_probe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (cmd_paraphrase->parsed()) return run_context_command(paraphrase_args, scop_run_paraphrase);
    if (cmd_solve->parsed()) return run_context_command(solve_args, scop_run_solve);
    if (cmd_search->parsed()) return run_context_command(search_args, scop_search_exemplars);
    if (cmd_ape->parsed()) return run_context_command(ape_args, scop_ape_search);
    if (cmd_probe->parsed()) return run_probe_command(probe_args);

    if (cmd_metrics->parsed()) {
        char* out = nullptr;
        scop_status status = scop_recompute_metrics(
            metrics_run.c_str(), metrics_baseline.empty() ? nullptr : metrics_baseline.c_str(),
            &out);
        if (status != SCOP_OK) return fail(status);
        return print_and_free(out);
    }
    if (cmd_vov->parsed()) {
        char* out = nullptr;
        scop_status status = scop_vov(
            vov_run.c_str(), vov_baseline.empty() ? nullptr : vov_baseline.c_str(), &out);
        if (status != SCOP_OK) return fail(status);
        return print_and_free(out);
    }
    if (cmd_dmap->parsed()) {
        char* out = nullptr;
        scop_status status = scop_difficulty_map(dmap_baseline.c_str(), dmap_run.c_str(), &out);
        if (status != SCOP_OK) return fail(status);
        return print_and_free(out);
    }
    if (cmd_agreement->parsed()) {
        std::vector<const char*> dirs;
        dirs.reserve(agreement_runs.size());
        for (const auto& d : agreement_runs) dirs.push_back(d.c_str());
        char* out = nullptr;
        scop_status status = scop_agreement(dirs.data(), dirs.size(), &out);
        if (status != SCOP_OK) return fail(status);
        return print_and_free(out);
    }
    return kExitUsage;
}
