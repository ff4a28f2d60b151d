#include "scop/runner.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "scop/answer.hpp"
#include "scop/charts.hpp"
#include "scop/consistency.hpp"
#include "scop/dataset.hpp"
#include "scop/errors.hpp"
#include "scop/exemplar_search.hpp"
#include "scop/metrics.hpp"
#include "scop/prompting.hpp"
#include "scop/util.hpp"
#include "scop/version.hpp"

namespace scop {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::shared_ptr<Provider> make_provider(const ProviderConfig& pc) {
    if (pc.kind == "mock") {
        if (pc.mock_script.empty()) throw ConfigError("mock provider requires mock_script");
        return std::make_shared<MockProvider>(MockScript::load(pc.mock_script));
    }
    if (pc.kind == "http") {
        HttpProviderConfig hc;
        hc.base_url = pc.base_url;
        hc.api_key_env = pc.api_key_env;
        hc.max_attempts = pc.max_attempts;
        hc.backoff_initial_ms = pc.backoff_initial_ms;
        hc.backoff_multiplier = pc.backoff_multiplier;
        hc.timeout_seconds = pc.timeout_seconds;
        return std::make_shared<HttpProvider>(hc);
    }
    return std::make_shared<ReplayProvider>();
}

json provider_descriptor(const ProviderConfig& pc) {
    if (pc.kind == "mock")
        return {{"kind", "mock"}, {"script_digest", sha256_file(pc.mock_script)}};
    if (pc.kind == "http") return {{"kind", "http"}, {"base_url", pc.base_url}};
    return {{"kind", "cache"}};
}

json build_manifest(const RunConfig& c, const std::string& dataset_digest) {
    json m;
    m["dataset"] = {{"path", c.dataset_path},
                    {"digest", dataset_digest},
                    {"name", c.dataset_name},
                    {"sample_seed", c.sample_seed}};
    m["dataset"]["limit"] = c.dataset_limit ? json(*c.dataset_limit) : json(nullptr);
    m["solver"] = {{"model", c.solver.model},
                   {"mode", to_string(c.solver.mode)},
                   {"system_prompt", c.solver.system_prompt},
                   {"temperature", c.solver.temperature},
                   {"top_p", c.solver.top_p},
                   {"max_tokens", c.solver.max_tokens},
                   {"cot_shots", c.solver.expected_shots},
                   {"provider", provider_descriptor(c.solver_provider)}};
    m["solver"]["cot_exemplar_digest"] =
        c.cot_exemplar_file.empty() ? json(nullptr) : json(sha256_file(c.cot_exemplar_file));
    m["paraphraser"] = {{"model", c.paraphraser_model},
                        {"temperature", c.paraphrase_temperature},
                        {"max_tokens", c.paraphrase_max_tokens},
                        {"provider", provider_descriptor(c.paraphraser_provider)}};
    m["scheme"] = c.scheme;
    m["k"] = c.k;
    m["n_total"] = c.n_total;
    m["seed"] = c.seed;
    m["include_original_as_form"] = c.include_original_as_form;
    m["exemplar_digest"] =
        c.exemplar_file.empty() ? json(nullptr) : json(sha256_file(c.exemplar_file));
    m["baseline_run"] = c.baseline_run.empty() ? json(nullptr) : json(c.baseline_run);
    m["tool_version"] = kVersion;
    return m;
}

std::string derive_run_id(const json& manifest_without_id) {
    return sha256_hex(manifest_without_id.dump()).substr(0, 12);
}

struct RunPaths {
    fs::path dir;
    fs::path manifest;
    fs::path forms;
    fs::path samples;
    fs::path distributions;
    fs::path metrics;
    fs::path report;
    fs::path charts;

    explicit RunPaths(const fs::path& run_dir)
        : dir(run_dir),
          manifest(run_dir / "manifest.json"),
          forms(run_dir / "forms.jsonl"),
          samples(run_dir / "samples.jsonl"),
          distributions(run_dir / "distributions.json"),
          metrics(run_dir / "metrics.json"),
          report(run_dir / "report.csv"),
          charts(run_dir / "charts") {}
};

struct ProblemRecord {
    Problem problem;
    SolveOutcome outcome;
};

struct BaselineInfo {
    std::map<std::string, double> sr;
    std::map<std::string, double> entropy;  // only problems with parseable samples
};

BaselineInfo load_baseline(const std::string& run_dir) {
    fs::path path = fs::path(run_dir) / "distributions.json";
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& ex) {
        throw ValidationError(path.string() + ": malformed distributions file: " + ex.what());
    }
    BaselineInfo info;
    for (const auto& problem : doc.at("problems")) {
        std::string id = problem.at("problem_id").get<std::string>();
        const auto& pooled = problem.at("pooled");
        info.sr[id] = pooled.at("solve_rate").get<double>();
        if (!pooled.at("entropy").is_null())
            info.entropy[id] = pooled.at("entropy").get<double>();
    }
    if (info.sr.empty()) throw ValidationError(path.string() + ": no problems in baseline run");
    return info;
}

json distribution_json(const AnswerDistribution& dist, const CanonicalAnswer& gold) {
    json buckets = json::object();
    for (const auto& [value, count] : dist.buckets) buckets[value] = count;
    json out = {{"buckets", std::move(buckets)},
                {"n_total", dist.n_total},
                {"n_none", dist.n_none},
                {"solve_rate", solve_rate(dist, gold)}};
    out["entropy"] =
        dist.n_total - dist.n_none > 0 ? json(entropy_bits(dist)) : json(nullptr);
    return out;
}

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += "\"";
    return out;
}

// Distributions, metrics, report, and charts are pure functions of the
// sample set plus the baseline; both live runs and recomputation call this.
json write_reports(const RunPaths& paths, const std::string& scheme, int k, int n_total,
                   const std::string& baseline_run, const std::vector<ProblemRecord>& records,
                   const BaselineInfo* baseline) {
    // distributions.json
    json problems = json::array();
    for (const auto& record : records) {
        const Problem& p = record.problem;
        CanonicalAnswer gold = p.gold();
        json forms = json::array();
        for (const auto& fr : record.outcome.per_form) {
            json f = {{"form_id", fr.form.form_id}, {"origin", to_string(fr.form.origin)}};
            f.update(distribution_json(fr.distribution, gold));
            forms.push_back(std::move(f));
        }
        json row = {{"problem_id", p.id},
                    {"gold_kind", to_string(gold.kind)},
                    {"gold_value", gold.value},
                    {"final_kind", to_string(record.outcome.final_answer.kind)},
                    {"final_value", record.outcome.final_answer.value},
                    {"correct", answers_equal(record.outcome.final_answer, gold)},
                    {"pooled", distribution_json(record.outcome.pooled, gold)},
                    {"forms", std::move(forms)}};
        problems.push_back(std::move(row));
    }
    atomic_write_file(paths.distributions, json{{"problems", std::move(problems)}}.dump(2) + "\n");

    // Per-problem rollup used by metrics.json and report.csv.
    std::vector<AccuracyInput> accuracy_inputs;
    SolveRateTable delta_table;
    std::map<std::string, SrEntropy> before_points;
    std::map<std::string, SrEntropy> after_points;
    json per_problem = json::array();

    for (const auto& record : records) {
        const Problem& p = record.problem;
        CanonicalAnswer gold = p.gold();
        bool correct = answers_equal(record.outcome.final_answer, gold);
        double pooled_sr = solve_rate(record.outcome.pooled, gold);
        bool has_entropy = record.outcome.pooled.n_total - record.outcome.pooled.n_none > 0;
        double entropy = has_entropy ? entropy_bits(record.outcome.pooled) : 0.0;

        std::optional<double> own_original_sr;
        std::vector<double> paraphrase_srs;
        for (const auto& fr : record.outcome.per_form) {
            double sr = solve_rate(fr.distribution, gold);
            if (fr.form.origin == FormOrigin::original)
                own_original_sr = sr;
            else
                paraphrase_srs.push_back(sr);
        }

        std::optional<double> original_sr;
        if (own_original_sr) {
            original_sr = own_original_sr;
        } else if (baseline) {
            auto it = baseline->sr.find(p.id);
            if (it != baseline->sr.end()) original_sr = it->second;
        }

        accuracy_inputs.push_back({p.id, correct, original_sr});
        if (original_sr && !paraphrase_srs.empty())
            delta_table[p.id] = SolveRateRow{*original_sr, paraphrase_srs};
        if (baseline && has_entropy) {
            auto sr_it = baseline->sr.find(p.id);
            auto ent_it = baseline->entropy.find(p.id);
            if (sr_it != baseline->sr.end() && ent_it != baseline->entropy.end()) {
                before_points[p.id] = {sr_it->second, ent_it->second};
                after_points[p.id] = {pooled_sr, entropy};
            }
        }

        json row = {{"problem_id", p.id},
                    {"gold", gold.value},
                    {"final", record.outcome.final_answer.value},
                    {"correct", correct},
                    {"pooled_solve_rate", pooled_sr}};
        row["entropy_bits"] = has_entropy ? json(entropy) : json(nullptr);
        row["original_sr"] = original_sr ? json(*original_sr) : json(nullptr);
        per_problem.push_back(std::move(row));
    }

    AccuracyReport acc = accuracy_report(accuracy_inputs);

    json metrics_doc;
    metrics_doc["scheme"] = scheme;
    metrics_doc["k"] = k;
    metrics_doc["n_total"] = n_total;
    metrics_doc["n_problems"] = acc.n_problems;
    metrics_doc["baseline_run"] = baseline_run.empty() ? json(nullptr) : json(baseline_run);
    json acc_json = {{"global", acc.global_accuracy}, {"rendered", render_accuracy(acc)}};
    acc_json["hard"] = acc.hard_accuracy ? json(*acc.hard_accuracy) : json(nullptr);
    acc_json["hpr"] = acc.hpr ? json(*acc.hpr) : json(nullptr);
    acc_json["n_hard"] = acc.baseline_available ? json(acc.n_hard) : json(nullptr);
    acc_json["baseline_available"] = acc.baseline_available;
    metrics_doc["accuracy"] = std::move(acc_json);

    ensure_directory(paths.charts);
    if (!delta_table.empty() && delta_table.size() == records.size()) {
        VovResult v = vov(delta_table);
        metrics_doc["vov"] = {{"vov", v.vov},
                              {"std_percent", v.std_percent},
                              {"mean_row_std_percent", v.mean_row_std_percent}};
        DeltaHistogram hist = delta_histogram(delta_table);
        metrics_doc["delta_tails"] = {{"upper", hist.upper_tail},
                                      {"lower", hist.lower_tail},
                                      {"n_pairs", hist.n_pairs}};
        atomic_write_file(paths.charts / "delta_histogram.svg", render_delta_histogram_svg(hist));
    } else {
        metrics_doc["vov"] = nullptr;
        metrics_doc["delta_tails"] = nullptr;
    }
    if (!before_points.empty() && before_points.size() == records.size()) {
        auto points = difficulty_map(before_points, after_points);
        json counts = {{"improvement", 0}, {"overconfidence", 0}, {"uncertainty", 0},
                       {"neutral", 0}};
        for (const auto& point : points)
            counts[to_string(point.cls)] = counts[to_string(point.cls)].get<int>() + 1;
        metrics_doc["difficulty_classes"] = std::move(counts);
        atomic_write_file(paths.charts / "difficulty_map.svg", render_difficulty_map_svg(points));
    } else {
        metrics_doc["difficulty_classes"] = nullptr;
    }
    metrics_doc["per_problem"] = std::move(per_problem);
    atomic_write_file(paths.metrics, metrics_doc.dump(2) + "\n");

    // report.csv
    std::string csv = "problem_id,gold,final,correct,pooled_solve_rate,entropy_bits,original_sr,hard\n";
    for (const auto& row : metrics_doc["per_problem"]) {
        csv += csv_escape(row["problem_id"].get<std::string>());
        csv += ",";
        csv += csv_escape(row["gold"].get<std::string>());
        csv += ",";
        csv += csv_escape(row["final"].get<std::string>());
        csv += ",";
        csv += row["correct"].get<bool>() ? "true" : "false";
        csv += ",";
        csv += format_double(row["pooled_solve_rate"].get<double>());
        csv += ",";
        if (!row["entropy_bits"].is_null()) csv += format_double(row["entropy_bits"].get<double>());
        csv += ",";
        if (!row["original_sr"].is_null()) {
            double sr = row["original_sr"].get<double>();
            csv += format_double(sr);
            csv += ",";
            csv += sr <= 0.5 ? "true" : "false";
        } else {
            csv += ",";
        }
        csv += "\n";
    }
    atomic_write_file(paths.report, csv);

    return metrics_doc;
}

std::vector<CoTExemplar> load_cot_if_needed(const RunConfig& c) {
    if (c.solver.mode != SolverMode::few_shot_cot) return {};
    if (c.cot_exemplar_file.empty())
        throw ConfigError("config: few_shot_cot requires solver.cot_exemplars");
    return load_cot_exemplars(c.cot_exemplar_file);
}

std::vector<SurfaceForm> make_forms(const RunConfig& c, Gateway& paraphraser, const Problem& p,
                                    const std::vector<ParaphraseExemplar>& icl_exemplars) {
    SurfaceForm original = original_form(p);
    if (c.scheme == "sc") return {original};

    std::vector<SurfaceForm> forms;
    int n_paraphrases = c.k;
    if (c.include_original_as_form) {
        forms.push_back(original);
        n_paraphrases -= 1;
    }
    if (n_paraphrases <= 0) {
        if (forms.empty()) forms.push_back(original);
        return forms;
    }

    CompletionRequest request;
    request.model = c.paraphraser_model;
    request.user_prompt = c.scheme == "scop_naive"
                              ? build_naive_paraphrase_prompt(original)
                              : build_icl_paraphrase_prompt(original, icl_exemplars);
    request.temperature = c.paraphrase_temperature;
    request.n_samples = n_paraphrases;
    request.max_tokens = c.paraphrase_max_tokens;
    CompletionResult result = paraphraser.complete(request);

    FormOrigin origin = c.scheme == "scop_naive" ? FormOrigin::naive_paraphrase
                                                 : FormOrigin::icl_paraphrase;
    for (int i = 0; i < n_paraphrases; ++i) {
        SurfaceForm form;
        form.form_id = p.id + "#para-" + std::to_string(i);
        form.problem_id = p.id;
        form.text = clean_paraphrase_response(result.texts[static_cast<std::size_t>(i)]);
        // A degenerate empty paraphrase falls back to the original wording
        // so the budget split stays intact.
        if (form.text.empty()) form.text = original.text;
        form.options_block = original.options_block;
        form.origin = origin;
        form.paraphraser_model = c.paraphraser_model;
        forms.push_back(std::move(form));
    }
    return forms;
}

void write_forms_file(const RunPaths& paths, const std::vector<ProblemRecord>& records) {
    std::string body;
    for (const auto& record : records) {
        for (const auto& fr : record.outcome.per_form) {
            json row = {{"form_id", fr.form.form_id},
                        {"problem_id", fr.form.problem_id},
                        {"text", fr.form.text},
                        {"options_block", fr.form.options_block},
                        {"origin", to_string(fr.form.origin)},
                        {"paraphraser_model", fr.form.paraphraser_model}};
            body += row.dump();
            body += "\n";
        }
    }
    atomic_write_file(paths.forms, body);
}

void write_samples_file(const RunPaths& paths, const std::vector<ProblemRecord>& records) {
    std::string body;
    for (const auto& record : records) {
        for (const auto& fr : record.outcome.per_form) {
            for (const auto& sample : fr.samples) {
                json row = {{"problem_id", record.problem.id},
                            {"form_id", sample.form_id},
                            {"sample_index", sample.sample_index},
                            {"raw_text", sample.raw_text},
                            {"answer_kind", to_string(sample.answer.kind)},
                            {"answer_value", sample.answer.value}};
                body += row.dump();
                body += "\n";
            }
        }
    }
    atomic_write_file(paths.samples, body);
}

json run_summary(const std::string& run_id, const RunPaths& paths, const json& metrics_doc,
                 const GatewayPair& gateways) {
    GatewayStats solver_stats = gateways.solver->stats();
    GatewayStats para_stats = gateways.paraphraser->stats();
    return {{"run_id", run_id},
            {"run_dir", paths.dir.string()},
            {"accuracy", metrics_doc.at("accuracy")},
            {"n_problems", metrics_doc.at("n_problems")},
            {"provider_calls", solver_stats.provider_calls + para_stats.provider_calls},
            {"samples_generated",
             solver_stats.samples_generated + para_stats.samples_generated},
            {"cache_hits", solver_stats.cache_hits + para_stats.cache_hits}};
}

// Shared load for report commands operating on finished runs.
struct LoadedRun {
    json manifest;
    json distributions;
};

LoadedRun load_run(const std::string& run_dir) {
    LoadedRun run;
    try {
        run.manifest = json::parse(read_file(fs::path(run_dir) / "manifest.json"));
        run.distributions = json::parse(read_file(fs::path(run_dir) / "distributions.json"));
    } catch (const json::exception& ex) {
        throw ValidationError(run_dir + ": malformed run artifacts: " + ex.what());
    }
    return run;
}

} // namespace

GatewayPair build_gateways(const RunConfig& config) {
    GatewayPair pair;
    pair.cache = std::make_shared<SampleCache>(config.cache_dir);
    GatewayOptions options;
    options.max_in_flight = config.max_in_flight;
    options.network_disabled = config.network_disabled;
    pair.solver =
        std::make_unique<Gateway>(make_provider(config.solver_provider), pair.cache, options);
    pair.paraphraser =
        std::make_unique<Gateway>(make_provider(config.paraphraser_provider), pair.cache, options);
    return pair;
}

RunLock::RunLock(const fs::path& run_dir) : lock_path_(run_dir / ".lock") {
    int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw StateError("run directory is locked by another process: " +
                             lock_path_.string());
        throw IoError("cannot create lock file: " + lock_path_.string());
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    ssize_t written = ::write(fd, pid.data(), pid.size());
    (void)written;
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

json run_paraphrase(const RunConfig& config) {
    if (config.dataset_path.empty()) throw ConfigError("config: dataset.path is required");
    std::vector<Problem> problems =
        load_dataset(config.dataset_path, config.dataset_limit, config.sample_seed);
    std::string dataset_digest = sha256_file(config.dataset_path);

    std::vector<ParaphraseExemplar> icl_exemplars;
    if (config.scheme == "scop_icl") {
        if (config.exemplar_file.empty())
            throw ConfigError("config: scheme scop_icl requires run.exemplar_file");
        icl_exemplars = load_paraphrase_exemplars(config.exemplar_file);
    }

    json manifest = build_manifest(config, dataset_digest);
    std::string run_id = config.run_id.empty() ? derive_run_id(manifest) : config.run_id;
    manifest["run_id"] = run_id;

    RunPaths paths(fs::path(config.runs_dir) / run_id);
    ensure_directory(paths.dir);
    RunLock lock(paths.dir);

    GatewayPair gateways = build_gateways(config);
    std::vector<ProblemRecord> records;
    for (const auto& problem : problems) {
        ProblemRecord record;
        record.problem = problem;
        for (auto& form : make_forms(config, *gateways.paraphraser, problem, icl_exemplars)) {
            FormResult fr;
            fr.form = std::move(form);
            record.outcome.per_form.push_back(std::move(fr));
        }
        records.push_back(std::move(record));
    }

    atomic_write_file(paths.manifest, manifest.dump(2) + "\n");
    write_forms_file(paths, records);

    std::size_t n_forms = 0;
    for (const auto& record : records) n_forms += record.outcome.per_form.size();
    return {{"run_id", run_id},
            {"run_dir", paths.dir.string()},
            {"n_problems", problems.size()},
            {"n_forms", n_forms}};
}

json run_solve(const RunConfig& config) {
    if (config.dataset_path.empty()) throw ConfigError("config: dataset.path is required");
    std::vector<Problem> problems =
        load_dataset(config.dataset_path, config.dataset_limit, config.sample_seed);
    std::string dataset_digest = sha256_file(config.dataset_path);

    std::vector<ParaphraseExemplar> icl_exemplars;
    if (config.scheme == "scop_icl") {
        if (config.exemplar_file.empty())
            throw ConfigError("config: scheme scop_icl requires run.exemplar_file");
        icl_exemplars = load_paraphrase_exemplars(config.exemplar_file);
    }
    SolverSettings solver_settings = config.solver;
    solver_settings.cot_exemplars = load_cot_if_needed(config);

    json manifest = build_manifest(config, dataset_digest);
    std::string run_id = config.run_id.empty() ? derive_run_id(manifest) : config.run_id;
    manifest["run_id"] = run_id;

    RunPaths paths(fs::path(config.runs_dir) / run_id);
    ensure_directory(paths.dir);
    RunLock lock(paths.dir);

    GatewayPair gateways = build_gateways(config);
    std::vector<ProblemRecord> records;
    for (const auto& problem : problems) {
        ProblemRecord record;
        record.problem = problem;
        std::vector<SurfaceForm> forms =
            make_forms(config, *gateways.paraphraser, problem, icl_exemplars);
        record.outcome =
            scop_solve(*gateways.solver, problem, forms, config.n_total, solver_settings);
        records.push_back(std::move(record));
    }

    BaselineInfo baseline;
    bool have_baseline = false;
    if (!config.baseline_run.empty()) {
        baseline = load_baseline(config.baseline_run);
        have_baseline = true;
    }

    atomic_write_file(paths.manifest, manifest.dump(2) + "\n");
    write_forms_file(paths, records);
    write_samples_file(paths, records);
    json metrics_doc =
        write_reports(paths, config.scheme, config.k, config.n_total, config.baseline_run,
                      records, have_baseline ? &baseline : nullptr);
    return run_summary(run_id, paths, metrics_doc, gateways);
}

json recompute_metrics(const std::string& run_dir, const std::string& baseline_run) {
    RunPaths paths((fs::path(run_dir)));
    json manifest;
    try {
        manifest = json::parse(read_file(paths.manifest));
    } catch (const json::exception& ex) {
        throw ValidationError(paths.manifest.string() + ": malformed manifest: " + ex.what());
    }

    std::string dataset_path = manifest.at("dataset").at("path").get<std::string>();
    std::optional<std::size_t> limit;
    if (!manifest.at("dataset").at("limit").is_null())
        limit = manifest.at("dataset").at("limit").get<std::size_t>();
    std::uint64_t sample_seed = manifest.at("dataset").at("sample_seed").get<std::uint64_t>();
    if (sha256_file(dataset_path) != manifest.at("dataset").at("digest").get<std::string>())
        throw ValidationError("dataset file changed since the run was recorded: " + dataset_path);
    std::vector<Problem> problems = load_dataset(dataset_path, limit, sample_seed);

    // Surface forms in recorded order, grouped per problem.
    std::map<std::string, std::vector<SurfaceForm>> forms_by_problem;
    for_each_jsonl(paths.forms, [&](std::size_t, const json& row) {
        SurfaceForm form;
        form.form_id = row.at("form_id").get<std::string>();
        form.problem_id = row.at("problem_id").get<std::string>();
        form.text = row.at("text").get<std::string>();
        form.options_block = row.at("options_block").get<std::string>();
        form.origin = form_origin_from_string(row.at("origin").get<std::string>());
        form.paraphraser_model = row.at("paraphraser_model").get<std::string>();
        forms_by_problem[form.problem_id].push_back(std::move(form));
    });

    std::map<std::string, std::vector<std::pair<int, std::string>>> samples_by_form;
    for_each_jsonl(paths.samples, [&](std::size_t, const json& row) {
        samples_by_form[row.at("form_id").get<std::string>()].emplace_back(
            row.at("sample_index").get<int>(), row.at("raw_text").get<std::string>());
    });

    std::vector<ProblemRecord> records;
    for (const auto& problem : problems) {
        auto forms_it = forms_by_problem.find(problem.id);
        if (forms_it == forms_by_problem.end())
            throw ValidationError("run has no recorded forms for problem " + problem.id);
        ProblemRecord record;
        record.problem = problem;
        std::vector<ReasoningSample> pooled;
        for (const auto& form : forms_it->second) {
            auto samples_it = samples_by_form.find(form.form_id);
            if (samples_it == samples_by_form.end())
                throw ValidationError("run has no recorded samples for form " + form.form_id);
            FormResult fr;
            fr.form = form;
            for (const auto& [index, raw_text] : samples_it->second) {
                ReasoningSample sample;
                sample.form_id = form.form_id;
                sample.sample_index = index;
                sample.raw_text = raw_text;
                sample.answer = extract(raw_text, problem.format());
                pooled.push_back(sample);
                fr.samples.push_back(std::move(sample));
            }
            fr.distribution = build_distribution(fr.samples);
            record.outcome.per_form.push_back(std::move(fr));
        }
        record.outcome.pooled = build_distribution(pooled);
        record.outcome.final_answer = majority_vote(record.outcome.pooled);
        records.push_back(std::move(record));
    }

    std::string effective_baseline = baseline_run;
    if (effective_baseline.empty() && !manifest.at("baseline_run").is_null())
        effective_baseline = manifest.at("baseline_run").get<std::string>();
    BaselineInfo baseline;
    bool have_baseline = false;
    if (!effective_baseline.empty()) {
        baseline = load_baseline(effective_baseline);
        have_baseline = true;
    }

    return write_reports(paths, manifest.at("scheme").get<std::string>(),
                         manifest.at("k").get<int>(), manifest.at("n_total").get<int>(),
                         effective_baseline, records, have_baseline ? &baseline : nullptr);
}

json vov_report(const std::string& run_dir, const std::string& baseline_run) {
    LoadedRun run = load_run(run_dir);
    std::string effective_baseline = baseline_run;
    if (effective_baseline.empty() && !run.manifest.at("baseline_run").is_null())
        effective_baseline = run.manifest.at("baseline_run").get<std::string>();
    BaselineInfo baseline;
    bool have_baseline = false;
    if (!effective_baseline.empty()) {
        baseline = load_baseline(effective_baseline);
        have_baseline = true;
    }

    SolveRateTable table;
    for (const auto& problem : run.distributions.at("problems")) {
        std::string id = problem.at("problem_id").get<std::string>();
        SolveRateRow row;
        bool have_original = false;
        for (const auto& form : problem.at("forms")) {
            double sr = form.at("solve_rate").get<double>();
            if (form.at("origin").get<std::string>() == "original") {
                row.original_sr = sr;
                have_original = true;
            } else {
                row.paraphrase_srs.push_back(sr);
            }
        }
        if (!have_original) {
            if (!have_baseline)
                throw ValidationError(
                    "run has no original-form solve rates; pass a baseline run");
            auto it = baseline.sr.find(id);
            if (it == baseline.sr.end())
                throw ValidationError("baseline run is missing problem " + id);
            row.original_sr = it->second;
        }
        if (row.paraphrase_srs.empty())
            throw ValidationError("problem " + id +
                                  " has no paraphrase forms; vov needs a paraphrased run");
        table[id] = std::move(row);
    }
    VovResult v = vov(table);
    return {{"run_dir", run_dir},
            {"baseline_run", effective_baseline.empty() ? json(nullptr) : json(effective_baseline)},
            {"n_problems", table.size()},
            {"vov", v.vov},
            {"std_percent", v.std_percent},
            {"mean_row_std_percent", v.mean_row_std_percent}};
}

json difficulty_map_report(const std::string& baseline_run, const std::string& run_dir) {
    BaselineInfo before_info = load_baseline(baseline_run);
    LoadedRun run = load_run(run_dir);

    std::map<std::string, SrEntropy> before;
    std::map<std::string, SrEntropy> after;
    int skipped = 0;
    for (const auto& problem : run.distributions.at("problems")) {
        std::string id = problem.at("problem_id").get<std::string>();
        const auto& pooled = problem.at("pooled");
        auto sr_it = before_info.sr.find(id);
        if (sr_it == before_info.sr.end())
            throw ValidationError("baseline run is missing problem " + id);
        auto ent_it = before_info.entropy.find(id);
        if (ent_it == before_info.entropy.end() || pooled.at("entropy").is_null()) {
            ++skipped;
            continue;
        }
        before[id] = {sr_it->second, ent_it->second};
        after[id] = {pooled.at("solve_rate").get<double>(), pooled.at("entropy").get<double>()};
    }
    if (before.empty()) throw ValidationError("no problems with defined entropy on both runs");

    std::vector<DifficultyPoint> points = difficulty_map(before, after);
    json points_json = json::array();
    json counts = {{"improvement", 0}, {"overconfidence", 0}, {"uncertainty", 0}, {"neutral", 0}};
    for (const auto& p : points) {
        points_json.push_back({{"problem_id", p.problem_id},
                               {"sr_before", p.sr_before},
                               {"entropy_before", p.entropy_before},
                               {"sr_after", p.sr_after},
                               {"entropy_after", p.entropy_after},
                               {"class", to_string(p.cls)}});
        counts[to_string(p.cls)] = counts[to_string(p.cls)].get<int>() + 1;
    }
    fs::path charts_dir = fs::path(run_dir) / "charts";
    ensure_directory(charts_dir);
    atomic_write_file(charts_dir / "difficulty_map.svg", render_difficulty_map_svg(points));

    return {{"baseline_run", baseline_run},
            {"run_dir", run_dir},
            {"n_problems", points.size()},
            {"skipped_undefined_entropy", skipped},
            {"classes", std::move(counts)},
            {"points", std::move(points_json)}};
}

json agreement_report(const std::vector<std::string>& run_dirs) {
    if (run_dirs.size() < 2)
        throw ValidationError("agreement needs at least two runs");
    std::vector<std::map<std::string, double>> rates;
    for (const auto& dir : run_dirs) {
        LoadedRun run = load_run(dir);
        std::map<std::string, double> by_id;
        for (const auto& problem : run.distributions.at("problems"))
            by_id[problem.at("problem_id").get<std::string>()] =
                problem.at("pooled").at("solve_rate").get<double>();
        rates.push_back(std::move(by_id));
    }
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (rates[i].size() != rates[0].size())
            throw ValidationError("runs cover different problem sets");
        for (const auto& [id, sr] : rates[0])
            if (!rates[i].count(id))
                throw ValidationError("run " + run_dirs[i] + " is missing problem " + id);
    }

    std::vector<std::vector<double>> vectors;
    for (const auto& by_id : rates) {
        std::vector<double> v;
        v.reserve(by_id.size());
        for (const auto& [id, sr] : by_id) v.push_back(sr);  // sorted by id
        vectors.push_back(std::move(v));
    }

    json pairs = json::array();
    for (std::size_t a = 0; a < vectors.size(); ++a) {
        for (std::size_t b = a + 1; b < vectors.size(); ++b) {
            SpearmanResult r = spearman(vectors[a], vectors[b]);
            json entry = {{"a", run_dirs[a]}, {"b", run_dirs[b]}, {"defined", r.defined},
                          {"stars", r.stars}};
            entry["rho"] = r.defined ? json(r.rho) : json(nullptr);
            entry["p_value"] = r.defined ? json(r.p_value) : json(nullptr);
            pairs.push_back(std::move(entry));
        }
    }
    return {{"runs", run_dirs}, {"n_problems", rates[0].size()}, {"pairs", std::move(pairs)}};
}

json run_search(const RunConfig& config) {
    if (config.dataset_path.empty()) throw ConfigError("config: dataset.path is required");
    std::vector<Problem> train =
        load_dataset(config.dataset_path, config.dataset_limit, config.sample_seed);
    GatewayPair gateways = build_gateways(config);

    SearchTrace trace =
        search_exemplars(*gateways.solver, *gateways.paraphraser, train, config.search);

    fs::path output(config.search_output_file);
    if (output.has_parent_path()) ensure_directory(output.parent_path());
    save_paraphrase_exemplars(output, trace.found);

    json steps = json::array();
    for (const auto& step : trace.steps) {
        json candidates = json::array();
        for (const auto& c : step.candidates)
            candidates.push_back({{"paraphrase", c.paraphrase_text},
                                  {"solve_rate", c.solve_rate},
                                  {"accepted", c.accepted}});
        steps.push_back({{"problem_id", step.problem_id},
                         {"sr_original", step.sr_original},
                         {"found", step.found},
                         {"candidates", std::move(candidates)}});
    }
    json trace_json = {{"steps_consumed", trace.steps_consumed},
                       {"problems_sampled_per_exemplar", trace.problems_sampled_per_exemplar},
                       {"n_found", trace.found.size()},
                       {"exhausted", trace.exhausted},
                       {"warning", trace.warning},
                       {"steps", std::move(steps)}};
    fs::path trace_path = output;
    trace_path.replace_extension(".trace.json");
    atomic_write_file(trace_path, trace_json.dump(2) + "\n");
    fs::path chart_path = output;
    chart_path.replace_extension(".cost.svg");
    atomic_write_file(chart_path, render_search_cost_svg(trace));

    return {{"exemplar_file", output.string()},
            {"trace_file", trace_path.string()},
            {"chart_file", chart_path.string()},
            {"n_found", trace.found.size()},
            {"steps_consumed", trace.steps_consumed},
            {"problems_sampled_per_exemplar", trace.problems_sampled_per_exemplar},
            {"exhausted", trace.exhausted},
            {"warning", trace.warning}};
}

json run_ape(const RunConfig& config) {
    if (config.dataset_path.empty()) throw ConfigError("config: dataset.path is required");
    std::vector<Problem> dev =
        load_dataset(config.dataset_path, config.dataset_limit, config.sample_seed);

    std::vector<std::pair<std::string, std::string>> pairs;
    if (!config.ape_pairs_file.empty()) {
        for_each_jsonl(config.ape_pairs_file, [&](std::size_t line_no, const json& row) {
            try {
                pairs.emplace_back(row.at("input").get<std::string>(),
                                   row.at("output").get<std::string>());
            } catch (const json::exception& ex) {
                throw ValidationError(config.ape_pairs_file + ":" + std::to_string(line_no) +
                                      ": bad pair record: " + ex.what());
            }
        });
    } else if (!config.exemplar_file.empty()) {
        for (const auto& e : load_paraphrase_exemplars(config.exemplar_file))
            pairs.emplace_back(e.input_problem, e.output_paraphrase);
    } else {
        throw ConfigError("config: instruction search requires ape.pairs_file or run.exemplar_file");
    }

    GatewayPair gateways = build_gateways(config);
    ApeResult result = ape_search(*gateways.solver, *gateways.paraphraser, dev, pairs, config.ape);

    json scores = json::array();
    for (const auto& s : result.scores)
        scores.push_back({{"instruction", s.instruction}, {"mean_change", s.mean_change}});
    return {{"best_instruction", result.best_instruction},
            {"best_mean_change", result.best_mean_change},
            {"scores", std::move(scores)}};
}

json run_probe(const RunConfig& config) {
    GatewayPair gateways = build_gateways(config);
    auto report_json = [](const HealthReport& r) {
        return json{{"healthy", r.healthy},
                    {"provider", r.provider},
                    {"model", r.model},
                    {"latency_ms", r.latency_ms},
                    {"detail", r.detail}};
    };
    HealthReport solver = gateways.solver->probe();
    HealthReport paraphraser = gateways.paraphraser->probe();
    return {{"healthy", solver.healthy && paraphraser.healthy},
            {"solver", report_json(solver)},
            {"paraphraser", report_json(paraphraser)}};
}

} // namespace scop
