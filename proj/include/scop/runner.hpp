#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scop/config.hpp"
#include "scop/gateway.hpp"

namespace scop {

/// Gateways for one experiment: solver and paraphraser may point at
/// different providers but always share one sample cache.
struct GatewayPair {
    std::shared_ptr<SampleCache> cache;
    std::unique_ptr<Gateway> solver;
    std::unique_ptr<Gateway> paraphraser;
};

GatewayPair build_gateways(const RunConfig& config);

/// Exclusive ownership of a run directory for the lifetime of the object.
class RunLock {
  public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    std::filesystem::path lock_path_;
};

/// Step 1 only: generate surface forms for every problem and persist them.
nlohmann::json run_paraphrase(const RunConfig& config);

/// Full experiment: forms, sampling, vote, metrics, artifacts.
nlohmann::json run_solve(const RunConfig& config);

/// Rebuild distributions/metrics/report/charts of an existing run from its
/// persisted samples; byte-identical to what the run wrote.
nlohmann::json recompute_metrics(const std::string& run_dir, const std::string& baseline_run);

/// Solve-rate variance over paraphrases (original rates from the baseline).
nlohmann::json vov_report(const std::string& run_dir, const std::string& baseline_run);

/// Before/after movement classification between a baseline run and a
/// paraphrased run; also writes the arrow chart into the run.
nlohmann::json difficulty_map_report(const std::string& baseline_run, const std::string& run_dir);

/// Pairwise rank agreement of per-problem solve rates across runs.
nlohmann::json agreement_report(const std::vector<std::string>& run_dirs);

/// Margin-gated exemplar search over the configured dataset; writes the
/// exemplar file, a trace JSON, and a cost chart.
nlohmann::json run_search(const RunConfig& config);

/// Instruction search over the configured dataset and pairs file.
nlohmann::json run_ape(const RunConfig& config);

/// Health checks of the configured providers.
nlohmann::json run_probe(const RunConfig& config);

} // namespace scop
