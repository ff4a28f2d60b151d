#include "scop/exemplar_search.hpp"

#include <algorithm>

#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

int gold_count(const AnswerDistribution& dist, const CanonicalAnswer& gold) {
    auto it = dist.buckets.find(gold.value);
    return it == dist.buckets.end() ? 0 : it->second;
}

// Acceptance is decided on sample counts, not on rate doubles, so margins
// like 0.3 over 40 paths behave exactly at the boundary.
bool clears_margin(int count_after, int count_before, double margin, int n_paths) {
    return static_cast<double>(count_after - count_before) >=
           margin * static_cast<double>(n_paths) - 1e-9;
}

std::vector<std::string> generate_paraphrases(Gateway& gateway, const SurfaceForm& form,
                                              const std::string& model, double temperature,
                                              int max_tokens, int k) {
    CompletionRequest request;
    request.model = model;
    request.user_prompt = build_naive_paraphrase_prompt(form);
    request.temperature = temperature;
    request.n_samples = k;
    request.max_tokens = max_tokens;
    CompletionResult result = gateway.complete(request);
    std::vector<std::string> cleaned;
    cleaned.reserve(result.texts.size());
    for (const auto& text : result.texts) cleaned.push_back(clean_paraphrase_response(text));
    return cleaned;
}

void validate_search_config(const SearchConfig& config, std::size_t train_size) {
    if (config.n_shot < 1) throw ValidationError("search: n_shot must be >= 1");
    if (config.margin < 0.0 || config.margin > 1.0)
        throw ValidationError("search: margin must be in [0,1]");
    if (config.k_per_problem < 1) throw ValidationError("search: k_per_problem must be >= 1");
    if (config.n_paths < 1) throw ValidationError("search: n_paths must be >= 1");
    if (config.max_steps > 0 && config.n_shot > config.max_steps)
        throw ValidationError("search: n_shot exceeds max_steps");
    if (train_size == 0) throw ValidationError("search: empty training set");
}

} // namespace

SearchTrace search_exemplars(Gateway& solver_gateway, Gateway& paraphraser_gateway,
                             const std::vector<Problem>& train, const SearchConfig& config) {
    validate_search_config(config, train.size());

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    DeterministicRng rng(config.seed);
    rng.shuffle(order);

    int max_steps = config.max_steps > 0
                        ? std::min<int>(config.max_steps, static_cast<int>(train.size()))
                        : static_cast<int>(train.size());

    SearchTrace trace;
    int steps_since_last_find = 0;
    for (int t = 0; t < max_steps; ++t) {
        if (static_cast<int>(trace.found.size()) == config.n_shot) break;
        const Problem& problem = train[order[static_cast<std::size_t>(t)]];
        trace.steps_consumed += 1;
        steps_since_last_find += 1;

        SearchStep step;
        step.problem_id = problem.id;
        SurfaceForm original = original_form(problem);
        AnswerDistribution original_dist;
        step.sr_original = measure_solve_rate(solver_gateway, problem, original, config.n_paths,
                                              config.solver, &original_dist);
        int count_before = gold_count(original_dist, problem.gold());

        std::vector<std::string> paraphrases = generate_paraphrases(
            paraphraser_gateway, original, config.paraphraser_model,
            config.paraphrase_temperature, config.paraphrase_max_tokens, config.k_per_problem);

        for (std::size_t k = 0; k < paraphrases.size(); ++k) {
            CandidateEval eval;
            eval.paraphrase_text = paraphrases[k];
            if (eval.paraphrase_text.empty()) {
                step.candidates.push_back(std::move(eval));
                continue;
            }
            SurfaceForm candidate;
            candidate.form_id =
                problem.id + "#search-" + std::to_string(t) + "-" + std::to_string(k);
            candidate.problem_id = problem.id;
            candidate.text = eval.paraphrase_text;
            candidate.options_block = original.options_block;
            candidate.origin = FormOrigin::naive_paraphrase;
            candidate.paraphraser_model = config.paraphraser_model;

            AnswerDistribution candidate_dist;
            eval.solve_rate = measure_solve_rate(solver_gateway, problem, candidate,
                                                 config.n_paths, config.solver, &candidate_dist);
            int count_after = gold_count(candidate_dist, problem.gold());
            eval.accepted =
                clears_margin(count_after, count_before, config.margin, config.n_paths);
            bool accepted = eval.accepted;
            if (accepted) {
                ParaphraseExemplar exemplar;
                exemplar.input_problem = problem.question;
                exemplar.output_paraphrase = eval.paraphrase_text;
                exemplar.provenance.dataset =
                    config.dataset_name.empty() ? problem.source : config.dataset_name;
                exemplar.provenance.problem_id = problem.id;
                exemplar.provenance.sr_before = step.sr_original;
                exemplar.provenance.sr_after = eval.solve_rate;
                exemplar.provenance.margin = config.margin;
                trace.found.push_back(std::move(exemplar));
                trace.problems_sampled_per_exemplar.push_back(steps_since_last_find);
                steps_since_last_find = 0;
                step.found = true;
            }
            step.candidates.push_back(std::move(eval));
            if (accepted) break;
        }
        trace.steps.push_back(std::move(step));
    }

    if (static_cast<int>(trace.found.size()) < config.n_shot) {
        trace.exhausted = true;
        trace.warning = "search stopped after " + std::to_string(trace.steps_consumed) +
                        " problems with " + std::to_string(trace.found.size()) + " of " +
                        std::to_string(config.n_shot) + " exemplars found";
    }
    return trace;
}

ApeResult ape_search(Gateway& solver_gateway, Gateway& paraphraser_gateway,
                     const std::vector<Problem>& dev,
                     const std::vector<std::pair<std::string, std::string>>& pairs,
                     const ApeConfig& config) {
    if (pairs.empty()) throw ValidationError("instruction search: no input/output pairs");
    if (config.c_candidates < 1)
        throw ValidationError("instruction search: c_candidates must be >= 1");
    if (config.batch_b < 1) throw ValidationError("instruction search: batch_b must be >= 1");
    if (config.epochs_e < 1) throw ValidationError("instruction search: epochs_e must be >= 1");
    if (dev.size() < static_cast<std::size_t>(config.batch_b))
        throw ValidationError("instruction search: development set smaller than batch_b");
    if (config.n_paths < 1) throw ValidationError("instruction search: n_paths must be >= 1");

    std::string induction_prompt = build_ape_induction_prompt(pairs);
    DeterministicRng rng(config.seed);

    ApeResult result;
    bool have_best = false;
    for (int epoch = 0; epoch < config.epochs_e; ++epoch) {
        CompletionRequest induction;
        induction.model = config.paraphraser_model;
        induction.user_prompt = induction_prompt;
        induction.temperature = config.induction_temperature;
        induction.n_samples = config.c_candidates;
        induction.max_tokens = config.paraphrase_max_tokens;
        induction.sample_index_base = epoch * config.c_candidates;
        CompletionResult induced = paraphraser_gateway.complete(induction);

        std::vector<std::string> candidates;
        for (const auto& text : induced.texts) {
            std::string instruction = trim(text);
            if (instruction.size() >= 2 && instruction.front() == '"' &&
                instruction.back() == '"')
                instruction = trim(instruction.substr(1, instruction.size() - 2));
            if (!instruction.empty()) candidates.push_back(std::move(instruction));
        }
        if (candidates.empty())
            throw StateError("instruction search: no candidate parseable from induction response");

        std::vector<std::size_t> batch(dev.size());
        for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
        rng.shuffle(batch);
        batch.resize(static_cast<std::size_t>(config.batch_b));

        // Original solve rates are candidate-independent; measure once per
        // epoch batch.
        std::vector<double> before(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const Problem& problem = dev[batch[i]];
            before[i] = measure_solve_rate(solver_gateway, problem, original_form(problem),
                                           config.n_paths, config.solver);
        }

        ApeScore epoch_best;
        bool have_epoch_best = false;
        for (const auto& instruction : candidates) {
            double total_change = 0.0;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const Problem& problem = dev[batch[i]];
                SurfaceForm original = original_form(problem);

                CompletionRequest request;
                request.model = config.paraphraser_model;
                request.user_prompt = build_instruction_paraphrase_prompt(instruction, original);
                request.temperature = config.paraphrase_temperature;
                request.n_samples = 1;
                request.max_tokens = config.paraphrase_max_tokens;
                std::string paraphrase =
                    clean_paraphrase_response(paraphraser_gateway.complete(request).texts[0]);

                double after = before[i];
                if (!paraphrase.empty()) {
                    SurfaceForm form;
                    form.form_id = problem.id + "#instr";
                    form.problem_id = problem.id;
                    form.text = paraphrase;
                    form.options_block = original.options_block;
                    form.origin = FormOrigin::naive_paraphrase;
                    form.paraphraser_model = config.paraphraser_model;
                    after = measure_solve_rate(solver_gateway, problem, form, config.n_paths,
                                               config.solver);
                }
                total_change += after - before[i];
            }
            ApeScore score{instruction, total_change / static_cast<double>(batch.size())};
            result.scores.push_back(score);
            if (!have_epoch_best || score.mean_change > epoch_best.mean_change) {
                epoch_best = score;
                have_epoch_best = true;
            }
        }
        if (!have_best || epoch_best.mean_change > result.best_mean_change) {
            result.best_instruction = epoch_best.instruction;
            result.best_mean_change = epoch_best.mean_change;
            have_best = true;
        }
    }
    return result;
}

} // namespace scop
