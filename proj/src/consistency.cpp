#include "scop/consistency.hpp"

#include "scop/errors.hpp"

namespace scop {

std::vector<int> split_budget(int n_total, int k) {
    if (k < 1) throw ValidationError("split_budget: k must be >= 1");
    if (k > n_total)
        throw ValidationError("split_budget: k (" + std::to_string(k) + ") exceeds budget (" +
                              std::to_string(n_total) + ")");
    std::vector<int> counts(static_cast<std::size_t>(k), n_total / k);
    for (int i = 0; i < n_total % k; ++i) counts[static_cast<std::size_t>(i)] += 1;
    return counts;
}

AnswerDistribution build_distribution(const std::vector<ReasoningSample>& samples) {
    AnswerDistribution dist;
    dist.n_total = static_cast<int>(samples.size());
    for (const auto& sample : samples) {
        if (sample.answer.kind == AnswerKind::none) {
            dist.n_none += 1;
            continue;
        }
        dist.buckets[sample.answer.value] += 1;
        dist.kind = sample.answer.kind;
    }
    return dist;
}

AnswerDistribution merge_distributions(const std::vector<AnswerDistribution>& parts) {
    AnswerDistribution merged;
    for (const auto& part : parts) {
        merged.n_total += part.n_total;
        merged.n_none += part.n_none;
        for (const auto& [value, count] : part.buckets) merged.buckets[value] += count;
        if (part.kind != AnswerKind::none) merged.kind = part.kind;
    }
    return merged;
}

CanonicalAnswer majority_vote(const AnswerDistribution& dist) {
    if (dist.n_total == 0) throw ValidationError("majority_vote: empty distribution");
    if (dist.buckets.empty()) return CanonicalAnswer::none();
    // buckets is ordered by value, so the first maximal count is also the
    // lexicographically smallest tied value.
    const std::string* best = nullptr;
    int best_count = 0;
    for (const auto& [value, count] : dist.buckets) {
        if (count > best_count) {
            best = &value;
            best_count = count;
        }
    }
    return {dist.kind, *best};
}

double solve_rate(const AnswerDistribution& dist, const CanonicalAnswer& gold) {
    if (dist.n_total == 0) throw ValidationError("solve_rate: empty distribution");
    if (gold.kind == AnswerKind::none) throw ValidationError("solve_rate: gold answer is none");
    auto it = dist.buckets.find(gold.value);
    int correct = it == dist.buckets.end() ? 0 : it->second;
    return static_cast<double>(correct) / static_cast<double>(dist.n_total);
}

SolveOutcome scop_solve(Gateway& gateway, const Problem& problem,
                        const std::vector<SurfaceForm>& forms, int n_total,
                        const SolverSettings& settings) {
    if (forms.empty()) throw ValidationError("scop_solve: no surface forms");
    std::vector<int> counts = split_budget(n_total, static_cast<int>(forms.size()));

    SolveOutcome outcome;
    std::vector<ReasoningSample> pooled_samples;
    pooled_samples.reserve(static_cast<std::size_t>(n_total));
    for (std::size_t i = 0; i < forms.size(); ++i) {
        const SurfaceForm& form = forms[i];
        CompletionRequest request;
        request.model = settings.model;
        request.system_prompt = settings.system_prompt;
        request.user_prompt = build_solver_prompt(form, settings.mode, settings.cot_exemplars,
                                                  settings.expected_shots);
        request.temperature = settings.temperature;
        request.top_p = settings.top_p;
        request.n_samples = counts[i];
        request.max_tokens = settings.max_tokens;
        CompletionResult result = gateway.complete(request);

        FormResult form_result;
        form_result.form = form;
        for (int j = 0; j < counts[i]; ++j) {
            ReasoningSample sample;
            sample.form_id = form.form_id;
            sample.sample_index = j;
            sample.raw_text = result.texts[static_cast<std::size_t>(j)];
            sample.answer = extract(sample.raw_text, problem.format());
            pooled_samples.push_back(sample);
            form_result.samples.push_back(std::move(sample));
        }
        form_result.distribution = build_distribution(form_result.samples);
        outcome.per_form.push_back(std::move(form_result));
    }
    outcome.pooled = build_distribution(pooled_samples);
    outcome.final_answer = majority_vote(outcome.pooled);
    return outcome;
}

double measure_solve_rate(Gateway& gateway, const Problem& problem, const SurfaceForm& form,
                          int n_paths, const SolverSettings& settings,
                          AnswerDistribution* distribution_out) {
    SolveOutcome outcome = scop_solve(gateway, problem, {form}, n_paths, settings);
    if (distribution_out) *distribution_out = outcome.pooled;
    return solve_rate(outcome.pooled, problem.gold());
}

SurfaceForm original_form(const Problem& problem) {
    SurfaceForm form;
    form.form_id = problem.id + "#original";
    form.problem_id = problem.id;
    form.text = problem.question;
    if (!problem.options.empty()) form.options_block = render_options(problem);
    form.origin = FormOrigin::original;
    return form;
}

} // namespace scop
