#include "scop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/distributions/students_t.hpp>

#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

double population_variance(const std::vector<double>& values) {
    // All-equal rows short-circuit so constant tables report exactly zero.
    bool constant = true;
    for (double v : values)
        if (v != values.front()) constant = false;
    if (constant) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return var / static_cast<double>(values.size());
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y, bool& defined) {
    double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        defined = false;
        return 0.0;
    }
    defined = true;
    return sxy / std::sqrt(sxx * syy);
}

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y, bool& defined) {
    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);
    return pearson(rx, ry, defined);
}

} // namespace

double entropy_bits(const AnswerDistribution& dist) {
    if (dist.n_total == 0) throw ValidationError("entropy: empty distribution");
    int parseable = dist.n_total - dist.n_none;
    if (parseable == 0) throw ValidationError("entropy: all samples unparseable");
    double h = 0.0;
    for (const auto& [value, count] : dist.buckets) {
        double p = static_cast<double>(count) / static_cast<double>(parseable);
        h -= p * std::log2(p);
    }
    return h == 0.0 ? 0.0 : h;
}

VovResult vov(const SolveRateTable& table) {
    if (table.empty()) throw ValidationError("vov: empty table");
    double var_sum = 0.0;
    double std_sum = 0.0;
    for (const auto& [id, row] : table) {
        std::vector<double> values;
        values.push_back(row.original_sr);
        values.insert(values.end(), row.paraphrase_srs.begin(), row.paraphrase_srs.end());
        if (values.size() < 2)
            throw ValidationError("vov: problem " + id + " has fewer than 2 solve rates");
        for (double v : values)
            if (v < 0.0 || v > 1.0)
                throw ValidationError("vov: solve rate out of [0,1] for problem " + id);
        double var = population_variance(values);
        var_sum += var;
        std_sum += std::sqrt(var);
    }
    double n = static_cast<double>(table.size());
    VovResult out;
    out.vov = var_sum == 0.0 ? 0.0 : var_sum / n;
    out.std_percent = std::sqrt(out.vov) * 100.0;
    out.mean_row_std_percent = (std_sum / n) * 100.0;
    return out;
}

AccuracyReport accuracy_report(const std::vector<AccuracyInput>& results) {
    if (results.empty()) throw ValidationError("accuracy_report: no results");
    AccuracyReport report;
    report.n_problems = static_cast<int>(results.size());
    report.baseline_available = true;
    int correct = 0;
    int hard = 0;
    int hard_correct = 0;
    for (const auto& r : results) {
        if (r.correct) ++correct;
        if (!r.original_sr) {
            report.baseline_available = false;
            continue;
        }
        if (*r.original_sr < 0.0 || *r.original_sr > 1.0)
            throw ValidationError("accuracy_report: solve rate out of [0,1] for problem " +
                                  r.problem_id);
        if (*r.original_sr <= 0.5) {
            ++hard;
            if (r.correct) ++hard_correct;
        }
    }
    report.global_accuracy = static_cast<double>(correct) / static_cast<double>(results.size());
    if (report.baseline_available) {
        report.n_hard = hard;
        report.hpr = static_cast<double>(hard) / static_cast<double>(results.size());
        if (hard > 0)
            report.hard_accuracy = static_cast<double>(hard_correct) / static_cast<double>(hard);
    }
    return report;
}

std::string render_accuracy(const AccuracyReport& report) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", report.global_accuracy * 100.0);
    std::string out = buf;
    if (report.hard_accuracy) {
        std::snprintf(buf, sizeof(buf), " (%.1f)", *report.hard_accuracy * 100.0);
        out += buf;
    } else {
        out += " (n/a)";
    }
    return out;
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
    if (x.size() < 3) throw ValidationError("spearman: need at least 3 points");
    SpearmanResult result;
    result.n = static_cast<int>(x.size());
    result.rho = spearman_rho(x, y, result.defined);
    if (!result.defined) {
        result.stars = "n/a";
        return result;
    }
    if (std::abs(result.rho) >= 1.0 - 1e-15) {
        result.p_value = 0.0;
    } else {
        double df = static_cast<double>(result.n - 2);
        double t = result.rho * std::sqrt(df / (1.0 - result.rho * result.rho));
        boost::math::students_t dist(df);
        result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    }
    result.stars = significance_stars(result.p_value);
    return result;
}

double spearman_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                              int n_shuffles, std::uint64_t seed) {
    if (n_shuffles < 1) throw ValidationError("permutation test: n_shuffles must be >= 1");
    bool defined = false;
    double observed = std::abs(spearman_rho(x, y, defined));
    if (!defined) throw ValidationError("permutation test: constant input");
    DeterministicRng rng(seed);
    std::vector<double> shuffled = y;
    int at_least = 0;
    for (int s = 0; s < n_shuffles; ++s) {
        rng.shuffle(shuffled);
        bool perm_defined = false;
        double rho = std::abs(spearman_rho(x, shuffled, perm_defined));
        if (perm_defined && rho >= observed - 1e-12) ++at_least;
    }
    return static_cast<double>(at_least + 1) / static_cast<double>(n_shuffles + 1);
}

DeltaHistogram delta_histogram(const SolveRateTable& table, int n_bins) {
    if (table.empty()) throw ValidationError("delta_histogram: empty table");
    if (n_bins < 1) throw ValidationError("delta_histogram: n_bins must be >= 1");
    DeltaHistogram hist;
    hist.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i)
        hist.edges[static_cast<std::size_t>(i)] =
            -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n_bins);
    hist.counts.assign(static_cast<std::size_t>(n_bins), 0);

    int upper = 0;
    int lower = 0;
    for (const auto& [id, row] : table) {
        if (row.paraphrase_srs.empty())
            throw ValidationError("delta_histogram: problem " + id + " has no paraphrase rates");
        for (double sr : row.paraphrase_srs) {
            double delta = sr - row.original_sr;
            int bin = static_cast<int>(std::floor((delta + 1.0) / 2.0 * n_bins));
            bin = std::clamp(bin, 0, n_bins - 1);
            hist.counts[static_cast<std::size_t>(bin)] += 1;
            hist.n_pairs += 1;
            if (delta > 0.25) ++upper;
            if (delta < -0.25) ++lower;
        }
    }
    hist.upper_tail = static_cast<double>(upper) / static_cast<double>(hist.n_pairs);
    hist.lower_tail = static_cast<double>(lower) / static_cast<double>(hist.n_pairs);
    return hist;
}

std::string to_string(DifficultyClass cls) {
    switch (cls) {
        case DifficultyClass::improvement: return "improvement";
        case DifficultyClass::overconfidence: return "overconfidence";
        case DifficultyClass::uncertainty: return "uncertainty";
        case DifficultyClass::neutral: return "neutral";
    }
    return "neutral";
}

std::vector<DifficultyPoint> difficulty_map(const std::map<std::string, SrEntropy>& before,
                                            const std::map<std::string, SrEntropy>& after) {
    if (before.size() != after.size())
        throw ValidationError("difficulty_map: before/after problem sets differ in size");
    std::vector<DifficultyPoint> points;
    points.reserve(before.size());
    for (const auto& [id, b] : before) {
        auto it = after.find(id);
        if (it == after.end())
            throw ValidationError("difficulty_map: problem " + id + " missing from after set");
        const SrEntropy& a = it->second;
        DifficultyPoint point;
        point.problem_id = id;
        point.sr_before = b.sr;
        point.entropy_before = b.entropy;
        point.sr_after = a.sr;
        point.entropy_after = a.entropy;
        if (a.sr > b.sr) {
            point.cls = DifficultyClass::improvement;
        } else if (a.sr < b.sr && a.entropy > b.entropy) {
            point.cls = DifficultyClass::uncertainty;
        } else if (a.sr < b.sr && a.entropy < b.entropy) {
            point.cls = DifficultyClass::overconfidence;
        } else {
            point.cls = DifficultyClass::neutral;
        }
        points.push_back(std::move(point));
    }
    return points;
}

} // namespace scop
