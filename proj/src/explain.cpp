#include "wsosvm/explain.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "wsosvm/dataset.hpp"
#include "wsosvm/rng.hpp"

namespace wsosvm::explain {

namespace {

std::size_t group_count_for(std::size_t dim, std::size_t group_size) {
    if (group_size == 0 || dim % group_size != 0)
        throw DataError("shap: feature length " + std::to_string(dim) +
                        " is not a multiple of the group size " +
                        std::to_string(group_size));
    return dim / group_size;
}

double factorial(std::size_t k) {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
}

}  // namespace

std::vector<double> shap_exact_groups(const ValueFn& value, const std::vector<double>& x,
                                      const std::vector<std::vector<double>>& background,
                                      std::size_t group_size) {
    if (background.empty()) throw DataError("shap: empty background set");
    const std::size_t dim = x.size();
    const std::size_t groups = group_count_for(dim, group_size);
    if (groups > 20) throw DataError("shap: too many groups for exact enumeration");
    for (const auto& b : background)
        if (b.size() != dim) throw DataError("shap: background length mismatch");

    // Coalition values v(S) for every bitmask, background-averaged.
    const std::size_t n_masks = std::size_t{1} << groups;
    std::vector<double> v(n_masks, 0.0);
    std::vector<double> z(dim);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double acc = 0.0;
        for (const auto& b : background) {
            for (std::size_t g = 0; g < groups; ++g) {
                const std::vector<double>& src = (mask >> g) & 1 ? x : b;
                std::copy(src.begin() + g * group_size,
                          src.begin() + (g + 1) * group_size, z.begin() + g * group_size);
            }
            acc += value(z);
        }
        v[mask] = acc / static_cast<double>(background.size());
    }

    const double total_perms = factorial(groups);
    std::vector<double> phi(groups, 0.0);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        std::size_t s = static_cast<std::size_t>(std::popcount(mask));
        for (std::size_t g = 0; g < groups; ++g) {
            if ((mask >> g) & 1) continue;
            double weight = factorial(s) * factorial(groups - s - 1) / total_perms;
            phi[g] += weight * (v[mask | (std::size_t{1} << g)] - v[mask]);
        }
    }
    return phi;
}

std::vector<double> shap_exact_groups(const wso::TrainedModel& model,
                                      const std::vector<double>& x,
                                      const std::vector<std::vector<double>>& background) {
    ValueFn value = [&model](const std::vector<double>& z) {
        return wso::decision_value(model, z);
    };
    constexpr std::size_t kGroupSize = 56;
    return shap_exact_groups(value, x, background, kGroupSize);
}

SampledFeatureResult shap_sampled_features(
    const ValueFn& value, const std::vector<double>& x,
    const std::vector<std::vector<double>>& background, std::size_t draws,
    std::uint64_t seed) {
    if (draws < 1) throw DataError("shap: draws must be >= 1");
    if (background.empty()) throw DataError("shap: empty background set");
    const std::size_t dim = x.size();

    std::vector<double> mean(dim, 0.0), m2(dim, 0.0);
    std::vector<std::size_t> order(dim);
    std::vector<double> z(dim);
    rng::Stream stream(seed, "explain/permutation-shap");
    double baseline = 0.0;

    for (std::size_t t = 0; t < draws; ++t) {
        const std::vector<double>& b =
            background[stream.next_below(background.size())];
        for (std::size_t i = 0; i < dim; ++i) order[i] = i;
        stream.shuffle(order);

        z = b;
        double prev = value(z);
        baseline += prev;
        for (std::size_t i : order) {
            z[i] = x[i];
            double next = value(z);
            double contribution = next - prev;
            prev = next;
            // Welford update for the running mean and variance.
            double delta = contribution - mean[i];
            mean[i] += delta / static_cast<double>(t + 1);
            m2[i] += delta * (contribution - mean[i]);
        }
    }

    SampledFeatureResult result;
    result.values = mean;
    result.baseline = baseline / static_cast<double>(draws);
    result.standard_error.assign(dim, 0.0);
    if (draws > 1)
        for (std::size_t i = 0; i < dim; ++i)
            result.standard_error[i] =
                std::sqrt(m2[i] / static_cast<double>(draws - 1) /
                          static_cast<double>(draws));
    return result;
}

SampledFeatureResult shap_sampled_features(
    const wso::TrainedModel& model, const std::vector<double>& x,
    const std::vector<std::vector<double>>& background, std::size_t draws,
    std::uint64_t seed) {
    ValueFn value = [&model](const std::vector<double>& z) {
        return wso::decision_value(model, z);
    };
    return shap_sampled_features(value, x, background, draws, seed);
}

std::vector<double> aggregate_to_contrast(const std::vector<double>& feature_values,
                                          std::size_t group_size) {
    const std::size_t groups = group_count_for(feature_values.size(), group_size);
    std::vector<double> out(groups, 0.0);
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t k = 0; k < group_size; ++k)
            out[g] += feature_values[g * group_size + k];
    return out;
}

ShapReport explain_samples(const wso::TrainedModel& model,
                           const std::vector<std::vector<double>>& samples,
                           const std::vector<std::vector<double>>& background,
                           const ExplainOptions& options) {
    if (samples.empty()) throw DataError("explain: no samples to attribute");
    if (background.empty()) throw DataError("explain: empty background set");
    constexpr std::size_t kGroupSize = 56;
    const std::size_t dim = model.dimension();
    const std::size_t groups = group_count_for(dim, kGroupSize);

    // Cap the background with a seeded subsample.
    std::vector<std::vector<double>> bg;
    if (background.size() > options.max_background) {
        rng::Stream stream(options.seed, "explain/background-subsample");
        for (std::size_t i :
             stream.sample_without_replacement(background.size(), options.max_background))
            bg.push_back(background[i]);
    } else {
        bg = background;
    }

    ShapReport report;
    report.mode = options.mode;
    report.background_count = bg.size();
    report.seed = options.seed;
    report.draws = options.mode == ShapMode::sampled_feature ? options.draws : 0;
    report.group_names = model.channel_names;
    if (report.group_names.size() != groups) {
        report.group_names.clear();
        for (std::size_t g = 0; g < groups; ++g)
            report.group_names.push_back("contrast" + std::to_string(g));
    }

    double baseline = 0.0;
    for (const auto& b : bg) baseline += wso::decision_value(model, b);
    report.baseline = baseline / static_cast<double>(bg.size());

    std::vector<double> agg_abs(groups, 0.0);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& x = samples[s];
        report.sample_h.push_back(wso::decision_value(model, x));
        std::vector<double> group_vals;
        if (options.mode == ShapMode::exact_group) {
            group_vals = shap_exact_groups(model, x, bg);
            for (std::size_t g = 0; g < groups; ++g) agg_abs[g] += std::abs(group_vals[g]);
        } else {
            auto sampled = shap_sampled_features(model, x, bg, options.draws,
                                                 options.seed + s);
            if (options.aggregation == Aggregation::sum_then_abs) {
                group_vals = aggregate_to_contrast(sampled.values, kGroupSize);
                for (std::size_t g = 0; g < groups; ++g)
                    agg_abs[g] += std::abs(group_vals[g]);
            } else {
                std::vector<double> abs_values(dim);
                for (std::size_t i = 0; i < dim; ++i)
                    abs_values[i] = std::abs(sampled.values[i]);
                group_vals = aggregate_to_contrast(sampled.values, kGroupSize);
                auto abs_agg = aggregate_to_contrast(abs_values, kGroupSize);
                for (std::size_t g = 0; g < groups; ++g) agg_abs[g] += abs_agg[g];
            }
        }
        report.group_values.push_back(std::move(group_vals));
    }
    report.contrast_mean_abs.resize(groups);
    for (std::size_t g = 0; g < groups; ++g)
        report.contrast_mean_abs[g] = agg_abs[g] / static_cast<double>(samples.size());
    return report;
}

void write_shap_report(const ShapReport& report, const std::filesystem::path& per_sample_csv,
                       const std::filesystem::path& contrast_summary_csv) {
    {
        std::ofstream out(per_sample_csv);
        if (!out) throw DataError("cannot open for writing: " + per_sample_csv.string());
        out << "# wsosvm-shap 1\n";
        out << "sample,h";
        for (const auto& name : report.group_names) out << "," << name;
        out << "\n";
        for (std::size_t s = 0; s < report.group_values.size(); ++s) {
            out << s << "," << dataset::format_double(report.sample_h[s]);
            for (double v : report.group_values[s])
                out << "," << dataset::format_double(v);
            out << "\n";
        }
    }
    {
        std::ofstream out(contrast_summary_csv);
        if (!out)
            throw DataError("cannot open for writing: " + contrast_summary_csv.string());
        out << "# wsosvm-shap-contrast 1\n";
        out << "contrast,mean_abs_shap\n";
        for (std::size_t g = 0; g < report.contrast_mean_abs.size(); ++g)
            out << report.group_names[g] << ","
                << dataset::format_double(report.contrast_mean_abs[g]) << "\n";
    }
}

}  // namespace wsosvm::explain
