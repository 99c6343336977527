#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "wsosvm/wso.hpp"

namespace wsosvm::explain {

// Attribution target: the continuous decision value of a model, or any
// scalar function in tests.
using ValueFn = std::function<double(const std::vector<double>&)>;

struct SampledFeatureResult {
    std::vector<double> values;          // one Shapley estimate per feature
    std::vector<double> standard_error;  // Monte-Carlo SE per feature
    double baseline = 0.0;               // mean value over the drawn backgrounds
};

// Exact Shapley values over feature groups of size group_size: the value of
// a coalition replaces the complement's features with background values and
// averages the model output over the background set.
std::vector<double> shap_exact_groups(const ValueFn& value, const std::vector<double>& x,
                                      const std::vector<std::vector<double>>& background,
                                      std::size_t group_size);
std::vector<double> shap_exact_groups(const wso::TrainedModel& model,
                                      const std::vector<double>& x,
                                      const std::vector<std::vector<double>>& background);

// Permutation-sampling estimator of per-feature Shapley values: marginal
// contributions along seeded random feature orderings, each completed by a
// drawn background sample. Deterministic in the seed.
SampledFeatureResult shap_sampled_features(
    const ValueFn& value, const std::vector<double>& x,
    const std::vector<std::vector<double>>& background, std::size_t draws,
    std::uint64_t seed);
SampledFeatureResult shap_sampled_features(
    const wso::TrainedModel& model, const std::vector<double>& x,
    const std::vector<std::vector<double>>& background, std::size_t draws,
    std::uint64_t seed);

// Signed per-group sums of feature-level values.
std::vector<double> aggregate_to_contrast(const std::vector<double>& feature_values,
                                          std::size_t group_size);

enum class ShapMode { exact_group, sampled_feature };
enum class Aggregation { sum_then_abs, abs_then_sum };

struct ShapReport {
    ShapMode mode = ShapMode::exact_group;
    std::vector<std::string> group_names;
    std::vector<std::vector<double>> group_values;  // one row per sample
    std::vector<double> sample_h;                   // h(x) per sample
    std::vector<double> contrast_mean_abs;          // the Fig-6 bar statistic
    double baseline = 0.0;
    std::size_t background_count = 0;
    std::size_t draws = 0;
    std::uint64_t seed = 0;
};

struct ExplainOptions {
    ShapMode mode = ShapMode::exact_group;
    Aggregation aggregation = Aggregation::sum_then_abs;
    std::size_t draws = 2000;     // sampled-feature mode
    std::size_t max_background = 64;
    std::uint64_t seed = 0;
};

ShapReport explain_samples(const wso::TrainedModel& model,
                           const std::vector<std::vector<double>>& samples,
                           const std::vector<std::vector<double>>& background,
                           const ExplainOptions& options);

void write_shap_report(const ShapReport& report, const std::filesystem::path& per_sample_csv,
                       const std::filesystem::path& contrast_summary_csv);

}  // namespace wsosvm::explain
