#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsosvm/dataset.hpp"
#include "wsosvm/wso.hpp"

namespace wsosvm::harness {

struct CVConfig {
    int folds = 10;
    int repeats = 30;
    std::uint64_t seed = 0;
    std::vector<double> c2_grid;  // coarse, ascending, within [0.01, 100]
    std::vector<double> c1_grid;  // fine, ascending, within [0.01, 100]
    double screen_threshold = 0.80;

    static std::vector<double> default_c2_grid();
    static std::vector<double> default_c1_grid();
    void validate() const;
};

// Model construction choices shared by tuning and repeated CV.
struct ModelConfig {
    kernels::KernelSpec kernel;
    bool median_gamma = true;
    bool use_unlabeled = true;  // false = ordinal-SVM ablation (m12 = 0)
    std::vector<std::string> channel_names;
};

struct Metrics {
    double accuracy = 0.0;
    std::optional<double> sensitivity;  // class 2 (altered) is positive
    std::optional<double> specificity;
};

Metrics metrics(const std::vector<int>& predicted, const std::vector<int>& truth);

// Deterministic stratified partition: per-class counts across folds differ
// by at most one. labels hold the biopsy classes (1 or 2).
std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                  std::uint64_t seed);

// Biopsies plus the auxiliary pools the CV draws from.
struct CVData {
    std::vector<std::vector<double>> biopsy_features;
    std::vector<int> biopsy_labels;
    std::vector<std::vector<double>> unlabeled_pool;
    std::vector<std::vector<double>> normal_pool;

    static CVData from_dataset(const dataset::Dataset& data);
};

struct FoldRecord {
    int repeat = 0;
    int fold = 0;
    int test_count = 0;
    Metrics scores;
    bool failed = false;
    std::string error;
};

struct CVReport {
    std::vector<FoldRecord> records;  // ordered by (repeat, fold)
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    std::optional<double> mean_sensitivity, std_sensitivity;
    std::optional<double> mean_specificity, std_specificity;
    std::vector<double> repeat_accuracy;  // one pooled value per repeat
    double c1 = 0.0, c2 = 0.0;
    std::uint64_t seed = 0;
    int failed_folds = 0;
};

// Repeated stratified CV at fixed (C1, C2): fresh folds per repeat, fresh
// auxiliary draws per fold with unlabeled+normal together matching the
// training-biopsy count.
CVReport repeated_cv(const CVData& data, const ModelConfig& model, double c1,
                     double c2, const CVConfig& config);

struct TuneEntry {
    double c1 = 0.0, c2 = 0.0;
    double screen_accuracy = 0.0;  // class 1/2 vs class 0, by f0
    double cv_accuracy = 0.0;      // class 1 vs 2 on held-out biopsies
    bool screened_out = false;
};

struct TuneResult {
    double c1 = 0.0, c2 = 0.0;
    std::vector<TuneEntry> diagnostics;
};

struct TuningError : ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

// Two-stage grid search: screen C2 by tumoral-vs-normal CV accuracy, then
// scan C1 at every retained C2 for the best class-1-vs-2 accuracy. Ties go
// to the smaller C1, then the smaller C2. Folds are fixed across the grid.
TuneResult tune(const CVData& data, const ModelConfig& model, const CVConfig& config);

// One-sided Wilcoxon rank-sum p-value for "a stochastically greater than b":
// exact enumeration when |a|+|b| <= 20, otherwise the normal approximation
// with tie and continuity corrections.
double rank_sum_one_sided(const std::vector<double>& a, const std::vector<double>& b);
double rank_sum_one_sided_exact(const std::vector<double>& a,
                                const std::vector<double>& b);
double rank_sum_one_sided_approx(const std::vector<double>& a,
                                 const std::vector<double>& b);

void write_cv_report_csv(const CVReport& report, const std::filesystem::path& path);
// "mean (std)" rows in the shape of the paper's tables.
std::string summary_text(const CVReport& report);

}  // namespace wsosvm::harness
