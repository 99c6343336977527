#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsosvm/kernels.hpp"
#include "wsosvm/qp.hpp"

namespace wsosvm::wso {

// Ordinal class: 0 = normal brain, 1 = gene non-altered, 2 = gene altered.
enum class ClassLabel : int { normal = 0, non_altered = 1, altered = 2 };

inline int label_value(ClassLabel label) { return static_cast<int>(label); }

// n1 class-1 biopsies, n2 class-2 biopsies, m12 unlabeled tumoral samples,
// m0 normal samples. The weak-supervision pool spans m12' = n1 + n2 + m12
// samples: the labeled biopsies participate in both constraint groups.
struct TrainingSet {
    std::vector<std::vector<double>> class1;
    std::vector<std::vector<double>> class2;
    std::vector<std::vector<double>> unlabeled;
    std::vector<std::vector<double>> normal;

    std::size_t n1() const { return class1.size(); }
    std::size_t n2() const { return class2.size(); }
    std::size_t m12() const { return unlabeled.size(); }
    std::size_t m0() const { return normal.size(); }
    std::size_t m12_prime() const { return n1() + n2() + m12(); }
    std::size_t dual_size() const { return n1() + n2() + m0() + m12_prime(); }

    void validate() const;
    std::size_t dimension() const;
    // class1, class2, unlabeled, normal concatenated (no repeats).
    std::vector<std::vector<double>> all_samples() const;
};

struct SupportSample {
    std::vector<double> standardized;  // z-scored feature vector
    double coefficient = 0.0;          // signed: h(x) = sum c_i k(x, x_i)
};

struct TrainedModel {
    kernels::KernelSpec kernel;
    kernels::Standardizer standardization;
    double c1 = 1.0;
    double c2 = 1.0;
    double b0 = 0.0;
    double b1 = 0.0;
    std::vector<SupportSample> support;
    std::vector<std::string> channel_names;  // feature layout provenance
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    qp::KKTReport kkt;
    double dual_objective = 0.0;

    std::size_t dimension() const { return standardization.mean.size(); }
};

struct TrainOptions {
    qp::SolveOptions solver;
    bool median_gamma = false;  // resolve gaussian gamma from the data
    std::vector<std::string> channel_names;
    std::uint64_t seed = 0;
    // Optional per-class cap multiplier on C1 (imbalance handling, off by default).
    double class1_weight = 1.0;
    double class2_weight = 1.0;
};

// Dual QP of the three-class ordinal problem: gamma ordered as
// (alpha1, alpha2, beta0, beta12) with beta12 spanning class1, class2, then
// unlabeled; Q = Y K Y; one equality over all signed blocks, one inequality
// over the alpha blocks, boxes [0,C1] on alpha and [0,C2] on beta.
qp::QPInstance assemble_dual(const TrainingSet& standardized_ts,
                             const kernels::KernelSpec& kernel, double c1, double c2);

// The diagonal of Y for the assembled ordering.
std::vector<double> dual_signs(const TrainingSet& ts);

TrainedModel train(const TrainingSet& ts, const kernels::KernelSpec& kernel,
                   double c1, double c2, const TrainOptions& options = {});

double decision_value(const TrainedModel& model, const std::vector<double>& x);
// Same, for an already-standardized input.
double decision_value_standardized(const TrainedModel& model,
                                   const std::vector<double>& z);

ClassLabel classify(const TrainedModel& model, const std::vector<double>& x);
ClassLabel classify_value(const TrainedModel& model, double h);

// Margin-interior support-vector averaging with the KKT-interval fallback.
// h_values must follow the dual ordering of assemble_dual.
std::pair<double, double> recover_biases(const qp::DualSolution& solution,
                                         const TrainingSet& ts,
                                         const std::vector<double>& h_values,
                                         double c1, double c2);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace wsosvm::wso
