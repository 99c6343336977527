#pragma once

#include <string>
#include <vector>

#include "wsosvm/common.hpp"

namespace wsosvm::kernels {

enum class KernelKind { linear, gaussian };

struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double gamma = 1.0;  // gaussian only; must be > 0
};

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

// Dense symmetric Gram matrix, row-major.
struct GramMatrix {
    std::size_t n = 0;
    std::vector<double> entries;

    double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
};

double kernel_eval(const KernelSpec& spec, const std::vector<double>& x,
                   const std::vector<double>& z);

// Upper triangle computed, lower mirrored; exactly symmetric.
GramMatrix gram(const KernelSpec& spec, const std::vector<std::vector<double>>& samples);

// Bandwidth heuristic: 1 / median of pairwise squared distances, falling
// back to 1/dimension when the median is zero.
double median_gamma(const std::vector<std::vector<double>>& samples);

// Per-feature z-scoring with the training set's mean/std (std floored at
// 1e-12). Applied before every kernel evaluation; stored in the model.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(const std::vector<std::vector<double>>& samples);
    std::vector<double> apply(const std::vector<double>& x) const;
    void apply_in_place(std::vector<double>& x) const;
};

}  // namespace wsosvm::kernels
