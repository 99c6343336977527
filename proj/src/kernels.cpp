#include "wsosvm/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "wsosvm/simd.hpp"

namespace wsosvm::kernels {

std::string to_string(KernelKind kind) {
    return kind == KernelKind::linear ? "linear" : "gaussian";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "gaussian") return KernelKind::gaussian;
    throw ConfigError("unknown kernel '" + name + "' (expected linear or gaussian)");
}

double kernel_eval(const KernelSpec& spec, const std::vector<double>& x,
                   const std::vector<double>& z) {
    if (x.size() != z.size())
        throw DataError("kernel_eval: length mismatch (" + std::to_string(x.size()) +
                        " vs " + std::to_string(z.size()) + ")");
    if (spec.kind == KernelKind::linear) return simd::dot(x.data(), z.data(), x.size());
    return std::exp(-spec.gamma * simd::sqdist(x.data(), z.data(), x.size()));
}

GramMatrix gram(const KernelSpec& spec, const std::vector<std::vector<double>>& samples) {
    GramMatrix g;
    g.n = samples.size();
    g.entries.assign(g.n * g.n, 0.0);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t j = i; j < g.n; ++j) {
            double v = kernel_eval(spec, samples[i], samples[j]);
            g.at(i, j) = v;
            g.at(j, i) = v;
        }
    }
    return g;
}

double median_gamma(const std::vector<std::vector<double>>& samples) {
    if (samples.size() < 2)
        throw DataError("median_gamma needs at least 2 samples");
    std::vector<double> dists;
    dists.reserve(samples.size() * (samples.size() - 1) / 2);
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j)
            dists.push_back(simd::sqdist(samples[i].data(), samples[j].data(),
                                         samples[i].size()));
    std::sort(dists.begin(), dists.end());
    std::size_t n = dists.size();
    double median = (n % 2 == 1) ? dists[n / 2]
                                 : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
    if (median <= 0.0) return 1.0 / static_cast<double>(samples[0].size());
    return 1.0 / median;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& samples) {
    if (samples.empty()) throw DataError("Standardizer::fit: no samples");
    const std::size_t d = samples[0].size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    for (const auto& x : samples) {
        if (x.size() != d) throw DataError("Standardizer::fit: inconsistent lengths");
        for (std::size_t k = 0; k < d; ++k) s.mean[k] += x[k];
    }
    for (double& m : s.mean) m /= static_cast<double>(samples.size());
    for (const auto& x : samples)
        for (std::size_t k = 0; k < d; ++k) {
            double dlt = x[k] - s.mean[k];
            s.stddev[k] += dlt * dlt;
        }
    for (double& v : s.stddev)
        v = std::max(std::sqrt(v / static_cast<double>(samples.size())), 1e-12);
    return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
    std::vector<double> out = x;
    apply_in_place(out);
    return out;
}

void Standardizer::apply_in_place(std::vector<double>& x) const {
    if (x.size() != mean.size())
        throw DataError("standardize: length mismatch (" + std::to_string(x.size()) +
                        " vs model dimension " + std::to_string(mean.size()) + ")");
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - mean[k]) / stddev[k];
}

}  // namespace wsosvm::kernels
