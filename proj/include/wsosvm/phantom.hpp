#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wsosvm/image.hpp"

namespace wsosvm::phantom {

// Synthetic multi-contrast stack with planted per-gene alteration fields.
// Signatures are loosely motivated by the known contrast/gene links but
// exist only to give the classifier and SHAP a recoverable structure.
struct PhantomConfig {
    int width = 128;
    int height = 128;
    std::uint64_t seed = 0;
    std::vector<std::string> channel_names = {"T1+C", "T2", "MD", "FA", "rCBV"};
    std::vector<std::string> genes = {"EGFR"};

    // Planted-truth spatial texture: smooth seeded bump fields thresholded
    // at the prevalence quantile.
    int blob_count = 6;
    double blob_radius_min = 10.0;
    double blob_radius_max = 22.0;
    double prevalence = 0.4;  // altered fraction target within the AOI

    // Per-channel intensity signatures.
    std::vector<double> normal_mean;       // defaults to 1 + 0.5*channel
    std::vector<double> tumor_mean;        // defaults to normal_mean + 2
    double necrosis_offset = -2.0;         // added to tumor_mean inside necrosis
    // Per-gene additive shift on alteration; built-in table for
    // EGFR/PDGFRA/PTEN, other genes shift channel (index % channels).
    std::map<std::string, std::vector<double>> gene_shift;

    double texture_scale = 0.0;  // smooth correlated texture amplitude
    double noise_level = 0.0;    // white noise sigma
    double necrosis_scale = 0.18;  // 0 disables the necrotic core

    void validate() const;
    std::vector<double> resolved_gene_shift(const std::string& gene) const;
};

image::ContrastStack generate(const PhantomConfig& config);

struct SampledPoint {
    int row = 0;
    int col = 0;
    int label = -1;  // planted truth at the center; -1 for unlabeled/normal
};

// Seeded rejection sampling inside the AOI excluding necrosis, pairwise
// center distance >= min_separation. truth_margin > 0 additionally requires
// every pixel within that Chebyshev radius to lie in the AOI with the
// center's planted label (label-pure windows for noiseless phantoms).
std::vector<SampledPoint> sample_biopsies(const image::ContrastStack& stack,
                                          const std::string& gene, int n,
                                          double min_separation, std::uint64_t seed,
                                          int truth_margin = 0);

// n/2 centers from CE and n/2 from NE, necrosis-free, windows in bounds.
std::vector<SampledPoint> sample_unlabeled(const image::ContrastStack& stack, int n,
                                           std::uint64_t seed);

std::vector<SampledPoint> sample_normal(const image::ContrastStack& stack, int n,
                                        std::uint64_t seed);

}  // namespace wsosvm::phantom
