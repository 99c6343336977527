#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "wsosvm/image.hpp"

namespace wsosvm::features {

inline constexpr int kWindowSide = 8;
inline constexpr int kWindowPixels = kWindowSide * kWindowSide;
inline constexpr int kStatCount = 18;
inline constexpr int kGlcmCount = 26;
inline constexpr int kGaborCount = 12;
inline constexpr int kPerContrast = kStatCount + kGlcmCount + kGaborCount;  // 56
inline constexpr int kGrayLevels = 256;

// 8x8 sampling window. The window centered at (r, c) covers rows r-4..r+3
// and columns c-4..c+3, row-major.
struct Window {
    std::array<double, kWindowPixels> values{};
    std::string source_contrast;
};

struct QuantizedWindow {
    std::array<int, kWindowPixels> levels{};
};

// Symmetric co-occurrence probabilities, stored sparsely: an 8x8 window has
// at most 64 distinct levels out of the 256.
struct GlcmMatrix {
    std::map<std::pair<int, int>, double> entries;
    int level_count = kGrayLevels;
    int distance = 1;

    double mass() const;
    bool symmetric(double tol = 1e-12) const;
};

struct FeatureVector {
    std::vector<double> values;
};

Window extract_window(const image::ContrastStack& stack, int channel, int row, int col);

// Min-max map onto 0..255 with round-half-away-from-zero; a constant window
// maps to all zeros.
QuantizedWindow quantize(const Window& window);

// Slot order: mean, std, energy, total_energy, entropy, min, p10, p90, max,
// median, iqr, range, mad, rmad, rms, skewness, kurtosis, uniformity.
// Entropy (bits) and uniformity are computed on the 256-bin quantized
// histogram; skewness/kurtosis are 0 for zero-variance windows; kurtosis is
// Pearson (non-excess).
std::array<double, kStatCount> statistical_features(const Window& window);

GlcmMatrix build_glcm(const QuantizedWindow& qwindow, int distance, int direction);

// 13 Haralick features averaged over the four directions, for distances 1
// and 3 (d=1 block first). Correlation is 0 when a marginal variance is 0;
// all entropy terms use 0*log0 = 0, base 2.
std::array<double, kGlcmCount> glcm_features(const QuantizedWindow& qwindow);

// Mean/std of the orientation-averaged Gabor response magnitude for
// (sigma, frequency) in {0.4, 0.7} x {0.1, 0.3, 0.5}, computed on the
// quantized window with a 7x7 zero-mean even kernel and reflective padding.
std::array<double, kGaborCount> gabor_features(const QuantizedWindow& qwindow);
std::array<double, kGaborCount> gabor_features(const Window& window);

// Contrast-major concatenation: per contrast, statistical then GLCM then
// Gabor; length 56 * channel count.
FeatureVector feature_vector(const image::ContrastStack& stack, int row, int col);

// Stable slot names, "<channel>.<group>.<feature>".
std::vector<std::string> feature_names(const std::vector<std::string>& channel_names);
void write_feature_manifest(const std::vector<std::string>& names,
                            const std::filesystem::path& path);

// True when the full window around (row, col) lies inside the image bounds.
bool window_in_bounds(int row, int col, int width, int height);

}  // namespace wsosvm::features
