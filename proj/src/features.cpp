#include "wsosvm/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "wsosvm/simd.hpp"

namespace wsosvm::features {

namespace {

constexpr int kHalf = kWindowSide / 2;  // window spans [center-4, center+3]

double log2_safe(double p) { return p > 0.0 ? std::log2(p) : 0.0; }

// Linear interpolation between order statistics on a sorted vector.
double percentile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = q * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

bool window_in_bounds(int row, int col, int width, int height) {
    return row - kHalf >= 0 && col - kHalf >= 0 && row + kHalf - 1 < height &&
           col + kHalf - 1 < width;
}

Window extract_window(const image::ContrastStack& stack, int channel, int row, int col) {
    if (channel < 0 || channel >= static_cast<int>(stack.channels.size()))
        throw DataError("channel index " + std::to_string(channel) + " out of range");
    const image::Plane& plane = stack.channels[channel];
    if (!window_in_bounds(row, col, plane.width(), plane.height()))
        throw DataError("window at (" + std::to_string(row) + "," + std::to_string(col) +
                        ") spans rows " + std::to_string(row - kHalf) + ".." +
                        std::to_string(row + kHalf - 1) + ", cols " +
                        std::to_string(col - kHalf) + ".." + std::to_string(col + kHalf - 1) +
                        " outside a " + std::to_string(plane.width()) + "x" +
                        std::to_string(plane.height()) + " image");
    Window window;
    window.source_contrast = stack.channel_names[channel];
    int k = 0;
    for (int r = row - kHalf; r <= row + kHalf - 1; ++r)
        for (int c = col - kHalf; c <= col + kHalf - 1; ++c)
            window.values[k++] = static_cast<double>(plane.at(r, c));
    return window;
}

QuantizedWindow quantize(const Window& window) {
    double lo = window.values[0], hi = window.values[0];
    for (double v : window.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    QuantizedWindow q;
    if (hi <= lo) return q;  // constant window -> all zeros
    double scale = 255.0 / (hi - lo);
    for (int i = 0; i < kWindowPixels; ++i) {
        int level = static_cast<int>(std::round((window.values[i] - lo) * scale));
        q.levels[i] = std::clamp(level, 0, 255);
    }
    return q;
}

std::array<double, kStatCount> statistical_features(const Window& window) {
    const int n = kWindowPixels;
    double mean = simd::sum(window.values.data(), n) / n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, energy = 0.0, mad = 0.0;
    for (double v : window.values) {
        double d = v - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        energy += v * v;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    double stddev = std::sqrt(m2);
    double skewness = m2 > 0.0 ? m3 / (m2 * stddev) : 0.0;
    double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    double rms = std::sqrt(energy / n);

    std::vector<double> sorted(window.values.begin(), window.values.end());
    std::sort(sorted.begin(), sorted.end());
    double p10 = percentile(sorted, 0.10);
    double p25 = percentile(sorted, 0.25);
    double p50 = percentile(sorted, 0.50);
    double p75 = percentile(sorted, 0.75);
    double p90 = percentile(sorted, 0.90);

    // Robust MAD: mean absolute deviation of the values in [p10, p90]
    // around their own mean.
    double rsum = 0.0;
    int rcount = 0;
    for (double v : sorted) {
        if (v >= p10 && v <= p90) {
            rsum += v;
            ++rcount;
        }
    }
    double rmad = 0.0;
    if (rcount > 0) {
        double rmean = rsum / rcount;
        for (double v : sorted)
            if (v >= p10 && v <= p90) rmad += std::abs(v - rmean);
        rmad /= rcount;
    }

    // Histogram entropy/uniformity on the quantized levels.
    QuantizedWindow q = quantize(window);
    std::array<int, kGrayLevels> hist{};
    for (int level : q.levels) hist[level]++;
    double entropy = 0.0, uniformity = 0.0;
    for (int count : hist) {
        if (count == 0) continue;
        double p = static_cast<double>(count) / n;
        entropy -= p * log2_safe(p);
        uniformity += p * p;
    }

    return {mean,        stddev, energy, energy /* total energy, unit volume */,
            entropy,     sorted.front(), p10,  p90,
            sorted.back(), p50,  p75 - p25, sorted.back() - sorted.front(),
            mad,         rmad,   rms,    skewness,
            kurtosis,    uniformity};
}

double GlcmMatrix::mass() const {
    double total = 0.0;
    for (const auto& [key, p] : entries) total += p;
    return total;
}

bool GlcmMatrix::symmetric(double tol) const {
    for (const auto& [key, p] : entries) {
        auto it = entries.find({key.second, key.first});
        if (it == entries.end() || std::abs(it->second - p) > tol) return false;
    }
    return true;
}

GlcmMatrix build_glcm(const QuantizedWindow& qwindow, int distance, int direction) {
    // Direction offsets (row, col): 0 deg, 45 deg, 90 deg, 135 deg.
    static constexpr int kOffsets[4][2] = {{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    if (direction < 0 || direction > 3)
        throw DataError("GLCM direction index out of range");
    int dr = kOffsets[direction][0] * distance;
    int dc = kOffsets[direction][1] * distance;

    GlcmMatrix glcm;
    glcm.distance = distance;
    long count = 0;
    for (int r = 0; r < kWindowSide; ++r) {
        for (int c = 0; c < kWindowSide; ++c) {
            int r2 = r + dr, c2 = c + dc;
            if (r2 < 0 || r2 >= kWindowSide || c2 < 0 || c2 >= kWindowSide) continue;
            int i = qwindow.levels[r * kWindowSide + c];
            int j = qwindow.levels[r2 * kWindowSide + c2];
            glcm.entries[{i, j}] += 1.0;
            glcm.entries[{j, i}] += 1.0;
            count += 2;
        }
    }
    if (count > 0)
        for (auto& [key, v] : glcm.entries) v /= static_cast<double>(count);
    return glcm;
}

namespace {

// The 13 classical co-occurrence features of a normalized symmetric GLCM,
// gray levels indexed 0..255.
std::array<double, 13> haralick13(const GlcmMatrix& glcm) {
    std::array<double, kGrayLevels> px{};
    std::array<double, 2 * kGrayLevels - 1> psum{};
    std::array<double, kGrayLevels> pdiff{};
    for (const auto& [key, p] : glcm.entries) {
        px[key.first] += p;
        psum[key.first + key.second] += p;
        pdiff[std::abs(key.first - key.second)] += p;
    }

    double mu = 0.0;
    for (int i = 0; i < kGrayLevels; ++i) mu += i * px[i];
    double var = 0.0, hx = 0.0;
    for (int i = 0; i < kGrayLevels; ++i) {
        var += (i - mu) * (i - mu) * px[i];
        hx -= px[i] * log2_safe(px[i]);
    }

    double asm_ = 0.0, contrast = 0.0, corr_num = 0.0, sos_var = 0.0, idm = 0.0;
    double entropy = 0.0, hxy1 = 0.0;
    for (const auto& [key, p] : glcm.entries) {
        int i = key.first, j = key.second;
        asm_ += p * p;
        contrast += static_cast<double>(i - j) * (i - j) * p;
        corr_num += (i - mu) * (j - mu) * p;
        sos_var += (i - mu) * (i - mu) * p;
        idm += p / (1.0 + static_cast<double>(i - j) * (i - j));
        entropy -= p * log2_safe(p);
        hxy1 -= p * log2_safe(px[i] * px[j]);
    }
    double correlation = var > 0.0 ? corr_num / var : 0.0;

    double sum_avg = 0.0;
    for (int k = 0; k < 2 * kGrayLevels - 1; ++k) sum_avg += k * psum[k];
    double sum_var = 0.0, sum_entropy = 0.0;
    for (int k = 0; k < 2 * kGrayLevels - 1; ++k) {
        sum_var += (k - sum_avg) * (k - sum_avg) * psum[k];
        sum_entropy -= psum[k] * log2_safe(psum[k]);
    }

    double diff_avg = 0.0;
    for (int k = 0; k < kGrayLevels; ++k) diff_avg += k * pdiff[k];
    double diff_var = 0.0, diff_entropy = 0.0;
    for (int k = 0; k < kGrayLevels; ++k) {
        diff_var += (k - diff_avg) * (k - diff_avg) * pdiff[k];
        diff_entropy -= pdiff[k] * log2_safe(pdiff[k]);
    }

    // HXY2 involves only the nonzero marginal levels, of which an 8x8
    // window has at most 64.
    double hxy2 = 0.0;
    for (int i = 0; i < kGrayLevels; ++i) {
        if (px[i] == 0.0) continue;
        for (int j = 0; j < kGrayLevels; ++j) {
            if (px[j] == 0.0) continue;
            double pp = px[i] * px[j];
            hxy2 -= pp * log2_safe(pp);
        }
    }
    double imc1 = hx > 0.0 ? (entropy - hxy1) / hx : 0.0;
    double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));

    return {asm_,    contrast,    correlation, sos_var,     idm,
            sum_avg, sum_var,     sum_entropy, entropy,     diff_var,
            diff_entropy, imc1,   imc2};
}

}  // namespace

std::array<double, kGlcmCount> glcm_features(const QuantizedWindow& qwindow) {
    std::array<double, kGlcmCount> out{};
    const int distances[2] = {1, 3};
    for (int d = 0; d < 2; ++d) {
        std::array<double, 13> avg{};
        for (int dir = 0; dir < 4; ++dir) {
            auto f = haralick13(build_glcm(qwindow, distances[d], dir));
            for (int k = 0; k < 13; ++k) avg[k] += f[k];
        }
        for (int k = 0; k < 13; ++k) out[d * 13 + k] = avg[k] / 4.0;
    }
    return out;
}

namespace {

constexpr int kGaborRadius = 3;
constexpr int kGaborSide = 2 * kGaborRadius + 1;  // 7
constexpr int kPadStride = 16;
constexpr double kPi = 3.14159265358979323846;

struct GaborBank {
    // 6 (sigma, freq) pairs x 4 orientations; each kernel stored 7x8
    // row-major (column 7 zero) for the corr kernel.
    std::array<std::array<std::array<double, kGaborSide * 8>, 4>, 6> kernels{};

    GaborBank() {
        const double sigmas[2] = {0.4, 0.7};
        const double freqs[3] = {0.1, 0.3, 0.5};
        const double thetas[4] = {0.0, kPi / 4.0, kPi / 2.0, 3.0 * kPi / 4.0};
        for (int s = 0; s < 2; ++s) {
            for (int f = 0; f < 3; ++f) {
                int pair = s * 3 + f;
                for (int t = 0; t < 4; ++t) {
                    auto& k = kernels[pair][t];
                    double ct = std::cos(thetas[t]), st = std::sin(thetas[t]);
                    double total = 0.0;
                    for (int y = -kGaborRadius; y <= kGaborRadius; ++y) {
                        for (int x = -kGaborRadius; x <= kGaborRadius; ++x) {
                            double xr = x * ct + y * st;
                            double yr = -x * st + y * ct;
                            double env = std::exp(-(xr * xr + yr * yr) /
                                                  (2.0 * sigmas[s] * sigmas[s]));
                            double v = env * std::cos(2.0 * kPi * freqs[f] * xr);
                            k[(y + kGaborRadius) * 8 + (x + kGaborRadius)] = v;
                            total += v;
                        }
                    }
                    // Zero-mean so constant inputs give zero response.
                    double mean = total / (kGaborSide * kGaborSide);
                    for (int y = 0; y < kGaborSide; ++y)
                        for (int x = 0; x < kGaborSide; ++x)
                            k[y * 8 + x] -= mean;
                }
            }
        }
    }
};

const GaborBank& gabor_bank() {
    static const GaborBank bank;
    return bank;
}

int reflect_index(int i) {
    if (i < 0) return -1 - i;
    if (i >= kWindowSide) return 2 * kWindowSide - 1 - i;
    return i;
}

}  // namespace

std::array<double, kGaborCount> gabor_features(const QuantizedWindow& qwindow) {
    // Reflect-pad the 8x8 tile to 14x14 so the 7x7 correlation is valid
    // everywhere inside the window.
    std::array<double, (kWindowSide + 2 * kGaborRadius) * kPadStride> padded{};
    for (int r = -kGaborRadius; r < kWindowSide + kGaborRadius; ++r) {
        int sr = reflect_index(r);
        for (int c = -kGaborRadius; c < kWindowSide + kGaborRadius; ++c) {
            int sc = reflect_index(c);
            padded[(r + kGaborRadius) * kPadStride + (c + kGaborRadius)] =
                static_cast<double>(qwindow.levels[sr * kWindowSide + sc]);
        }
    }

    const GaborBank& bank = gabor_bank();
    std::array<double, kGaborCount> out{};
    std::array<double, kWindowPixels> resp{};
    std::array<double, kWindowPixels> magnitude{};
    for (int pair = 0; pair < 6; ++pair) {
        magnitude.fill(0.0);
        for (int t = 0; t < 4; ++t) {
            simd::corr7x7_8x8(padded.data(), kPadStride, bank.kernels[pair][t].data(),
                              resp.data());
            for (int i = 0; i < kWindowPixels; ++i) magnitude[i] += std::abs(resp[i]);
        }
        for (double& m : magnitude) m /= 4.0;
        double mean = simd::sum(magnitude.data(), kWindowPixels) / kWindowPixels;
        double var = 0.0;
        for (double m : magnitude) var += (m - mean) * (m - mean);
        var /= kWindowPixels;
        out[pair * 2] = mean;
        out[pair * 2 + 1] = std::sqrt(var);
    }
    return out;
}

std::array<double, kGaborCount> gabor_features(const Window& window) {
    return gabor_features(quantize(window));
}

FeatureVector feature_vector(const image::ContrastStack& stack, int row, int col) {
    FeatureVector fv;
    fv.values.reserve(stack.channels.size() * kPerContrast);
    for (std::size_t ch = 0; ch < stack.channels.size(); ++ch) {
        Window window = extract_window(stack, static_cast<int>(ch), row, col);
        QuantizedWindow q = quantize(window);
        auto stats = statistical_features(window);
        auto glcm = glcm_features(q);
        auto gabor = gabor_features(q);
        fv.values.insert(fv.values.end(), stats.begin(), stats.end());
        fv.values.insert(fv.values.end(), glcm.begin(), glcm.end());
        fv.values.insert(fv.values.end(), gabor.begin(), gabor.end());
    }
    return fv;
}

std::vector<std::string> feature_names(const std::vector<std::string>& channel_names) {
    static const char* kStatNames[kStatCount] = {
        "mean", "std", "energy", "total_energy", "entropy", "min", "p10", "p90",
        "max", "median", "iqr", "range", "mad", "rmad", "rms", "skewness",
        "kurtosis", "uniformity"};
    static const char* kHaralickNames[13] = {
        "asm_avg", "contrast_avg", "correlation_avg", "sum_of_squares_variance_avg",
        "idm_avg", "sum_average_avg", "sum_variance_avg", "sum_entropy_avg",
        "entropy_avg", "difference_variance_avg", "difference_entropy_avg",
        "imc1_avg", "imc2_avg"};
    static const char* kGaborPairs[6] = {"s0.4_f0.1", "s0.4_f0.3", "s0.4_f0.5",
                                         "s0.7_f0.1", "s0.7_f0.3", "s0.7_f0.5"};
    std::vector<std::string> names;
    names.reserve(channel_names.size() * kPerContrast);
    for (const std::string& ch : channel_names) {
        for (const char* s : kStatNames) names.push_back(ch + ".stat." + s);
        for (int d : {1, 3})
            for (const char* h : kHaralickNames)
                names.push_back(ch + ".glcm." + h + "_d" + std::to_string(d));
        for (const char* p : kGaborPairs) {
            names.push_back(ch + ".gabor.mean_" + p);
            names.push_back(ch + ".gabor.std_" + p);
        }
    }
    return names;
}

void write_feature_manifest(const std::vector<std::string>& names,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    for (std::size_t i = 0; i < names.size(); ++i) out << i << "," << names[i] << "\n";
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace wsosvm::features
