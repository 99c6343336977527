#include "wsosvm/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "wsosvm/features.hpp"
#include "wsosvm/rng.hpp"

namespace wsosvm::phantom {

void PhantomConfig::validate() const {
    if (width < 32 || height < 32)
        throw ConfigError("phantom: dimensions must be at least 32 (got " +
                          std::to_string(width) + "x" + std::to_string(height) + ")");
    if (prevalence <= 0.0 || prevalence >= 1.0)
        throw ConfigError("phantom: prevalence must lie in (0, 1)");
    if (channel_names.empty()) throw ConfigError("phantom: need at least one channel");
    if (genes.empty()) throw ConfigError("phantom: need at least one gene");
    if (blob_count < 1 || blob_radius_min <= 0.0 || blob_radius_max < blob_radius_min)
        throw ConfigError("phantom: bad blob parameters");
    if (!normal_mean.empty() && normal_mean.size() != channel_names.size())
        throw ConfigError("phantom: normal_mean length must match channel count");
    if (!tumor_mean.empty() && tumor_mean.size() != channel_names.size())
        throw ConfigError("phantom: tumor_mean length must match channel count");
}

std::vector<double> PhantomConfig::resolved_gene_shift(const std::string& gene) const {
    const std::size_t channels = channel_names.size();
    auto it = gene_shift.find(gene);
    if (it != gene_shift.end()) {
        if (it->second.size() != channels)
            throw ConfigError("phantom: gene_shift for " + gene +
                              " must match channel count");
        return it->second;
    }
    std::vector<double> shift(channels, 0.0);
    auto set = [&](std::size_t ch, double v) {
        if (ch < channels) shift[ch] = v;
    };
    // Built-in signatures follow the reported contrast/gene associations:
    // EGFR loads on T2 and rCBV, PDGFRA on T1+C, PTEN on rCBV and MD.
    if (gene == "EGFR") {
        set(1, 2.0);
        set(4, 2.0);
    } else if (gene == "PDGFRA") {
        set(0, 2.0);
    } else if (gene == "PTEN") {
        set(4, 2.0);
        set(2, -1.5);
    } else {
        std::size_t ch = fnv1a64(gene) % channels;
        shift[ch] = 2.0;
    }
    return shift;
}

namespace {

struct Ellipse {
    double cr, cc, rr, rc;  // center (row, col) and radii

    bool contains(int r, int c) const {
        double dr = (r - cr) / rr, dc = (c - cc) / rc;
        return dr * dr + dc * dc <= 1.0;
    }
    Ellipse scaled(double s) const { return {cr, cc, rr * s, rc * s}; }
};

struct Bump {
    double r, c, radius, weight;
};

// Smooth seeded bump field used for the planted truth and the correlated
// texture.
double field_at(const std::vector<Bump>& bumps, int r, int c) {
    double acc = 0.0;
    for (const Bump& b : bumps) {
        double dr = r - b.r, dc = c - b.c;
        acc += b.weight * std::exp(-(dr * dr + dc * dc) / (2.0 * b.radius * b.radius));
    }
    return acc;
}

}  // namespace

image::ContrastStack generate(const PhantomConfig& config) {
    config.validate();
    const int w = config.width, h = config.height;
    const std::size_t channels = config.channel_names.size();

    // Geometry: tumor on the right, mirrored contralateral region on the left.
    Ellipse outer{h * 0.5, w * 0.70, h * 0.22, w * 0.16};
    Ellipse core = outer.scaled(0.55);
    Ellipse necrosis = outer.scaled(config.necrosis_scale > 0.0 ? config.necrosis_scale : 0.0);
    Ellipse contra{h * 0.5, w - outer.cc, outer.rr, outer.rc};

    image::ContrastStack stack;
    stack.width = w;
    stack.height = h;
    stack.channel_names = config.channel_names;
    stack.mask_ce = image::Plane(w, h);
    stack.mask_ne = image::Plane(w, h);
    stack.mask_necrosis = image::Plane(w, h);
    stack.mask_contralateral = image::Plane(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            bool in_outer = outer.contains(r, c);
            bool in_core = in_outer && core.contains(r, c);
            bool in_nec = config.necrosis_scale > 0.0 && in_core && necrosis.contains(r, c);
            if (in_nec)
                stack.mask_necrosis.at(r, c) = 1.0f;
            else if (in_core)
                stack.mask_ce.at(r, c) = 1.0f;
            else if (in_outer)
                stack.mask_ne.at(r, c) = 1.0f;
            else if (contra.contains(r, c))
                stack.mask_contralateral.at(r, c) = 1.0f;
        }
    }

    // Planted truth per gene: bump field thresholded at the prevalence
    // quantile over the AOI.
    std::vector<std::vector<double>> gene_shifts;
    for (const std::string& gene : config.genes) {
        rng::Stream stream(config.seed, "phantom/truth-" + gene);
        std::vector<Bump> bumps;
        for (int k = 0; k < config.blob_count; ++k) {
            Bump b;
            b.r = outer.cr + (stream.next_double() * 2.0 - 1.0) * outer.rr;
            b.c = outer.cc + (stream.next_double() * 2.0 - 1.0) * outer.rc;
            b.radius = stream.uniform(config.blob_radius_min, config.blob_radius_max);
            b.weight = stream.next_double() < 0.5 ? -1.0 : 1.0;
            bumps.push_back(b);
        }
        std::vector<double> aoi_values;
        image::Plane field(w, h);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double v = field_at(bumps, r, c);
                field.at(r, c) = static_cast<float>(v);
                if (stack.in_aoi(r, c)) aoi_values.push_back(v);
            }
        std::sort(aoi_values.begin(), aoi_values.end());
        std::size_t cut = static_cast<std::size_t>(
            std::round((1.0 - config.prevalence) * static_cast<double>(aoi_values.size())));
        cut = std::min(cut, aoi_values.size() - 1);
        double threshold = aoi_values[cut];

        image::Plane truth(w, h);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (stack.in_aoi(r, c))
                    truth.at(r, c) = field.at(r, c) >= threshold ? 2.0f : 1.0f;
        stack.truth_genes.push_back(gene);
        stack.truth.push_back(std::move(truth));
        gene_shifts.push_back(config.resolved_gene_shift(gene));
    }

    std::vector<double> normal_mean = config.normal_mean;
    std::vector<double> tumor_mean = config.tumor_mean;
    if (normal_mean.empty())
        for (std::size_t ch = 0; ch < channels; ++ch)
            normal_mean.push_back(1.0 + 0.5 * static_cast<double>(ch));
    if (tumor_mean.empty())
        for (std::size_t ch = 0; ch < channels; ++ch)
            tumor_mean.push_back(normal_mean[ch] + 2.0);

    for (std::size_t ch = 0; ch < channels; ++ch) {
        std::vector<Bump> texture;
        if (config.texture_scale > 0.0) {
            rng::Stream stream(config.seed, "phantom/texture", ch);
            for (int k = 0; k < 12; ++k) {
                Bump b;
                b.r = stream.uniform(0.0, h);
                b.c = stream.uniform(0.0, w);
                b.radius = stream.uniform(4.0, 16.0);
                b.weight = stream.uniform(-1.0, 1.0);
                texture.push_back(b);
            }
        }
        rng::Stream noise(config.seed, "phantom/noise", ch);
        image::Plane plane(w, h);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                double v;
                if (stack.mask_necrosis.at(r, c) != 0.0f) {
                    v = tumor_mean[ch] + config.necrosis_offset;
                } else if (stack.in_aoi(r, c)) {
                    v = tumor_mean[ch];
                    for (std::size_t g = 0; g < stack.truth.size(); ++g)
                        if (stack.truth[g].at(r, c) == 2.0f) v += gene_shifts[g][ch];
                } else {
                    v = normal_mean[ch];
                }
                if (!texture.empty())
                    v += config.texture_scale * field_at(texture, r, c);
                if (config.noise_level > 0.0) v += config.noise_level * noise.next_normal();
                plane.at(r, c) = static_cast<float>(v);
            }
        }
        stack.channels.push_back(std::move(plane));
    }
    return stack;
}

namespace {

bool truth_pure(const image::ContrastStack& stack, const image::Plane& truth, int row,
                int col, int margin) {
    float label = truth.at(row, col);
    for (int r = row - margin; r <= row + margin; ++r)
        for (int c = col - margin; c <= col + margin; ++c) {
            if (r < 0 || r >= stack.height || c < 0 || c >= stack.width) return false;
            if (!stack.in_aoi(r, c)) return false;
            if (truth.at(r, c) != label) return false;
        }
    return true;
}

}  // namespace

std::vector<SampledPoint> sample_biopsies(const image::ContrastStack& stack,
                                          const std::string& gene, int n,
                                          double min_separation, std::uint64_t seed,
                                          int truth_margin) {
    if (n < 1) throw ConfigError("sample_biopsies: n must be >= 1");
    int gi = stack.truth_index(gene);
    if (gi < 0) throw DataError("stack has no planted truth for gene '" + gene + "'");
    const image::Plane& truth = stack.truth[gi];

    // Eligible centers first (AOI, non-necrotic, window in bounds, optional
    // label purity), then seeded rejection sampling of the separation
    // constraint over that list.
    std::vector<std::pair<int, int>> eligible;
    for (int row = 4; row <= stack.height - 4; ++row) {
        for (int col = 4; col <= stack.width - 4; ++col) {
            if (!stack.in_aoi(row, col)) continue;
            if (stack.mask_necrosis.at(row, col) != 0.0f) continue;
            if (truth_margin > 0 && !truth_pure(stack, truth, row, col, truth_margin))
                continue;
            eligible.emplace_back(row, col);
        }
    }
    rng::Stream stream(seed, "phantom/sample-biopsies");
    std::vector<SampledPoint> points;
    const long budget = 100L * n;
    for (long attempt = 0; attempt < budget && static_cast<int>(points.size()) < n &&
                           !eligible.empty();
         ++attempt) {
        auto [row, col] = eligible[stream.next_below(eligible.size())];
        bool ok = true;
        for (const SampledPoint& p : points) {
            double dr = p.row - row, dc = p.col - col;
            if (dr * dr + dc * dc < min_separation * min_separation) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        points.push_back({row, col, static_cast<int>(truth.at(row, col))});
    }
    if (static_cast<int>(points.size()) < n)
        throw DataError("sample_biopsies: placed only " + std::to_string(points.size()) +
                        " of " + std::to_string(n) + " samples within the retry budget");
    return points;
}

namespace {

std::vector<SampledPoint> sample_mask(const image::ContrastStack& stack,
                                      const image::Plane& mask, int n,
                                      rng::Stream& stream, const char* what) {
    std::vector<std::pair<int, int>> eligible;
    for (int row = 4; row <= stack.height - 4; ++row)
        for (int col = 4; col <= stack.width - 4; ++col) {
            if (mask.at(row, col) == 0.0f) continue;
            if (stack.mask_necrosis.at(row, col) != 0.0f) continue;
            eligible.emplace_back(row, col);
        }
    std::vector<SampledPoint> points;
    const long budget = 100L * std::max(n, 1);
    for (long attempt = 0; attempt < budget && static_cast<int>(points.size()) < n &&
                           !eligible.empty();
         ++attempt) {
        auto [row, col] = eligible[stream.next_below(eligible.size())];
        bool duplicate = false;
        for (const SampledPoint& p : points)
            if (p.row == row && p.col == col) {
                duplicate = true;
                break;
            }
        if (duplicate) continue;
        points.push_back({row, col, -1});
    }
    if (static_cast<int>(points.size()) < n)
        throw DataError(std::string("sample_") + what + ": placed only " +
                        std::to_string(points.size()) + " of " + std::to_string(n) +
                        " samples within the retry budget");
    return points;
}

}  // namespace

std::vector<SampledPoint> sample_unlabeled(const image::ContrastStack& stack, int n,
                                           std::uint64_t seed) {
    if (n < 0 || n % 2 != 0)
        throw ConfigError("sample_unlabeled: n must be even (CE/NE balance)");
    std::vector<SampledPoint> points;
    if (n == 0) return points;
    rng::Stream stream(seed, "phantom/sample-unlabeled");
    auto ce = sample_mask(stack, stack.mask_ce, n / 2, stream, "unlabeled");
    auto ne = sample_mask(stack, stack.mask_ne, n / 2, stream, "unlabeled");
    points.insert(points.end(), ce.begin(), ce.end());
    points.insert(points.end(), ne.begin(), ne.end());
    return points;
}

std::vector<SampledPoint> sample_normal(const image::ContrastStack& stack, int n,
                                        std::uint64_t seed) {
    if (n < 0) throw ConfigError("sample_normal: n must be >= 0");
    std::vector<SampledPoint> points;
    if (n == 0) return points;
    rng::Stream stream(seed, "phantom/sample-normal");
    return sample_mask(stack, stack.mask_contralateral, n, stream, "normal");
}

}  // namespace wsosvm::phantom
