#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsosvm/image.hpp"
#include "wsosvm/wso.hpp"

namespace wsosvm::maps {

inline constexpr std::int8_t kOutside = -1;

// Per-pixel ordinal class field over the tumoral AOI. A pixel gets a label
// exactly when its center lies in the AOI and the 8x8 window fits inside
// the image; everything else is kOutside.
struct PredictionMap {
    int width = 0;
    int height = 0;
    std::vector<std::int8_t> labels;
    std::string gene;
    std::uint64_t model_digest = 0;

    std::int8_t at(int row, int col) const {
        return labels[static_cast<std::size_t>(row) * width + col];
    }
    std::size_t count(int label) const;
    std::size_t classified_count() const;
};

struct Proportions {
    double altered = 0.0;      // class 2 fraction over classified pixels
    double non_altered = 0.0;  // class 1 fraction
    double class0 = 0.0;       // class 0 fraction
};

std::uint64_t model_digest(const wso::TrainedModel& model);

// Stride-1 sliding-window inference. jobs > 1 tiles the rows across
// threads; the output is bitwise identical for any jobs value.
PredictionMap predict_map(const wso::TrainedModel& model,
                          const image::ContrastStack& stack, const std::string& gene,
                          int jobs = 1);

// Fraction altered / non-altered over tumoral-classified pixels, plus the
// class-0 fraction over all classified pixels. Absent when nothing is
// classified as tumoral.
std::optional<std::pair<double, double>> tumoral_proportions(const PredictionMap& map);
double class0_fraction(const PredictionMap& map);

// Fractions of classes 2/1/0 over all classified pixels; they sum to one.
Proportions proportions(const PredictionMap& map);

enum class JointCategory : std::int8_t {
    outside = -1,  // either map outside or class 0
    none = 0,      // both genes non-altered
    a_only = 1,
    b_only = 2,
    both = 3,
};

struct JointMap {
    int width = 0;
    int height = 0;
    std::vector<std::int8_t> categories;

    JointCategory at(int row, int col) const {
        return static_cast<JointCategory>(
            categories[static_cast<std::size_t>(row) * width + col]);
    }
};

JointMap joint_map(const PredictionMap& map_a, const PredictionMap& map_b);

// P5 graymap with the fixed palette outside=0, class0=64, class1=128,
// class2=255, plus a CSV of the raw labels.
void render(const PredictionMap& map, const std::filesystem::path& pgm_path,
            const std::filesystem::path& csv_path);
// Joint palette: outside=0, none=32, A=128, B=192, both=255.
void render(const JointMap& map, const std::filesystem::path& pgm_path,
            const std::filesystem::path& csv_path);

std::vector<std::int8_t> read_label_csv(const std::filesystem::path& path, int& width,
                                        int& height);

// gene/proportions/digest/seed summary as a small JSON text file.
void write_map_summary(const PredictionMap& map, std::uint64_t seed,
                       const std::filesystem::path& path);

}  // namespace wsosvm::maps
