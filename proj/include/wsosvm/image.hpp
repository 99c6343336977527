#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsosvm/common.hpp"

namespace wsosvm::image {

// Row-major 2-D float plane. float32 in memory so the WSOPLANE file format
// round-trips bit-exactly.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, float fill = 0.0f)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    float at(int row, int col) const {
        return data_[static_cast<std::size_t>(row) * width_ + col];
    }
    float& at(int row, int col) {
        return data_[static_cast<std::size_t>(row) * width_ + col];
    }
    const float* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * width_; }
    float* row(int r) { return data_.data() + static_cast<std::size_t>(r) * width_; }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    bool same_shape(const Plane& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

// Multi-channel stack with the region masks and (for phantoms) planted
// per-gene truth label planes. Masks are 0.0/1.0 planes; truth planes hold
// 0 outside the tumoral AOI and 1/2 inside.
struct ContrastStack {
    int width = 0;
    int height = 0;
    std::vector<std::string> channel_names;
    std::vector<Plane> channels;
    Plane mask_ce;
    Plane mask_ne;
    Plane mask_necrosis;
    Plane mask_contralateral;
    std::vector<std::string> truth_genes;
    std::vector<Plane> truth;

    int channel_index(const std::string& name) const;
    int truth_index(const std::string& gene) const;
    bool in_aoi(int row, int col) const {
        return mask_ce.at(row, col) != 0.0f || mask_ne.at(row, col) != 0.0f;
    }
};

// WSOPLANE v1: "WSOPLANE 1 <width> <height>\n" + row-major little-endian
// float32 payload.
void write_plane(const Plane& plane, const std::filesystem::path& path);
Plane read_plane(const std::filesystem::path& path);

// Stack manifest: a text file listing the plane files of every channel,
// mask, and truth plane, with paths relative to the manifest location.
void write_stack(const ContrastStack& stack, const std::filesystem::path& manifest_path);
ContrastStack read_stack(const std::filesystem::path& manifest_path);

}  // namespace wsosvm::image
