#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "partvos/geometry.hpp"

namespace partvos {

// 8-bit interleaved RGB frame.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height);
    RgbImage(int width, int height, std::vector<std::uint8_t> rgb);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t operator()(int x, int y, int c) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
        auto* p = data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Single-channel real-valued grid; used for grey-level tracking patches and
// per-pixel feature channels.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0);
    Plane(int width, int height, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double operator()(int x, int y) const noexcept {
        return values_[static_cast<std::size_t>(y) * width_ + x];
    }
    double& operator()(int x, int y) noexcept {
        return values_[static_cast<std::size_t>(y) * width_ + x];
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

// Rec.601 luma scaled to [0,1].
Plane luminance(const RgbImage& image);

// Box must lie inside the plane.
Plane crop(const Plane& plane, const BoundingBox& box);

// Bilinear sample at continuous pixel coordinates (pixel centres on integers),
// clamping to the border.
double sample_bilinear(const Plane& plane, double fx, double fy) noexcept;
std::array<double, 3> sample_bilinear(const RgbImage& image, double fx, double fy) noexcept;

}  // namespace partvos
