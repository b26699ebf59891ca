#include "partvos/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace partvos {

RgbImage::RgbImage(int width, int height)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("RgbImage: dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height * 3, 0);
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("RgbImage: dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
        throw std::invalid_argument("RgbImage: byte count does not match dimensions");
    }
}

Plane::Plane(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("Plane: dimensions must be positive");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Plane::Plane(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("Plane: dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("Plane: value count does not match dimensions");
    }
}

Plane luminance(const RgbImage& image) {
    Plane out(image.width(), image.height());
    const auto src = image.data();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = (0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2]) / 255.0;
    }
    return out;
}

Plane crop(const Plane& plane, const BoundingBox& box) {
    if (!box.valid() || box.x < 0 || box.y < 0 || box.right() > plane.width() || box.bottom() > plane.height()) {
        throw std::invalid_argument("crop: box outside plane");
    }
    Plane out(box.w, box.h);
    for (int y = 0; y < box.h; ++y) {
        const double* src = plane.values().data() + static_cast<std::size_t>(box.y + y) * plane.width() + box.x;
        std::copy(src, src + box.w, out.values().data() + static_cast<std::size_t>(y) * box.w);
    }
    return out;
}

namespace {

struct BilinearTap {
    int x0, x1, y0, y1;
    double ax, ay;
};

BilinearTap make_tap(double fx, double fy, int w, int h) noexcept {
    fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    return BilinearTap{x0, std::min(x0 + 1, w - 1), y0, std::min(y0 + 1, h - 1), fx - x0, fy - y0};
}

}  // namespace

double sample_bilinear(const Plane& plane, double fx, double fy) noexcept {
    const auto t = make_tap(fx, fy, plane.width(), plane.height());
    const double top = plane(t.x0, t.y0) * (1.0 - t.ax) + plane(t.x1, t.y0) * t.ax;
    const double bot = plane(t.x0, t.y1) * (1.0 - t.ax) + plane(t.x1, t.y1) * t.ax;
    return top * (1.0 - t.ay) + bot * t.ay;
}

std::array<double, 3> sample_bilinear(const RgbImage& image, double fx, double fy) noexcept {
    const auto t = make_tap(fx, fy, image.width(), image.height());
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const double top = image(t.x0, t.y0, c) * (1.0 - t.ax) + image(t.x1, t.y0, c) * t.ax;
        const double bot = image(t.x0, t.y1, c) * (1.0 - t.ax) + image(t.x1, t.y1, c) * t.ax;
        out[static_cast<std::size_t>(c)] = top * (1.0 - t.ay) + bot * t.ay;
    }
    return out;
}

}  // namespace partvos
