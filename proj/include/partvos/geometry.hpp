#pragma once

// Pixel-grid primitives shared by every stage: boxes, binary masks, score
// maps and the handful of set operations the pipeline needs on them.
//
// Convention: a box (x, y, w, h) covers the integer pixels x..x+w-1 and
// y..y+h-1. Areas, intersections and IoU are exact pixel counts.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace partvos {

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int right() const noexcept { return x + w; }    // exclusive
    int bottom() const noexcept { return y + h; }   // exclusive
    long long area() const noexcept { return static_cast<long long>(w) * h; }
    bool valid() const noexcept { return w >= 1 && h >= 1; }
    double center_x() const noexcept { return x + (w - 1) / 2.0; }
    double center_y() const noexcept { return y + (h - 1) / 2.0; }
    bool contains(int px, int py) const noexcept {
        return px >= x && px < right() && py >= y && py < bottom();
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

long long intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;
std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) noexcept;

// Clips to [0,width)x[0,height); nullopt when nothing is left.
std::optional<BoundingBox> clip_box(const BoundingBox& box, int width, int height) noexcept;

// Box of size (w, h) whose center lands on (cx, cy), rounding to the pixel grid.
BoundingBox box_centered_at(double cx, double cy, int w, int h) noexcept;

double box_iou(const BoundingBox& a, const BoundingBox& b);
// area(bbox ∩ gtbox) / area(bbox)
double containment_score(const BoundingBox& bbox, const BoundingBox& gtbox);

// Greedy NMS. Boxes are visited by descending score (ties: lower index first);
// a box survives unless its IoU with an already kept box exceeds the threshold.
std::vector<std::size_t> nms(std::span<const BoundingBox> boxes, std::span<const double> scores,
                             double overlap_threshold);

class BinaryMask {
public:
    BinaryMask(int width, int height);
    BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool operator()(int x, int y) const noexcept {
        return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool on = true) noexcept {
        bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0;
    }
    bool in_bounds(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::span<std::uint8_t> bits() noexcept { return bits_; }

    std::size_t count() const noexcept;
    bool none() const noexcept { return count() == 0; }
    long long count_in(const BoundingBox& box) const noexcept;

    // Box-sized copy of the pixels under `box` (pixels outside the mask read as 0).
    BinaryMask crop(const BoundingBox& box) const;
    // Writes `local` into this mask with its top-left corner at (box.x, box.y).
    void paste(const BinaryMask& local, const BoundingBox& box);

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> bits_;
};

// |a ∧ b| / |a ∨ b|; 1.0 when both are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Tight box of all foreground pixels, nullopt for an empty mask.
std::optional<BoundingBox> mask_bounds(const BinaryMask& mask);

// Smallest box enclosing the foreground inside `box`; `box` itself when that
// region holds no foreground.
BoundingBox tighten_box(const BoundingBox& box, const BinaryMask& mask);

// Pixels of `mask` inside the box divided by the box area.
double mask_coverage(const BoundingBox& box, const BinaryMask& mask);
// |box ∩ mask| / |box ∪ mask| with the box taken as a pixel region.
double mask_region_iou(const BoundingBox& box, const BinaryMask& mask);

struct Component {
    BinaryMask mask;   // frame-sized, this component only
    BoundingBox box;
    std::size_t area = 0;
};

// 4-connected labelling; label k >= 1 numbered in raster order of each
// component's first pixel, 0 for background.
std::vector<int> label_components(const BinaryMask& mask, int* count = nullptr);
// Components sorted by descending area (ties keep raster order).
std::vector<Component> connected_components(const BinaryMask& mask);

enum class MorphOp { open, close, dilate, erode };

// Binary morphology with the disc {(dx,dy) : dx²+dy² <= r²}. Pixels outside
// the image are neutral: they never add foreground under dilation and never
// remove it under erosion.
BinaryMask morphology(const BinaryMask& mask, MorphOp op, int radius);

// Real-valued per-pixel map with every value in [0,1].
class ScoreMap {
public:
    ScoreMap(int width, int height, double fill = 0.0);
    // Throws std::invalid_argument if any value is non-finite or outside [0,1].
    ScoreMap(int width, int height, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator()(int x, int y) const noexcept {
        return values_[static_cast<std::size_t>(y) * width_ + x];
    }
    // Caller guarantees v in [0,1].
    void set(int x, int y, double v) noexcept {
        values_[static_cast<std::size_t>(y) * width_ + x] = v;
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

private:
    int width_;
    int height_;
    std::vector<double> values_;
};

// Foreground iff value > threshold.
BinaryMask binarize(const ScoreMap& map, double threshold);

}  // namespace partvos
