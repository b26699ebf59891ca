#include "partvos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace partvos {

namespace {

void require_valid(const BoundingBox& b, const char* what) {
    if (!b.valid()) throw std::invalid_argument(std::string(what) + ": box with non-positive size");
}

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw std::invalid_argument(std::string(what) + ": mask dimensions differ");
    }
}

}  // namespace

long long intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const long long iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const long long ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    return (iw > 0 && ih > 0) ? iw * ih : 0;
}

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) noexcept {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

std::optional<BoundingBox> clip_box(const BoundingBox& box, int width, int height) noexcept {
    return intersect(box, BoundingBox{0, 0, width, height});
}

BoundingBox box_centered_at(double cx, double cy, int w, int h) noexcept {
    const int x = static_cast<int>(std::floor(cx - (w - 1) / 2.0 + 0.5));
    const int y = static_cast<int>(std::floor(cy - (h - 1) / 2.0 + 0.5));
    return BoundingBox{x, y, w, h};
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
    require_valid(a, "box_iou");
    require_valid(b, "box_iou");
    const long long inter = intersection_area(a, b);
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double containment_score(const BoundingBox& bbox, const BoundingBox& gtbox) {
    require_valid(bbox, "containment_score");
    require_valid(gtbox, "containment_score");
    return static_cast<double>(intersection_area(bbox, gtbox)) / static_cast<double>(bbox.area());
}

std::vector<std::size_t> nms(std::span<const BoundingBox> boxes, std::span<const double> scores,
                             double overlap_threshold) {
    if (boxes.size() != scores.size()) throw std::invalid_argument("nms: boxes and scores differ in length");
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<std::size_t> keep;
    std::vector<char> suppressed(boxes.size(), 0);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t i = order[oi];
        if (suppressed[i]) continue;
        keep.push_back(i);
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t j = order[oj];
            if (!suppressed[j] && box_iou(boxes[i], boxes[j]) > overlap_threshold) suppressed[j] = 1;
        }
    }
    return keep;
}

// ---------------------------------------------------------------------------
// BinaryMask

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("BinaryMask: dimensions must be positive");
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("BinaryMask: dimensions must be positive");
    if (bits_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("BinaryMask: bit count does not match dimensions");
    }
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

long long BinaryMask::count_in(const BoundingBox& box) const noexcept {
    const auto clipped = clip_box(box, width_, height_);
    if (!clipped) return 0;
    long long n = 0;
    for (int y = clipped->y; y < clipped->bottom(); ++y) {
        const auto* row = bits_.data() + static_cast<std::size_t>(y) * width_;
        for (int x = clipped->x; x < clipped->right(); ++x) n += row[x];
    }
    return n;
}

BinaryMask BinaryMask::crop(const BoundingBox& box) const {
    require_valid(box, "BinaryMask::crop");
    BinaryMask out(box.w, box.h);
    for (int y = 0; y < box.h; ++y) {
        for (int x = 0; x < box.w; ++x) {
            const int sx = box.x + x;
            const int sy = box.y + y;
            if (in_bounds(sx, sy) && (*this)(sx, sy)) out.set(x, y);
        }
    }
    return out;
}

void BinaryMask::paste(const BinaryMask& local, const BoundingBox& box) {
    for (int y = 0; y < local.height(); ++y) {
        for (int x = 0; x < local.width(); ++x) {
            const int dx = box.x + x;
            const int dy = box.y + y;
            if (in_bounds(dx, dy)) set(dx, dy, local(x, y));
        }
    }
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b, "mask_iou");
    std::size_t inter = 0;
    std::size_t uni = 0;
    const auto ab = a.bits();
    const auto bb = b.bits();
    for (std::size_t i = 0; i < ab.size(); ++i) {
        inter += ab[i] & bb[i];
        uni += ab[i] | bb[i];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<BoundingBox> mask_bounds(const BinaryMask& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return std::nullopt;
    return BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

BoundingBox tighten_box(const BoundingBox& box, const BinaryMask& mask) {
    const auto region = clip_box(box, mask.width(), mask.height());
    if (!region) return box;
    int x0 = region->right(), y0 = region->bottom(), x1 = -1, y1 = -1;
    for (int y = region->y; y < region->bottom(); ++y) {
        for (int x = region->x; x < region->right(); ++x) {
            if (!mask(x, y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return box;
    return BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

double mask_coverage(const BoundingBox& box, const BinaryMask& mask) {
    require_valid(box, "mask_coverage");
    return static_cast<double>(mask.count_in(box)) / static_cast<double>(box.area());
}

double mask_region_iou(const BoundingBox& box, const BinaryMask& mask) {
    require_valid(box, "mask_region_iou");
    const long long inter = mask.count_in(box);
    const auto clipped = clip_box(box, mask.width(), mask.height());
    const long long box_px = clipped ? clipped->area() : 0;
    const long long uni = box_px + static_cast<long long>(mask.count()) - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Components (two-pass union-find)

namespace {

int find_root(std::vector<int>& parent, int i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

std::vector<int> label_components(const BinaryMask& mask, int* count) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> labels(mask.size(), 0);
    std::vector<int> parent{0};

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int left = x > 0 ? labels[i - 1] : 0;
            const int up = y > 0 ? labels[i - w] : 0;
            if (left == 0 && up == 0) {
                const int fresh = static_cast<int>(parent.size());
                parent.push_back(fresh);
                labels[i] = fresh;
            } else if (left != 0 && up != 0) {
                const int rl = find_root(parent, left);
                const int ru = find_root(parent, up);
                const int lo = std::min(rl, ru);
                parent[rl] = lo;
                parent[ru] = lo;
                labels[i] = lo;
            } else {
                labels[i] = left != 0 ? left : up;
            }
        }
    }

    // Renumber roots in the order a raster scan first meets them.
    std::vector<int> final_label(parent.size(), 0);
    int next = 0;
    for (auto& l : labels) {
        if (l == 0) continue;
        const int root = find_root(parent, l);
        if (final_label[root] == 0) final_label[root] = ++next;
        l = final_label[root];
    }
    if (count) *count = next;
    return labels;
}

std::vector<Component> connected_components(const BinaryMask& mask) {
    int n = 0;
    const auto labels = label_components(mask, &n);
    const int w = mask.width();
    std::vector<Component> comps;
    comps.reserve(static_cast<std::size_t>(n));
    std::vector<int> x0(n + 1, w), y0(n + 1, mask.height()), x1(n + 1, -1), y1(n + 1, -1);
    for (int k = 0; k < n; ++k) comps.push_back(Component{BinaryMask(w, mask.height()), {}, 0});
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = labels[static_cast<std::size_t>(y) * w + x];
            if (l == 0) continue;
            auto& c = comps[static_cast<std::size_t>(l - 1)];
            c.mask.set(x, y);
            ++c.area;
            x0[l] = std::min(x0[l], x);
            y0[l] = std::min(y0[l], y);
            x1[l] = std::max(x1[l], x);
            y1[l] = std::max(y1[l], y);
        }
    }
    for (int l = 1; l <= n; ++l) {
        comps[static_cast<std::size_t>(l - 1)].box = BoundingBox{x0[l], y0[l], x1[l] - x0[l] + 1, y1[l] - y0[l] + 1};
    }
    std::stable_sort(comps.begin(), comps.end(),
                     [](const Component& a, const Component& b) { return a.area > b.area; });
    return comps;
}

// ---------------------------------------------------------------------------
// Morphology. The disc is decomposed into horizontal runs: row offset dy has
// half-width floor(sqrt(r² - dy²)). Each run is evaluated with a per-row
// prefix sum, so the cost is O(W·H·(2r+1)) independent of run length.

namespace {

std::vector<int> disc_half_widths(int radius) {
    std::vector<int> hw(static_cast<std::size_t>(2 * radius + 1));
    for (int dy = -radius; dy <= radius; ++dy) {
        int w = 0;
        while ((w + 1) * (w + 1) + dy * dy <= radius * radius) ++w;
        hw[static_cast<std::size_t>(dy + radius)] = w;
    }
    return hw;
}

BinaryMask dilate_or_erode(const BinaryMask& in, int radius, bool dilate) {
    const int w = in.width();
    const int h = in.height();
    const auto hw = disc_half_widths(radius);

    // prefix[y][x] = number of fg pixels in row y before column x
    std::vector<int> prefix(static_cast<std::size_t>(h) * (w + 1), 0);
    for (int y = 0; y < h; ++y) {
        int* p = prefix.data() + static_cast<std::size_t>(y) * (w + 1);
        for (int x = 0; x < w; ++x) p[x + 1] = p[x] + (in(x, y) ? 1 : 0);
    }

    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool result = !dilate;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int sy = y + dy;
                if (sy < 0 || sy >= h) continue;
                const int half = hw[static_cast<std::size_t>(dy + radius)];
                const int lo = std::max(0, x - half);
                const int hi = std::min(w, x + half + 1);
                const int* p = prefix.data() + static_cast<std::size_t>(sy) * (w + 1);
                const int ones = p[hi] - p[lo];
                if (dilate && ones > 0) {
                    result = true;
                    break;
                }
                if (!dilate && ones != hi - lo) {
                    result = false;
                    break;
                }
            }
            if (result) out.set(x, y);
        }
    }
    return out;
}

}  // namespace

BinaryMask morphology(const BinaryMask& mask, MorphOp op, int radius) {
    if (radius < 1) throw std::invalid_argument("morphology: radius must be >= 1");
    switch (op) {
        case MorphOp::dilate: return dilate_or_erode(mask, radius, true);
        case MorphOp::erode: return dilate_or_erode(mask, radius, false);
        case MorphOp::open: return dilate_or_erode(dilate_or_erode(mask, radius, false), radius, true);
        case MorphOp::close: return dilate_or_erode(dilate_or_erode(mask, radius, true), radius, false);
    }
    throw std::invalid_argument("morphology: unknown op");
}

// ---------------------------------------------------------------------------
// ScoreMap

ScoreMap::ScoreMap(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("ScoreMap: dimensions must be positive");
    if (!(fill >= 0.0 && fill <= 1.0)) throw std::invalid_argument("ScoreMap: fill outside [0,1]");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
}

ScoreMap::ScoreMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("ScoreMap: dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("ScoreMap: value count does not match dimensions");
    }
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("ScoreMap: value outside [0,1]");
    }
}

BinaryMask binarize(const ScoreMap& map, double threshold) {
    BinaryMask out(map.width(), map.height());
    const auto v = map.values();
    auto bits = out.bits();
    for (std::size_t i = 0; i < v.size(); ++i) bits[i] = v[i] > threshold ? 1 : 0;
    return out;
}

}  // namespace partvos
