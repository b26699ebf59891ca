#include "partvos/part_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "partvos/errors.hpp"
#include "partvos/rng.hpp"

namespace partvos {

std::vector<BoundingBox> sample_proposals(const BinaryMask& object_mask, int n, std::uint64_t seed,
                                          const PartConfig& cfg) {
    if (n < 1) throw std::invalid_argument("sample_proposals: n must be >= 1");
    const auto object_box = mask_bounds(object_mask);
    if (!object_box) throw std::invalid_argument("sample_proposals: empty object mask");

    const double ow = object_box->w;
    const double oh = object_box->h;
    const double x_lo = object_box->x - cfg.center_margin * ow;
    const double x_hi = object_box->right() + cfg.center_margin * ow;
    const double y_lo = object_box->y - cfg.center_margin * oh;
    const double y_hi = object_box->bottom() + cfg.center_margin * oh;
    const int fw = object_mask.width();
    const int fh = object_mask.height();

    Rng rng(seed);
    std::vector<BoundingBox> boxes;
    boxes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Continuous coordinates: pixel k spans [k, k+1).
        const double cx = rng.uniform(x_lo, x_hi);
        const double cy = rng.uniform(y_lo, y_hi);
        const int w = std::max(1, static_cast<int>(std::floor(rng.uniform(cfg.side_min, cfg.side_max) * ow + 0.5)));
        const int h = std::max(1, static_cast<int>(std::floor(rng.uniform(cfg.side_min, cfg.side_max) * oh + 0.5)));
        BoundingBox b{static_cast<int>(std::floor(cx - w / 2.0 + 0.5)), static_cast<int>(std::floor(cy - h / 2.0 + 0.5)),
                      w, h};
        auto clipped = clip_box(b, fw, fh);
        if (!clipped) {
            b.x = std::clamp(b.x, 0, fw - 1);
            b.y = std::clamp(b.y, 0, fh - 1);
            clipped = clip_box(b, fw, fh);
        }
        boxes.push_back(*clipped);
    }
    return boxes;
}

double proposal_overlap(const BoundingBox& box, const BinaryMask& object_mask, OverlapMeasure measure) {
    return measure == OverlapMeasure::coverage ? mask_coverage(box, object_mask) : mask_region_iou(box, object_mask);
}

double proposal_purity(const BoundingBox& box, const BoundingBox& object_box, const BinaryMask& object_mask,
                       PurityMode mode) {
    return mode == PurityMode::box ? containment_score(box, object_box) : mask_coverage(box, object_mask);
}

std::vector<Part> generate_parts(const BinaryMask& object_mask, const PartConfig& cfg, std::uint64_t seed,
                                 PartGenStats* stats) {
    const auto object_box = mask_bounds(object_mask);
    if (!object_box) throw std::invalid_argument("generate_parts: empty object mask");

    PartGenStats local;
    const auto proposals = sample_proposals(object_mask, cfg.n_proposals, seed, cfg);
    local.proposals = proposals.size();

    std::vector<BoundingBox> candidates;
    std::vector<double> scores;
    for (const auto& b : proposals) {
        const double overlap = proposal_overlap(b, object_mask, cfg.overlap);
        if (overlap < cfg.iou_min) continue;
        ++local.after_overlap;
        if (!(proposal_purity(b, *object_box, object_mask, cfg.purity) > cfg.purity_min)) continue;
        candidates.push_back(b);
        scores.push_back(overlap);
    }
    local.after_purity = candidates.size();

    const auto keep = nms(candidates, scores, cfg.nms_overlap);
    local.after_nms = keep.size();

    std::vector<Part> parts;
    const auto limit = std::min(keep.size(), static_cast<std::size_t>(cfg.max_count));
    parts.reserve(limit);
    for (std::size_t k = 0; k < limit; ++k) {
        const std::size_t i = keep[k];
        Part p;
        p.id = static_cast<int>(k);
        p.box = tighten_box(candidates[i], object_mask);
        p.local_mask = object_mask.crop(p.box);
        p.proposal_score = scores[i];
        parts.push_back(std::move(p));
    }
    local.emitted = parts.size();
    if (stats) *stats = local;

    if (parts.size() < static_cast<std::size_t>(cfg.min_count)) {
        throw PartGenerationError("generate_parts: only " + std::to_string(parts.size()) + " parts survived (minimum " +
                                      std::to_string(cfg.min_count) + ")",
                                  parts.size());
    }
    return parts;
}

}  // namespace partvos
