#include "partvos/refine.hpp"

#include <stdexcept>
#include <vector>

namespace partvos {

FrameAggregate gate_by_object_box(const FrameAggregate& aggregate, const BoundingBox& object_box, double alpha,
                                  double threshold) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("gate_by_object_box: alpha outside [0,1]");
    if (!object_box.valid()) throw std::invalid_argument("gate_by_object_box: degenerate box");
    FrameAggregate out = aggregate;
    if (alpha == 1.0) return out;
    auto& map = out.score_map;
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (!object_box.contains(x, y)) map.set(x, y, map(x, y) * alpha);
        }
    }
    out.centroid = mass_centroid(map, threshold);
    return out;
}

ObjectTrackResult select_object_box(const FrameAggregate& aggregate, const BoundingBox& previous,
                                    std::span<const BoundingBox> proposals, double threshold) {
    std::vector<BoundingBox> candidates(proposals.begin(), proposals.end());
    for (const auto& c : connected_components(binarize(aggregate.score_map, threshold))) candidates.push_back(c.box);
    return object_track(previous, aggregate.centroid, candidates);
}

BinaryMask morph_refine(const BinaryMask& mask, int radius) {
    if (radius < 1) throw std::invalid_argument("morph_refine: radius must be at least 1");
    return morphology(morphology(mask, MorphOp::close, radius), MorphOp::open, radius);
}

}  // namespace partvos
