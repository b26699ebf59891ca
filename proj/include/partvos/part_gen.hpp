#pragma once

#include <cstdint>
#include <vector>

#include "partvos/config.hpp"
#include "partvos/geometry.hpp"

namespace partvos {

// A tracked unit of the object. `local_mask` is box-sized: the object pixels
// inside the box at initialisation, later the segmenter's binarised output.
struct Part {
    int id = 0;
    BoundingBox box;
    BinaryMask local_mask{1, 1};
    std::vector<double> feature;
    double sim_weight = 1.0;
    double con_weight = 1.0;
    double proposal_score = 0.0;   // overlap with the object that ranked it in NMS
};

// Counts after each filtering stage, for diagnostics.
struct PartGenStats {
    std::size_t proposals = 0;
    std::size_t after_overlap = 0;
    std::size_t after_purity = 0;
    std::size_t after_nms = 0;
    std::size_t emitted = 0;
};

// n random boxes around the object: centres uniform over the object's tight
// box grown by cfg.center_margin per side, width and height drawn
// independently in [side_min, side_max] of the object box, clipped to the
// frame. Throws std::invalid_argument for an empty mask or n < 1.
std::vector<BoundingBox> sample_proposals(const BinaryMask& object_mask, int n, std::uint64_t seed,
                                          const PartConfig& cfg = {});

double proposal_overlap(const BoundingBox& box, const BinaryMask& object_mask, OverlapMeasure measure);
double proposal_purity(const BoundingBox& box, const BoundingBox& object_box, const BinaryMask& object_mask,
                       PurityMode mode);

// sample -> overlap filter -> purity filter -> NMS -> tighten -> cap.
// Throws PartGenerationError when fewer than cfg.min_count parts survive.
std::vector<Part> generate_parts(const BinaryMask& object_mask, const PartConfig& cfg, std::uint64_t seed,
                                 PartGenStats* stats = nullptr);

}  // namespace partvos
