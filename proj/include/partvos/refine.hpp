#pragma once

// Post-aggregation clean-up: attenuation outside the whole-object box and a
// morphological smoothing pass standing in for a dense CRF.

#include <span>

#include "partvos/aggregation.hpp"
#include "partvos/geometry.hpp"
#include "partvos/tracking.hpp"

namespace partvos {

// Scores outside `object_box` are multiplied by alpha in [0,1]; the centroid
// is recomputed at `threshold`.
FrameAggregate gate_by_object_box(const FrameAggregate& aggregate, const BoundingBox& object_box, double alpha,
                                  double threshold = 0.5);

// Whole-object box for gating: candidates are the external proposals followed
// by the connected-component boxes of the thresholded aggregate.
ObjectTrackResult select_object_box(const FrameAggregate& aggregate, const BoundingBox& previous,
                                    std::span<const BoundingBox> proposals, double threshold);

// Close then open with a disc of `radius` (>= 1).
BinaryMask morph_refine(const BinaryMask& mask, int radius);

}  // namespace partvos
