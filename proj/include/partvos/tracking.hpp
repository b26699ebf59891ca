#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "partvos/config.hpp"
#include "partvos/geometry.hpp"
#include "partvos/image.hpp"

namespace partvos {

// Score map over every valid placement of a template inside a search region:
// size (search.w - tmpl.w + 1) x (search.h - tmpl.h + 1).
struct TrackResponse {
    ScoreMap map{1, 1};
    bool degenerate = false;   // zero-variance template: uniform 0.5, no information
};

// Zero-normalised cross-correlation mapped from [-1,1] to [0,1]. The numerator
// is evaluated in the frequency domain; window statistics come from integral
// images. Windows with (numerically) zero variance score 0.5.
TrackResponse ncc_track(const Plane& tmpl, const Plane& search);

// Same quantity by direct summation over every placement. Slow; kept as the
// reference the FFT path is checked against.
TrackResponse ncc_track_spatial(const Plane& tmpl, const Plane& search);

struct Peak {
    int x = 0;
    int y = 0;
    double value = 0.0;
};

// Maximum value; ties resolve to the lowest row-major index.
Peak find_peak(std::span<const double> values, int width, int height);
inline Peak find_peak(const ScoreMap& map) { return find_peak(map.values(), map.width(), map.height()); }

struct TrackState {
    int part_id = 0;
    BoundingBox box;
    Plane tmpl;
    Plane initial_tmpl;
    double last_peak = 1.0;
    int low_streak = 0;   // consecutive frames with peak < peak_min
    bool alive = true;
};

// Template = grey-level patch under `box` in the first frame.
TrackState init_track_state(int part_id, const BoundingBox& box, const Plane& frame_luma);

// Search window: `box` scaled by `factor` about its centre, clipped to the frame.
std::optional<BoundingBox> search_region(const BoundingBox& box, double factor, int width, int height);

struct StepResult {
    std::optional<ScoreMap> map;   // empty when the part was (or just became) unusable
    BoundingBox box;
    TrackState state;
    bool confident = false;
};

// One tracking step for a live part. Throws std::invalid_argument for a dead one.
StepResult step_part(const TrackState& state, const Plane& next_luma, const TrackConfig& cfg);

// Every part stepped against the same frame. Output order follows input
// order; dead parts are passed through untouched with no map. Throws
// TrackingLostError when no input part is alive.
std::vector<StepResult> track_all_parts(std::span<const TrackState> states, const Plane& next_luma,
                                        const TrackConfig& cfg, int workers);
std::vector<StepResult> track_all_parts_serial(std::span<const TrackState> states, const Plane& next_luma,
                                               const TrackConfig& cfg);

struct ObjectTrackResult {
    BoundingBox box;
    std::optional<std::size_t> candidate;   // index into the candidate list
    bool fallback = false;                  // previous box reused
};

// Whole-object box: the candidate whose centre is closest to the segment
// centroid (ties: larger area, then lower index). Without a centroid the
// previous box centre is the reference. Without candidates the previous box
// is returned flagged.
ObjectTrackResult object_track(const BoundingBox& previous, std::optional<std::pair<double, double>> centroid,
                               std::span<const BoundingBox> candidates);

// 0.00, 0.05, ..., 1.00
std::vector<double> default_iou_thresholds();

// recall(t) = fraction of frames with box_iou(pred, gt) >= t.
std::vector<std::pair<double, double>> iou_recall_curve(std::span<const BoundingBox> pred,
                                                        std::span<const BoundingBox> gt,
                                                        std::span<const double> thresholds);

}  // namespace partvos
