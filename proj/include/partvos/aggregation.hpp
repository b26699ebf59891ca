#pragma once

// Fusion of per-part score maps into a frame-level map. Each part is matched
// to its most similar initial part; the match distance and that initial
// part's self-segmentation quality weight its vote.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "partvos/config.hpp"
#include "partvos/dataset_io.hpp"
#include "partvos/geometry.hpp"
#include "partvos/roi_segment.hpp"

namespace partvos {

struct BankEntry {
    int part_id = 0;
    FeatureVector feature;
    double confidence = 0.0;   // local IoU of the segmenter's frame-0 output
    BoundingBox box;
    BinaryMask local_mask{1, 1};
};

// Built once from frame 0 and never modified.
struct InitialPartBank {
    std::vector<BankEntry> entries;
    double sigma = 1.0;   // median pairwise squared feature distance, floored

    std::size_t size() const noexcept { return entries.size(); }
};

// Median of the pairwise squared distances between non-empty features; the
// average of the two middle values for an even count. Returns `floor` when
// fewer than two features exist or the median is smaller.
double bank_sigma(std::span<const BankEntry> entries, double floor);

InitialPartBank build_bank(const RgbImage& frame0, const BinaryMask& object_mask, std::span<const Part> parts,
                           const SegmenterModel& model, const AggConfig& cfg, int workers = 1);

struct NearestPart {
    int index = -1;   // -1 for an empty query feature
    double distance = 0.0;   // squared L2; +inf for an empty query
};

NearestPart nearest_initial(const FeatureVector& feature, const InitialPartBank& bank);

// exp(-d / sigma). An infinite distance gives 0.
double similarity_weight(double distance, double sigma);

// One tracked part's vote: its box-sized map placed at `box` (inside the
// frame) with scalar weight S_sim * S_con.
struct PartObservation {
    int part_id = 0;
    BoundingBox box;
    ScoreMap map{1, 1};
    double weight = 1.0;
};

struct Contribution {
    int part_id = 0;
    BoundingBox box;
    double weight = 0.0;
};

struct FrameAggregate {
    ScoreMap score_map{1, 1};
    std::vector<Contribution> contributions;   // ascending part id
    std::optional<std::pair<double, double>> centroid;   // of pixels above the threshold
    bool empty = false;   // no observation was available
};

// Per-pixel fusion. Mode ave averages the placed maps, mode seg weights each
// by its scalar weight. By default each pixel is normalised by the parts
// covering it (uncovered pixels score 0); with cfg.strict_eq5 the (weighted)
// sum is divided by the number of parts instead.
// Summation runs in ascending part id order, so the result does not depend
// on the order of `observations` nor on the worker count.
FrameAggregate aggregate(std::span<const PartObservation> observations, const AggConfig& cfg, int width,
                         int height, int workers = 1);
// Part-major reference implementation; bit-identical to aggregate().
FrameAggregate aggregate_serial(std::span<const PartObservation> observations, const AggConfig& cfg, int width,
                                int height);

std::optional<std::pair<double, double>> mass_centroid(const ScoreMap& map, double threshold);

BinaryMask binarize_frame(const FrameAggregate& aggregate, double threshold);

// Label of each pixel = labels[k] of the instance with the highest score if
// that score exceeds `threshold`, else 0. Ties go to the earlier instance.
InstanceMask resolve_instances(std::span<const ScoreMap> maps, std::span<const std::uint8_t> labels,
                               double threshold);

}  // namespace partvos
