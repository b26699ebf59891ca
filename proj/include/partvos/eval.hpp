#pragma once

// Region similarity (J) and boundary accuracy (F), per frame and per sequence.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partvos/dataset_io.hpp"
#include "partvos/geometry.hpp"

namespace partvos {

// Intersection over union; two empty masks score 1.
double j_frame(const BinaryMask& pred, const BinaryMask& gt);

// Foreground pixels with a background 4-neighbour or on the image border.
BinaryMask boundary_pixels(const BinaryMask& mask);

// ceil(0.008 * frame diagonal)
int default_boundary_tolerance(int width, int height);

// Boundary F-measure; a boundary pixel matches when the other boundary lies
// within Euclidean distance `tolerance` (0 means exact coincidence).
double f_frame(const BinaryMask& pred, const BinaryMask& gt, int tolerance);

struct SequenceStats {
    double mean = 0.0;
    double recall = 0.0;   // fraction of frames scoring above 0.5
    double decay = 0.0;    // first-quarter mean minus last-quarter mean
    bool decay_undefined = false;   // fewer than four frames
};

// Statistics over the values as given (the caller drops the annotated first
// frame). Throws std::invalid_argument for an empty list.
SequenceStats sequence_stats(std::span<const double> values);

struct SequenceReport {
    std::string name;
    std::vector<int> instances;            // evaluated labels, ascending
    std::vector<std::size_t> frames;       // evaluated frame indices
    std::vector<double> j;                 // per frame, mean over instances
    std::vector<double> f;
    std::vector<std::vector<double>> j_instance;   // [instance][frame]
    std::vector<std::vector<double>> f_instance;
    SequenceStats j_stats;
    SequenceStats f_stats;
};

// Frame 0 and frames without ground truth are skipped. Instances are the
// labels present in the first annotation. tolerance <= 0 selects the default.
SequenceReport evaluate_sequence(const std::string& name, std::span<const InstanceMask> pred,
                                 std::span<const std::optional<InstanceMask>> gt, int tolerance = 0);

struct MetricReport {
    std::vector<SequenceReport> sequences;
    SequenceStats j;   // means of the per-sequence statistics
    SequenceStats f;
};

MetricReport summarize(std::vector<SequenceReport> sequences);

// frame_index,J,F and, for several instances, J_<k>,F_<k> per instance.
CsvTable frame_table(const SequenceReport& report);

// Aligned plain-text table, one row per sequence plus the overall mean.
std::string summary_table(const MetricReport& report);

}  // namespace partvos
