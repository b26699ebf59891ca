#pragma once

// Per-part foreground segmentation. Each ROI is resampled to a square patch,
// described per pixel by a fixed feature stack, and classified by a logistic
// model trained with class-balanced cross-entropy.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "partvos/config.hpp"
#include "partvos/geometry.hpp"
#include "partvos/image.hpp"
#include "partvos/part_gen.hpp"

namespace partvos {

// Per-pixel channels: r, g, b in [0,1]; 5x5 mean of r, g, b; 5x5 standard
// deviation of r, g, b; luma gradient magnitude.
inline constexpr int kFeatureChannels = 10;

struct SegmenterModel {
    int patch_size = 80;
    std::vector<double> weights = std::vector<double>(kFeatureChannels, 0.0);
    double bias = 0.0;

    int channels() const noexcept { return static_cast<int>(weights.size()); }
};

// Maps patch pixel (u, v) to continuous frame coordinates. The identity warp
// of a box reproduces plain crop-and-resize.
struct PatchWarp {
    double center_x = 0.0;   // box centre, pixel-edge coordinates
    double center_y = 0.0;
    double step_x = 1.0;     // frame pixels per patch pixel
    double step_y = 1.0;
    double angle = 0.0;      // radians
    bool flip = false;

    static PatchWarp identity(const BoundingBox& box, int patch_size);
    // Frame pixel-centre coordinates of patch pixel (u, v).
    std::pair<double, double> map(int u, int v, int patch_size) const noexcept;
};

struct AlignedPatch {
    BoundingBox box;
    int size = 0;
    std::array<Plane, 3> rgb;   // [0,1]
};

// Crop `box` and bilinearly resample it to patch_size x patch_size.
// Throws std::invalid_argument for a degenerate box or one outside the frame.
AlignedPatch align_patch(const RgbImage& frame, const BoundingBox& box, int patch_size);
AlignedPatch warp_patch(const RgbImage& frame, const BoundingBox& box, const PatchWarp& warp, int patch_size);

// Bilinear resample of a patch-grid map back onto the box grid.
Plane project_to_box(const Plane& patch_map, const BoundingBox& box);

std::vector<Plane> pixel_features(const AlignedPatch& patch);

struct WceResult {
    double loss = 0.0;
    std::vector<double> grad;   // dL/dlogit per pixel
    double fg_weight = 0.0;     // the w of the loss
    bool degenerate = false;    // label mask was all-fg or all-bg; w clamped
};

inline constexpr double kProbEpsilon = 1e-7;

// L = -(1-w) Σ_fg log p - w Σ_bg log(1-p), w = |fg| / (|fg|+|bg|), with p
// clamped to [ε, 1-ε]. The gradient is taken w.r.t. the logit z, p = σ(z).
WceResult wce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels);
WceResult wce_loss(const ScoreMap& probs, const BinaryMask& labels);

struct TrainResult {
    SegmenterModel model;
    double final_loss = 0.0;
    std::vector<double> loss_history;   // mean per-pixel loss, one entry per epoch
    std::size_t patches = 0;
};

// Logistic model over pixel_features fitted by mini-batch SGD on every part
// patch plus cfg.augment_copies random flip/shift/scale/rotate copies of each.
// Deterministic in `seed`. Throws TrainingDivergedError on a non-finite loss.
TrainResult train_segmenter(const RgbImage& frame0, const BinaryMask& object_mask, std::span<const Part> parts,
                            const SegConfig& cfg, std::uint64_t seed, int workers = 1);

// Foreground probability per box pixel, strictly inside (0,1).
ScoreMap segment_part(const RgbImage& frame, const BoundingBox& box, const SegmenterModel& model);

std::vector<ScoreMap> segment_parts(const RgbImage& frame, std::span<const BoundingBox> boxes,
                                    const SegmenterModel& model, int workers);
std::vector<ScoreMap> segment_parts_serial(const RgbImage& frame, std::span<const BoundingBox> boxes,
                                           const SegmenterModel& model);

struct FeatureVector {
    std::vector<double> values;   // unit L2 norm unless empty
    bool empty = true;            // no foreground pixel to pool over
};

// Mean of pixel_features over the foreground of `part_mask` (box-sized),
// L2-normalised.
FeatureVector part_feature(const RgbImage& frame, const BoundingBox& box, const BinaryMask& part_mask,
                           const SegmenterModel& model);

// "PVSM", u32 version, u32 K, u32 patch_size, then K weights and the bias as
// f64; all little-endian.
void save_model(const std::filesystem::path& path, const SegmenterModel& model);
SegmenterModel load_model(const std::filesystem::path& path);

}  // namespace partvos
