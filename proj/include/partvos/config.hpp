#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace partvos {

// How the proposal filter scores a box against the object mask.
enum class OverlapMeasure {
    coverage,   // |box ∩ mask| / |box|
    mask_iou,   // |box ∩ mask| / |box ∪ mask|
};

// Denominator of the purity score S_p.
enum class PurityMode {
    box,     // area(bbox ∩ gtbox) / area(bbox)
    pixel,   // object pixels in bbox / area(bbox)
};

enum class AggMode { ave, seg };

struct PartConfig {
    int n_proposals = 2000;
    double iou_min = 0.3;
    double purity_min = 0.7;
    double nms_overlap = 0.5;
    int max_count = 300;
    int min_count = 10;
    OverlapMeasure overlap = OverlapMeasure::coverage;
    PurityMode purity = PurityMode::box;
    double center_margin = 0.1;   // expansion of the object box per side
    double side_min = 0.2;        // proposal side, fraction of the object box
    double side_max = 0.6;
};

struct TrackConfig {
    double search_factor = 2.5;
    double peak_min = 0.55;
    int patience = 3;
    double template_blend = 0.7;   // weight of the freshly tracked patch
};

struct SegConfig {
    int patch_size = 80;
    double lr = 0.1;
    int epochs = 500;
    int batch = 100;
    int augment_copies = 4;
    int pixels_per_patch = 64;
};

struct AggConfig {
    AggMode mode = AggMode::seg;
    bool strict_eq5 = false;
    double binarize_threshold = 0.5;
    double sigma_floor = 1e-6;
};

struct RefineConfig {
    bool gate = false;
    double alpha = 0.3;
    bool morph = false;
    int radius = 2;
};

struct EvalConfig {
    int boundary_tolerance = 0;   // 0: ceil(0.8% of the frame diagonal)
};

struct RunConfig {
    PartConfig parts;
    TrackConfig track;
    SegConfig seg;
    AggConfig agg;
    RefineConfig refine;
    EvalConfig eval;
    std::uint64_t rng_seed = 1;
    int workers = 0;   // 0: OpenMP default

    // Sets one key; throws ConfigError for an unknown key or malformed value.
    void set(std::string_view key, std::string_view value);
    std::string get(std::string_view key) const;

    // Throws ConfigError naming the first out-of-range parameter.
    void validate() const;

    // "key=value" lines in registry order.
    std::string to_text() const;

    static std::vector<std::string> keys();
    // Human-readable description of a key with its valid range.
    static std::string describe(std::string_view key);

    // Reads a key=value file ('#' starts a comment; blank lines ignored).
    static RunConfig from_file(const std::filesystem::path& path);
    void apply_text(std::string_view text, std::string_view origin = "<text>");
    void apply_overrides(const std::vector<std::string>& assignments);
};

std::string_view to_string(AggMode mode) noexcept;

}  // namespace partvos
