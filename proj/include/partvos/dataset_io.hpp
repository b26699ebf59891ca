#pragma once

// DAVIS-style sequences on disk: numbered frame images plus single-channel
// indexed annotation PNGs (palette index = instance label, 0 = background).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partvos/geometry.hpp"
#include "partvos/image.hpp"

namespace partvos {

class InstanceMask {
public:
    InstanceMask(int width, int height);
    InstanceMask(int width, int height, std::vector<std::uint8_t> labels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    std::uint8_t operator()(int x, int y) const noexcept {
        return labels_[static_cast<std::size_t>(y) * width_ + x];
    }
    void set(int x, int y, std::uint8_t label) noexcept {
        labels_[static_cast<std::size_t>(y) * width_ + x] = label;
    }

    std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    std::span<std::uint8_t> labels() noexcept { return labels_; }

    // Largest label present (0 for an all-background mask).
    int max_label() const noexcept;
    // Distinct nonzero labels in ascending order.
    std::vector<int> instance_ids() const;
    BinaryMask instance(int label) const;

    friend bool operator==(const InstanceMask&, const InstanceMask&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> labels_;
};

InstanceMask from_binary(const BinaryMask& mask, std::uint8_t label = 1);

struct FrameSequence {
    std::string name;
    std::vector<std::string> frame_ids;   // file stems, e.g. "00000"
    std::vector<RgbImage> frames;
    std::vector<std::optional<InstanceMask>> annotations;

    std::size_t size() const noexcept { return frames.size(); }
    int width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
    int height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
};

// Throws IoError when the first frame lacks an annotation, frames disagree in
// size, or a file cannot be decoded.
FrameSequence load_sequence(const std::filesystem::path& frames_dir,
                            const std::filesystem::path& annotations_dir);

// Image files in `dir` (jpg/jpeg/png) sorted by the integer value of their stem.
std::vector<std::filesystem::path> list_numbered_images(const std::filesystem::path& dir);

// Writes out_dir/<sequence_name>/<frame_id>.png for each mask. When
// `frame_ids` is empty, ids are the zero-padded frame index.
void save_masks(const std::string& sequence_name, std::span<const InstanceMask> masks,
                const std::filesystem::path& out_dir, std::span<const std::string> frame_ids = {});

// Annotation directory reader (all numbered PNGs, sorted).
std::vector<std::pair<std::string, InstanceMask>> load_masks(const std::filesystem::path& dir);

// -- image codecs -----------------------------------------------------------

RgbImage read_rgb(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

// Palette PNGs yield raw indices. Greyscale PNGs holding only {0,255} are
// treated as binary (255 -> 1); other greyscale values are labels directly.
InstanceMask read_instance_png(const std::filesystem::path& path);
void write_instance_png(const std::filesystem::path& path, const InstanceMask& mask);

// The 256-entry DAVIS colour palette.
const std::array<std::array<std::uint8_t, 3>, 256>& davis_palette();

std::string frame_id(std::size_t index);   // "%05zu"

// -- CSV --------------------------------------------------------------------

// Six significant digits, '.' decimal point.
std::string format_csv_number(double value);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string to_csv(const CsvTable& table);

// -- boxes files --------------------------------------------------------------

struct ScoredBox {
    BoundingBox box;
    double score = 0.0;
};

// One box per line: "x y w h [score]". Blank lines and '#' comments skipped.
std::vector<ScoredBox> read_boxes(const std::filesystem::path& path);
void write_boxes(const std::filesystem::path& path, std::span<const ScoredBox> boxes);

// -- synthetic sequences ----------------------------------------------------

enum class SynthShape { ellipse, rectangle };

struct SynthObject {
    SynthShape shape = SynthShape::ellipse;
    double cx = 0.0;          // frame-0 centre
    double cy = 0.0;
    double rx = 20.0;         // half extents before rotation
    double ry = 20.0;
    double dx = 0.0;          // translation per frame
    double dy = 0.0;
    double rot_deg = 0.0;     // rotation per frame
    std::array<double, 3> color{200.0, 60.0, 50.0};
    double texture_amplitude = 60.0;
    double texture_scale = 4.0;   // lattice spacing of the finest noise octave
};

struct SynthSpec {
    std::string name = "synth";
    int width = 160;
    int height = 120;
    int frames = 5;
    std::array<double, 3> background{40.0, 90.0, 170.0};
    double background_amplitude = 10.0;
    double noise_sigma = 0.0;   // per-frame additive Gaussian noise, grey levels
    std::vector<SynthObject> objects;   // later objects occlude earlier ones

    // key=value text: name width height frames noise bg.r bg.g bg.b bg.amp, and
    // per object objN.{shape,cx,cy,rx,ry,dx,dy,rot,r,g,b,amp,scale} for N = 1, 2, ...
    static SynthSpec from_text(std::string_view text);
};

// Built-in fixtures: "static", "translate" (480x854, 30 frames), "small"
// (160x120 translating), "pair" (two instances). Throws ConfigError otherwise.
SynthSpec synth_preset(std::string_view name);
std::vector<std::string> synth_preset_names();

// Pure function of (spec, seed); every frame carries its exact ground truth.
// Throws std::invalid_argument when an object leaves the frame.
FrameSequence synth_sequence(const SynthSpec& spec, std::uint64_t seed);

// Writes <root>/JPEGImages/<name>/NNNNN.png and <root>/Annotations/<name>/NNNNN.png.
void write_sequence(const std::filesystem::path& root, const FrameSequence& seq);

}  // namespace partvos
