#pragma once

// The online segmentation loop: frame 0 builds the per-instance part models,
// every later frame is tracked, segmented, fused and emitted before the next
// frame is read.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "partvos/aggregation.hpp"
#include "partvos/config.hpp"
#include "partvos/dataset_io.hpp"
#include "partvos/eval.hpp"

namespace partvos {

// Sequential frame access. The pipeline reads frame t only after the mask of
// frame t-1 has been emitted.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::size_t size() const = 0;
    virtual RgbImage read(std::size_t index) = 0;
};

class MemorySource : public FrameSource {
public:
    explicit MemorySource(const FrameSequence& seq) : seq_(seq) {}
    std::size_t size() const override { return seq_.size(); }
    RgbImage read(std::size_t index) override { return seq_.frames.at(index); }

private:
    const FrameSequence& seq_;
};

// Decodes each numbered image on demand.
class DirectorySource : public FrameSource {
public:
    explicit DirectorySource(const std::filesystem::path& dir);
    std::size_t size() const override { return files_.size(); }
    RgbImage read(std::size_t index) override;
    std::vector<std::string> frame_ids() const;

private:
    std::vector<std::filesystem::path> files_;
};

struct PipelineHooks {
    // Called after the alive parts of one instance were segmented and before
    // their weights are computed; may edit the observation list.
    std::function<void(std::size_t frame, int label, std::vector<PartObservation>&)> after_segmentation;
    // Called with every output mask, in frame order.
    std::function<void(std::size_t frame, const InstanceMask&)> on_emit;
    // Called with every per-instance aggregate after refinement.
    std::function<void(std::size_t frame, int label, const FrameAggregate&)> on_aggregate;
};

struct TimingRecord {
    std::size_t frame = 0;
    std::string stage;
    double milliseconds = 0.0;
};

struct InstanceSummary {
    int label = 0;
    std::size_t parts = 0;
    double final_training_loss = 0.0;
    std::optional<std::size_t> lost_at;   // first frame without live parts
};

struct PipelineResult {
    std::vector<InstanceMask> masks;   // one per frame, frame 0 = the given annotation
    std::vector<TimingRecord> timing;
    std::vector<InstanceSummary> instances;
    std::vector<std::size_t> fallback_frames;   // frames where some instance reused its previous mask
    bool tracking_lost = false;
};

struct PipelineInputs {
    // Optional whole-object proposals per frame for the gating tracker.
    std::vector<std::vector<BoundingBox>> proposals;
};

// Throws std::invalid_argument when the annotation does not match the frame
// size or holds no instance.
PipelineResult run_pipeline(FrameSource& source, const InstanceMask& first_annotation, const RunConfig& cfg,
                            const PipelineHooks& hooks = {}, const PipelineInputs& inputs = {});

CsvTable timing_table(std::span<const TimingRecord> timing);

// Process exit status for a finished run: 0, or 2 when tracking was lost.
int exit_status(const PipelineResult& result) noexcept;

}  // namespace partvos
