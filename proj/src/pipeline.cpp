#include "partvos/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "partvos/errors.hpp"
#include "partvos/parallel.hpp"
#include "partvos/part_gen.hpp"
#include "partvos/refine.hpp"
#include "partvos/rng.hpp"
#include "partvos/tracking.hpp"

namespace partvos {

DirectorySource::DirectorySource(const std::filesystem::path& dir) : files_(list_numbered_images(dir)) {
    if (files_.empty()) throw IoError("no frames in " + dir.string());
}

RgbImage DirectorySource::read(std::size_t index) { return read_rgb(files_.at(index)); }

std::vector<std::string> DirectorySource::frame_ids() const {
    std::vector<std::string> ids;
    for (const auto& f : files_) ids.push_back(f.stem().string());
    return ids;
}

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
public:
    StageTimer(std::vector<TimingRecord>& log, std::size_t frame) : log_(log), frame_(frame) {}
    template <typename Fn>
    decltype(auto) operator()(const char* stage, Fn&& fn) {
        const auto start = Clock::now();
        struct Record {
            StageTimer& t;
            const char* stage;
            Clock::time_point start;
            ~Record() {
                const std::chrono::duration<double, std::milli> ms = Clock::now() - start;
                t.add(stage, ms.count());
            }
        } record{*this, stage, start};
        return fn();
    }
    void add(const std::string& stage, double ms) {
        auto it = std::find_if(log_.begin(), log_.end(),
                               [&](const TimingRecord& r) { return r.frame == frame_ && r.stage == stage; });
        if (it == log_.end()) {
            log_.push_back({frame_, stage, ms});
        } else {
            it->milliseconds += ms;
        }
    }

private:
    std::vector<TimingRecord>& log_;
    std::size_t frame_;
};

struct InstanceState {
    int label = 0;
    SegmenterModel model;
    InitialPartBank bank;
    std::vector<TrackState> tracks;
    ScoreMap previous{1, 1};   // last emitted mask as a 0/1 map
    BoundingBox object_box;
    bool lost = false;
};

ScoreMap as_score_map(const BinaryMask& mask) {
    std::vector<double> v(mask.bits().begin(), mask.bits().end());
    return ScoreMap(mask.width(), mask.height(), std::move(v));
}

void compute_weights(const RgbImage& frame, std::vector<PartObservation>& obs, const InstanceState& inst,
                     const RunConfig& cfg) {
    parallel_for(obs.size(), cfg.workers, [&](std::size_t i) {
        auto& o = obs[i];
        const auto part_mask = binarize(o.map, cfg.agg.binarize_threshold);
        const auto feature = part_feature(frame, o.box, part_mask, inst.model);
        const auto nearest = nearest_initial(feature, inst.bank);
        o.weight = nearest.index < 0 ? 0.0
                                     : similarity_weight(nearest.distance, inst.bank.sigma) *
                                           inst.bank.entries[static_cast<std::size_t>(nearest.index)].confidence;
    });
}

}  // namespace

PipelineResult run_pipeline(FrameSource& source, const InstanceMask& first_annotation, const RunConfig& cfg,
                            const PipelineHooks& hooks, const PipelineInputs& inputs) {
    cfg.validate();
    if (source.size() == 0) throw std::invalid_argument("run_pipeline: empty sequence");
    PipelineResult result;
    const auto labels = first_annotation.instance_ids();
    if (labels.empty()) throw std::invalid_argument("run_pipeline: first annotation has no instance");

    const RgbImage frame0 = source.read(0);
    const int width = frame0.width();
    const int height = frame0.height();
    if (first_annotation.width() != width || first_annotation.height() != height) {
        throw std::invalid_argument("run_pipeline: annotation size differs from the frames");
    }

    // Frame 0: parts, segmenter and bank per instance.
    std::vector<InstanceState> instances;
    {
        StageTimer timer(result.timing, 0);
        const Plane luma0 = luminance(frame0);
        for (int label : labels) {
            InstanceState inst;
            inst.label = label;
            const auto mask = first_annotation.instance(label);
            const auto seed = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(label));
            const auto parts = timer("parts", [&] { return generate_parts(mask, cfg.parts, derive_seed(seed, 1)); });
            const auto trained = timer("train", [&] {
                return train_segmenter(frame0, mask, parts, cfg.seg, derive_seed(seed, 2), cfg.workers);
            });
            inst.model = trained.model;
            inst.bank = timer("bank", [&] { return build_bank(frame0, mask, parts, inst.model, cfg.agg, cfg.workers); });
            for (const auto& p : parts) inst.tracks.push_back(init_track_state(p.id, p.box, luma0));
            inst.previous = as_score_map(mask);
            inst.object_box = *mask_bounds(mask);
            result.instances.push_back({label, parts.size(), trained.final_loss, std::nullopt});
            instances.push_back(std::move(inst));
        }
    }
    result.masks.push_back(first_annotation);
    if (hooks.on_emit) hooks.on_emit(0, first_annotation);

    std::vector<std::uint8_t> label_bytes;
    for (int l : labels) label_bytes.push_back(static_cast<std::uint8_t>(l));

    for (std::size_t t = 1; t < source.size(); ++t) {
        StageTimer timer(result.timing, t);
        const RgbImage frame = timer("read", [&] { return source.read(t); });
        if (frame.width() != width || frame.height() != height) {
            throw IoError("frame " + std::to_string(t) + " differs in size from frame 0");
        }
        const Plane luma = luminance(frame);
        bool fallback = false;
        std::vector<ScoreMap> maps;

        for (std::size_t k = 0; k < instances.size(); ++k) {
            auto& inst = instances[k];
            if (inst.lost) {
                maps.push_back(inst.previous);
                fallback = true;
                continue;
            }

            std::vector<StepResult> steps;
            try {
                steps = timer("track", [&] { return track_all_parts(inst.tracks, luma, cfg.track, cfg.workers); });
            } catch (const TrackingLostError&) {
                inst.lost = true;
                result.tracking_lost = true;
                result.instances[k].lost_at = t;
                maps.push_back(inst.previous);
                fallback = true;
                continue;
            }
            std::vector<BoundingBox> boxes;
            std::vector<int> ids;
            for (std::size_t i = 0; i < steps.size(); ++i) {
                inst.tracks[i] = steps[i].state;
                if (inst.tracks[i].alive) {
                    boxes.push_back(steps[i].box);
                    ids.push_back(inst.tracks[i].part_id);
                }
            }

            std::vector<PartObservation> obs;
            timer("segment", [&] {
                auto part_maps = segment_parts(frame, boxes, inst.model, cfg.workers);
                obs.reserve(part_maps.size());
                for (std::size_t i = 0; i < part_maps.size(); ++i) {
                    obs.push_back({ids[i], boxes[i], std::move(part_maps[i]), 1.0});
                }
            });
            if (hooks.after_segmentation) hooks.after_segmentation(t, inst.label, obs);
            if (cfg.agg.mode == AggMode::seg) timer("weight", [&] { compute_weights(frame, obs, inst, cfg); });

            if (obs.empty()) {
                maps.push_back(inst.previous);
                fallback = true;
                continue;
            }
            auto agg = timer("aggregate", [&] { return aggregate(obs, cfg.agg, width, height, cfg.workers); });
            if (cfg.refine.gate) {
                timer("refine", [&] {
                    static const std::vector<BoundingBox> none;
                    const auto& proposals = t < inputs.proposals.size() ? inputs.proposals[t] : none;
                    const auto selected =
                        select_object_box(agg, inst.object_box, proposals, cfg.agg.binarize_threshold);
                    inst.object_box = selected.box;
                    agg = gate_by_object_box(agg, selected.box, cfg.refine.alpha, cfg.agg.binarize_threshold);
                });
            }
            if (hooks.on_aggregate) hooks.on_aggregate(t, inst.label, agg);
            maps.push_back(std::move(agg.score_map));
        }

        auto mask = timer("resolve", [&] {
            auto m = resolve_instances(maps, label_bytes, cfg.agg.binarize_threshold);
            if (cfg.refine.morph) {
                InstanceMask smoothed(width, height);
                for (int l : labels) {
                    const auto refined = morph_refine(m.instance(l), cfg.refine.radius);
                    for (std::size_t p = 0; p < refined.bits().size(); ++p) {
                        if (refined.bits()[p] && smoothed.labels()[p] == 0) {
                            smoothed.labels()[p] = static_cast<std::uint8_t>(l);
                        }
                    }
                }
                m = std::move(smoothed);
            }
            return m;
        });
        for (std::size_t k = 0; k < instances.size(); ++k) {
            if (!instances[k].lost) instances[k].previous = as_score_map(mask.instance(instances[k].label));
        }
        if (fallback) result.fallback_frames.push_back(t);
        if (hooks.on_emit) hooks.on_emit(t, mask);
        result.masks.push_back(std::move(mask));
    }
    return result;
}

CsvTable timing_table(std::span<const TimingRecord> timing) {
    CsvTable t;
    t.header = {"frame", "stage", "milliseconds"};
    for (const auto& r : timing) {
        t.rows.push_back({std::to_string(r.frame), r.stage, format_csv_number(r.milliseconds)});
    }
    return t;
}

int exit_status(const PipelineResult& result) noexcept { return result.tracking_lost ? 2 : 0; }

}  // namespace partvos
