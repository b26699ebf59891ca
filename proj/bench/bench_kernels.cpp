// Parallel kernels against their serial references on a 854x480 frame with
// 100 parts. Arguments of the parallel variants are worker counts.

#include <benchmark/benchmark.h>

#include <vector>

#include "partvos/aggregation.hpp"
#include "partvos/dataset_io.hpp"
#include "partvos/part_gen.hpp"
#include "partvos/roi_segment.hpp"
#include "partvos/tracking.hpp"

using namespace partvos;

namespace {

struct Scene {
    FrameSequence seq;
    std::vector<Part> parts;
    std::vector<BoundingBox> boxes;
    std::vector<TrackState> tracks;
    Plane next_luma{1, 1};
    SegmenterModel model;
    std::vector<PartObservation> observations;
};

const Scene& scene() {
    static const Scene s = [] {
        Scene s;
        auto spec = synth_preset("translate");
        spec.frames = 2;
        s.seq = synth_sequence(spec, 1);
        const auto mask = s.seq.annotations[0]->instance(1);
        PartConfig pc;
        pc.max_count = 100;
        s.parts = generate_parts(mask, pc, 1);
        SegConfig sc;
        sc.epochs = 20;
        sc.augment_copies = 1;
        s.model = train_segmenter(s.seq.frames[0], mask, s.parts, sc, 1).model;
        const auto luma0 = luminance(s.seq.frames[0]);
        for (const auto& p : s.parts) {
            s.boxes.push_back(p.box);
            s.tracks.push_back(init_track_state(p.id, p.box, luma0));
        }
        s.next_luma = luminance(s.seq.frames[1]);
        const auto maps = segment_parts_serial(s.seq.frames[1], s.boxes, s.model);
        for (std::size_t i = 0; i < maps.size(); ++i) {
            s.observations.push_back({s.parts[i].id, s.boxes[i], maps[i], 0.5 + 0.005 * static_cast<double>(i)});
        }
        return s;
    }();
    return s;
}

void BM_ncc_fft(benchmark::State& state) {
    const auto& s = scene();
    const auto& t = s.tracks.front();
    const auto search = crop(s.next_luma, *search_region(t.box, 2.5, s.seq.width(), s.seq.height()));
    for (auto _ : state) benchmark::DoNotOptimize(ncc_track(t.tmpl, search));
}

void BM_ncc_spatial(benchmark::State& state) {
    const auto& s = scene();
    const auto& t = s.tracks.front();
    const auto search = crop(s.next_luma, *search_region(t.box, 2.5, s.seq.width(), s.seq.height()));
    for (auto _ : state) benchmark::DoNotOptimize(ncc_track_spatial(t.tmpl, search));
}

void BM_track_serial(benchmark::State& state) {
    const auto& s = scene();
    const TrackConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(track_all_parts_serial(s.tracks, s.next_luma, cfg));
}

void BM_track_parallel(benchmark::State& state) {
    const auto& s = scene();
    const TrackConfig cfg;
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(track_all_parts(s.tracks, s.next_luma, cfg, workers));
}

void BM_segment_serial(benchmark::State& state) {
    const auto& s = scene();
    for (auto _ : state) benchmark::DoNotOptimize(segment_parts_serial(s.seq.frames[1], s.boxes, s.model));
}

void BM_segment_parallel(benchmark::State& state) {
    const auto& s = scene();
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(segment_parts(s.seq.frames[1], s.boxes, s.model, workers));
}

void BM_aggregate_serial(benchmark::State& state) {
    const auto& s = scene();
    const AggConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(aggregate_serial(s.observations, cfg, s.seq.width(), s.seq.height()));
    }
}

void BM_aggregate_parallel(benchmark::State& state) {
    const auto& s = scene();
    const AggConfig cfg;
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(aggregate(s.observations, cfg, s.seq.width(), s.seq.height(), workers));
    }
}

}  // namespace

BENCHMARK(BM_ncc_fft)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ncc_spatial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_track_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_track_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_segment_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_segment_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_aggregate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_aggregate_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
