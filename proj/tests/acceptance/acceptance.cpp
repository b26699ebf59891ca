// Acceptance run: one PASS/FAIL line per criterion. The exit status is
// non-zero when a hard criterion fails; the performance budget is soft and
// only reported.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "partvos/aggregation.hpp"
#include "partvos/dataset_io.hpp"
#include "partvos/eval.hpp"
#include "partvos/geometry.hpp"
#include "partvos/parallel.hpp"
#include "partvos/part_gen.hpp"
#include "partvos/pipeline.hpp"
#include "partvos/roi_segment.hpp"
#include "partvos/tracking.hpp"

using namespace partvos;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

BinaryMask ellipse_mask(int w, int h, double cx, double cy, double rx, double ry) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x - cx) / rx, v = (y - cy) / ry;
            m.set(x, y, u * u + v * v <= 1.0);
        }
    }
    return m;
}

double mean_j(const FrameSequence& seq, const PipelineResult& r) {
    return evaluate_sequence(seq.name, r.masks, seq.annotations).j_stats.mean;
}

// ---------------------------------------------------------------------------

Outcome geometry_oracles() {
    const auto start = Clock::now();
    constexpr int kGrid = 64;
    constexpr int kInstances = 1000;
    Rng rng(101);
    std::size_t bad = 0;
    double worst = 0.0;
    for (int i = 0; i < kInstances; ++i) {
        const auto a = oracle::random_box(rng, kGrid);
        const auto b = oracle::random_box(rng, kGrid);
        const double e = std::abs(box_iou(a, b) - oracle::box_iou(a, b));
        worst = std::max(worst, e);
        bad += e > 1e-12;
    }
    for (int i = 0; i < kInstances; ++i) {
        const auto a = oracle::random_box(rng, kGrid);
        const auto b = oracle::random_box(rng, kGrid);
        const double e = std::abs(containment_score(a, b) - oracle::containment(a, b));
        worst = std::max(worst, e);
        bad += e > 1e-12;
    }
    for (int i = 0; i < kInstances; ++i) {
        std::vector<BoundingBox> boxes;
        std::vector<double> scores;
        const int n = 2 + static_cast<int>(rng.below(30));
        for (int k = 0; k < n; ++k) {
            boxes.push_back(oracle::random_box(rng, kGrid));
            scores.push_back(static_cast<double>(rng.below(8)) / 7.0);
        }
        const double t = rng.uniform(0.1, 0.9);
        bad += nms(boxes, scores, t) != oracle::nms(boxes, scores, t);
    }
    for (int i = 0; i < kInstances; ++i) {
        const auto m = oracle::random_mask(rng, kGrid, kGrid, rng.uniform(0.1, 0.8));
        int n = 0, n_ref = 0;
        const auto labels = label_components(m, &n);
        const auto ref = oracle::flood_labels(m, &n_ref);
        std::size_t area = 0;
        for (const auto& c : connected_components(m)) area += c.area;
        bad += n != n_ref || labels != ref || area != m.count();
    }
    const double secs = seconds_since(start);
    return {bad == 0 && worst <= 1e-12 && secs < 30.0,
            std::to_string(bad) + " mismatches in 4x" + std::to_string(kInstances) + " instances, max error " +
                fmt(worst) + ", " + fmt(secs, 3) + " s (< 30 s)"};
}

double loss_at(const std::vector<double>& z, const std::vector<std::uint8_t>& labels) {
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-z[i]));
    return wce_loss(p, labels).loss;
}

Outcome gradient_check() {
    const auto start = Clock::now();
    Rng rng(202);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> z(64);
        std::vector<std::uint8_t> labels(64);
        for (auto& v : z) v = rng.uniform(-4.0, 4.0);
        for (auto& v : labels) v = rng.uniform() < rng.uniform(0.2, 0.8) ? 1 : 0;
        std::vector<double> p(64);
        for (std::size_t i = 0; i < 64; ++i) p[i] = 1.0 / (1.0 + std::exp(-z[i]));
        const auto analytic = wce_loss(p, labels).grad;
        for (std::size_t i = 0; i < 64; ++i) {
            const double h = 1e-5;
            auto zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            const double numeric = (loss_at(zp, labels) - loss_at(zm, labels)) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
            worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
        }
    }
    const double secs = seconds_since(start);
    return {worst < 1e-4 && secs < 10.0,
            "max relative error " + fmt(worst) + " over 100 8x8 instances, " + fmt(secs, 3) + " s (< 10 s)"};
}

Outcome part_generation() {
    struct Fixture {
        const char* name;
        BinaryMask mask;
        bool large;
    };
    const std::vector<Fixture> fixtures{
        {"small", ellipse_mask(96, 72, 48, 36, 24, 18), false},
        {"medium", ellipse_mask(240, 200, 120, 100, 80, 60), false},
        {"large", ellipse_mask(854, 480, 420, 240, 220, 160), true},
    };
    const PartConfig cfg;
    bool ok = true;
    std::string detail;
    for (const auto& f : fixtures) {
        const auto object = *mask_bounds(f.mask);
        const auto parts = generate_parts(f.mask, cfg, 17);
        std::size_t violations = 0;
        for (const auto& p : parts) {
            // Independent recounts: object pixels in the box, pixel-set containment.
            long long inside = 0;
            for (int y = p.box.y; y < p.box.bottom(); ++y) {
                for (int x = p.box.x; x < p.box.right(); ++x) inside += f.mask(x, y) ? 1 : 0;
            }
            const double overlap = static_cast<double>(inside) / static_cast<double>(p.box.area());
            violations += !(overlap >= 0.3) || !(oracle::containment(p.box, object) > 0.7);
        }
        bool same = true;
        for (int run = 0; run < 2; ++run) {
            const auto again = generate_parts(f.mask, cfg, 17);
            same = same && again.size() == parts.size() &&
                   std::equal(parts.begin(), parts.end(), again.begin(),
                              [](const Part& a, const Part& b) { return a.box == b.box && a.local_mask == b.local_mask; });
        }
        const bool count_ok = parts.size() <= 300 && (!f.large || parts.size() >= 50);
        ok = ok && violations == 0 && same && count_ok;
        detail += std::string(detail.empty() ? "" : "; ") + f.name + ": " + std::to_string(parts.size()) +
                  " parts, " + std::to_string(violations) + " violations" + (same ? "" : ", NOT deterministic");
    }
    return {ok, detail + " (overlap = object coverage of the box >= 0.3, S_p > 0.7)"};
}

Plane smooth_noise(Rng& rng, int w, int h, int radius) {
    Plane raw(w, h);
    for (auto& v : raw.values()) v = rng.uniform();
    Plane out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            int n = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
                    s += raw(sx, sy);
                    ++n;
                }
            }
            out(x, y) = s / n;
        }
    }
    return out;
}

Plane shifted(const Plane& src, int dx, int dy) {
    Plane out(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            out(x, y) = src(std::clamp(x - dx, 0, src.width() - 1), std::clamp(y - dy, 0, src.height() - 1));
        }
    }
    return out;
}

Outcome tracker_planted_peak() {
    Rng rng(303);
    const int w = 400, h = 300;
    const auto base = smooth_noise(rng, w, h, 2);
    std::vector<TrackState> states;
    std::vector<BoundingBox> initial;
    for (int i = 0; i < 60; ++i) {
        const BoundingBox b{60 + static_cast<int>(rng.below(240)), 60 + static_cast<int>(rng.below(150)),
                            16 + static_cast<int>(rng.below(17)), 16 + static_cast<int>(rng.below(17))};
        initial.push_back(b);
        states.push_back(init_track_state(i, b, base));
    }
    const TrackConfig cfg;
    int ox = 0, oy = 0, max_shift = 0;
    std::size_t hits = 0, pairs = 0;
    double fft_gap = 0.0;
    for (int t = 1; t < 20; ++t) {
        auto step = [&](int& o) {
            int s = static_cast<int>(rng.below(21)) - 10;
            if (std::abs(o + s) > 50) s = -s;
            o += s;
            return std::abs(s);
        };
        max_shift = std::max({max_shift, step(ox), step(oy)});
        const auto frame = shifted(base, ox, oy);
        const auto steps = track_all_parts(states, frame, cfg, 1);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            ++pairs;
            const auto& b = steps[i].box;
            hits += steps[i].state.alive && std::abs(b.x - (initial[i].x + ox)) <= 1 &&
                    std::abs(b.y - (initial[i].y + oy)) <= 1;
            if (t == 1 && i < 20) {
                const auto region = *search_region(states[i].box, cfg.search_factor, w, h);
                const auto search = crop(frame, region);
                const auto a = ncc_track(states[i].tmpl, search);
                const auto d = ncc_track_spatial(states[i].tmpl, search);
                for (std::size_t k = 0; k < a.map.size(); ++k) {
                    fft_gap = std::max(fft_gap, std::abs(a.map.values()[k] - d.map.values()[k]));
                }
            }
        }
        states.clear();
        for (const auto& s : steps) states.push_back(s.state);
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(pairs);
    return {rate >= 0.98 && fft_gap <= 1e-9 && max_shift <= 10,
            fmt(100.0 * rate) + "% of " + std::to_string(pairs) + " (part, frame) pairs within 1 px (>= 98%), " +
                "60 parts, 20 frames, max shift " + std::to_string(max_shift) + " px, FFT vs spatial gap " +
                fmt(fft_gap, 3) + " (<= 1e-9)"};
}

Outcome end_to_end() {
    const auto seq = synth_sequence(synth_preset("translate"), 1);
    RunConfig cfg;
    cfg.workers = 1;
    const auto start = Clock::now();
    MemorySource source(seq);
    const auto r = run_pipeline(source, *seq.annotations[0], cfg);
    const double secs = seconds_since(start);
    const auto report =
        evaluate_sequence(seq.name, r.masks, seq.annotations, default_boundary_tolerance(seq.width(), seq.height()));
    return {report.j_stats.mean >= 0.75 && report.f_stats.mean >= 0.60 && secs < 300.0,
            std::to_string(seq.width()) + "x" + std::to_string(seq.height()) + ", " + std::to_string(seq.size()) +
                " frames, mode seg: J mean " + fmt(report.j_stats.mean) + " (>= 0.75), F mean " +
                fmt(report.f_stats.mean) + " (>= 0.60), " + fmt(secs, 3) + " s single-threaded (< 300 s)"};
}

// The decoy fixture: the "small" translating scene plus a static distractor
// of the object's colour that is not annotated, with spurious part votes
// injected after segmentation. A near group claims the background pixels
// that the genuine parts' boxes cover; one far part sits on the distractor,
// looks like the object, and no genuine part reaches it.
struct DecoyFixture {
    FrameSequence seq;
    BinaryMask distractor{1, 1};
    BoundingBox far_box;
};

const DecoyFixture& decoy_fixture() {
    static const DecoyFixture fixture = [] {
        auto spec = synth_preset("small");
        auto distractor = spec.objects.front();
        distractor.cx = 142;
        distractor.cy = 102;
        distractor.rx = 10;
        distractor.ry = 10;
        distractor.dx = 0;
        distractor.dy = 0;
        spec.objects.push_back(distractor);
        DecoyFixture f;
        f.seq = synth_sequence(spec, 4);
        f.distractor = f.seq.annotations[0]->instance(2);
        f.far_box = *mask_bounds(f.distractor);
        for (auto& a : f.seq.annotations) a = from_binary(a->instance(1), 1);
        return f;
    }();
    return fixture;
}

struct DecoyRun {
    double j = 0.0;
    double near_score = 0.0;        // mean aggregated score over the near decoy pixels
    std::size_t far_pixels = 0;     // emitted foreground inside the far decoy box
    std::size_t near_observations = 0;
};

DecoyRun run_decoy(RunConfig cfg) {
    const auto& fx = decoy_fixture();
    const auto& seq = fx.seq;
    cfg.workers = 1;
    DecoyRun out;
    std::vector<std::size_t> region;   // near decoy pixels of the current frame
    double score_sum = 0.0;
    std::size_t score_count = 0;
    std::vector<double> far_values;
    for (int y = 0; y < fx.far_box.h; ++y) {
        for (int x = 0; x < fx.far_box.w; ++x) {
            far_values.push_back(fx.distractor(fx.far_box.x + x, fx.far_box.y + y) ? 1.0 : 0.0);
        }
    }
    const ScoreMap far_map(fx.far_box.w, fx.far_box.h, std::move(far_values));

    PipelineHooks hooks;
    hooks.after_segmentation = [&](std::size_t t, int label, std::vector<PartObservation>& obs) {
        region.clear();
        const auto gt = seq.annotations[t]->instance(label);
        const int w = seq.width();
        std::vector<std::uint8_t> covered(static_cast<std::size_t>(w) * seq.height(), 0);
        for (const auto& o : obs) {
            for (int y = o.box.y; y < o.box.bottom(); ++y) {
                for (int x = o.box.x; x < o.box.right(); ++x) covered[static_cast<std::size_t>(y) * w + x] = 1;
            }
        }
        BinaryMask claim(w, seq.height());
        for (int y = 0; y < seq.height(); ++y) {
            for (int x = 0; x < w; ++x) {
                if (covered[static_cast<std::size_t>(y) * w + x] && !gt(x, y)) {
                    claim.set(x, y);
                    region.push_back(static_cast<std::size_t>(y) * w + x);
                }
            }
        }
        const std::size_t genuine = obs.size();
        if (const auto box = mask_bounds(claim)) {
            // Certain on the claimed pixels, undecided elsewhere in the box.
            std::vector<double> values;
            for (int y = 0; y < box->h; ++y) {
                for (int x = 0; x < box->w; ++x) values.push_back(claim(box->x + x, box->y + y) ? 1.0 : 0.5);
            }
            const ScoreMap map(box->w, box->h, std::move(values));
            for (std::size_t k = 0; k <= genuine; ++k) {
                obs.push_back({1'000'000 + static_cast<int>(k), *box, map, 1.0});
            }
            out.near_observations += genuine + 1;
        }
        obs.push_back({2'000'000, fx.far_box, far_map, 1.0});
    };
    hooks.on_aggregate = [&](std::size_t, int, const FrameAggregate& agg) {
        for (auto p : region) {
            score_sum += agg.score_map.values()[p];
            ++score_count;
        }
    };
    MemorySource source(seq);
    const auto r = run_pipeline(source, *seq.annotations[0], cfg, hooks);
    out.j = mean_j(seq, r);
    out.near_score = score_count ? score_sum / static_cast<double>(score_count) : 0.0;
    for (std::size_t t = 1; t < r.masks.size(); ++t) {
        for (int y = fx.far_box.y; y < fx.far_box.bottom(); ++y) {
            for (int x = fx.far_box.x; x < fx.far_box.right(); ++x) out.far_pixels += r.masks[t](x, y) != 0;
        }
    }
    return out;
}

const DecoyRun& decoy(const std::string& variant) {
    static std::map<std::string, DecoyRun> cache;
    if (auto it = cache.find(variant); it != cache.end()) return it->second;
    RunConfig cfg;
    if (variant == "ave") cfg.agg.mode = AggMode::ave;
    if (variant == "gate0" || variant == "gate") {
        cfg.refine.gate = true;
        cfg.refine.alpha = variant == "gate0" ? 0.0 : 0.3;
    }
    return cache.emplace(variant, run_decoy(cfg)).first->second;
}

Outcome ablation_direction() {
    const auto& ave = decoy("ave");
    const auto& seg = decoy("seg");
    const double drop = ave.near_score > 0.0 ? 1.0 - seg.near_score / ave.near_score : 0.0;
    return {seg.j > ave.j && drop >= 0.5,
            "J mean seg " + fmt(seg.j) + " vs ave " + fmt(ave.j) + " (seg > ave); near decoy score " +
                fmt(ave.near_score) + " -> " + fmt(seg.near_score) + ", drop " + fmt(100.0 * drop, 3) +
                "% (>= 50%), " + std::to_string(seg.near_observations) + " decoy votes injected"};
}

Outcome gate_direction() {
    const auto& seg = decoy("seg");
    const auto& gate0 = decoy("gate0");
    const auto& gate = decoy("gate");
    return {gate0.j >= seg.j && gate.j >= seg.j && gate0.far_pixels == 0 && seg.far_pixels > 0,
            "J mean seg " + fmt(seg.j) + ", seg+gate(alpha 0) " + fmt(gate0.j) + ", seg+gate(alpha 0.3) " +
                fmt(gate.j) + " (not lower); far decoy pixels emitted " + std::to_string(seg.far_pixels) +
                " ungated -> " + std::to_string(gate0.far_pixels) + " at alpha 0 (must be 0)"};
}

Outcome metrics_fixture() {
    bool ok = true;
    std::string detail;
    // Two 1x4 runs in a 6x1 strip, overlapping in two pixels:
    // J = 2/6; every foreground pixel is a boundary pixel (frame border).
    // tol 0: 2 of 4 boundary pixels match each way -> F = 0.5.
    // tol 1: 3 of 4 match each way -> F = 0.75.
    BinaryMask a(6, 1), b(6, 1);
    for (int x = 0; x < 4; ++x) a.set(x, 0);
    for (int x = 2; x < 6; ++x) b.set(x, 0);
    ok = ok && j_frame(a, b) == 2.0 / 6.0;
    ok = ok && std::abs(f_frame(a, b, 0) - 0.5) <= 1e-9 && std::abs(f_frame(a, b, 1) - 0.75) <= 1e-9;

    // 4x4 square at the origin of a 10x10 frame vs the same square moved by
    // (2,2): overlap 4, union 28. F at several tolerances against the
    // pairwise-distance oracle.
    BinaryMask c(10, 10), d(10, 10);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            c.set(x, y);
            d.set(x + 2, y + 2);
        }
    }
    ok = ok && j_frame(c, d) == 4.0 / 28.0;
    for (int tol : {0, 1, 2, 3}) ok = ok && std::abs(f_frame(c, d, tol) - oracle::f_measure(c, d, tol)) <= 1e-9;
    // Empty cases.
    const BinaryMask none(5, 5);
    ok = ok && j_frame(none, none) == 1.0 && f_frame(none, none, 1) == 1.0 && j_frame(a, BinaryMask(6, 1)) == 0.0 &&
         f_frame(a, BinaryMask(6, 1), 1) == 0.0;
    detail = "hand J/F values " + std::string(ok ? "reproduced" : "NOT reproduced");

    Rng rng(808);
    double asym = 0.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v(4 + rng.below(40));
        for (auto& x : v) x = rng.uniform();
        std::vector<double> r(v.rbegin(), v.rend());
        asym = std::max(asym, std::abs(sequence_stats(v).decay + sequence_stats(r).decay));
    }
    ok = ok && asym <= 1e-12;
    return {ok, detail + "; decay(reversed) = -decay within " + fmt(asym, 3) + " over 200 sequences"};
}

bool same_files(const fs::path& a, const fs::path& b) {
    if (!fs::exists(b)) return false;
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string sa{std::istreambuf_iterator<char>(fa), {}};
    const std::string sb{std::istreambuf_iterator<char>(fb), {}};
    return !sa.empty() && sa == sb;
}

// Refuses to hand out frame t before the mask of frame t-1 was emitted.
class GuardedSource : public FrameSource {
public:
    explicit GuardedSource(const FrameSequence& seq) : seq_(seq) {}
    std::size_t size() const override { return seq_.size(); }
    RgbImage read(std::size_t index) override {
        if (index != emitted_) ++violations;
        ++reads;
        return seq_.frames.at(index);
    }
    void emitted(std::size_t t) { emitted_ = t + 1; }
    std::size_t violations = 0;
    std::size_t reads = 0;

private:
    const FrameSequence& seq_;
    std::size_t emitted_ = 0;
};

Outcome determinism_causality() {
    const auto seq = synth_sequence(synth_preset("pair"), 9);
    const fs::path root = fs::temp_directory_path() / "partvos_acceptance_determinism";
    fs::remove_all(root);
    std::vector<PipelineResult> results;
    std::size_t violations = 0, reads = 0;
    for (int workers : {1, 8}) {
        RunConfig cfg;
        cfg.workers = workers;
        GuardedSource source(seq);
        PipelineHooks hooks;
        hooks.on_emit = [&](std::size_t t, const InstanceMask&) { source.emitted(t); };
        results.push_back(run_pipeline(source, *seq.annotations[0], cfg, hooks));
        violations += source.violations;
        reads += source.reads;
        save_masks(seq.name, results.back().masks, root / std::to_string(workers));
        const auto report = evaluate_sequence(seq.name, results.back().masks, seq.annotations);
        write_csv(root / std::to_string(workers) / "metrics.csv", frame_table(report));
    }
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "1")) {
        if (!entry.is_regular_file()) continue;
        ++files;
        const auto other = root / "8" / fs::relative(entry.path(), root / "1");
        differing += !same_files(entry.path(), other);
    }
    const bool masks_equal = results[0].masks == results[1].masks;
    fs::remove_all(root);
    return {masks_equal && differing == 0 && files == seq.size() + 1 && violations == 0 &&
                reads == 2 * seq.size(),
            "workers 1 vs 8: " + std::to_string(files) + " output files, " + std::to_string(differing) +
                " differ; " + std::to_string(reads) + " frame reads, " + std::to_string(violations) +
                " before the previous mask was emitted"};
}

Outcome performance_budget() {
    auto seq = synth_sequence(synth_preset("translate"), 1);
    constexpr std::size_t kFrames = 5;
    seq.frames.resize(kFrames);
    seq.annotations.resize(kFrames);
    seq.frame_ids.resize(kFrames);
    RunConfig cfg;
    cfg.workers = 8;
    cfg.parts.max_count = 100;
    MemorySource source(seq);
    const auto r = run_pipeline(source, *seq.annotations[0], cfg);
    const fs::path csv = fs::current_path() / "acceptance_timing.csv";
    write_csv(csv, timing_table(r.timing));
    double ms = 0.0;
    for (const auto& rec : r.timing) {
        if (rec.frame >= 1 && (rec.stage == "track" || rec.stage == "segment" || rec.stage == "weight" ||
                               rec.stage == "aggregate")) {
            ms += rec.milliseconds;
        }
    }
    const double per_frame = ms / 1000.0 / static_cast<double>(kFrames - 1);
    const std::size_t parts = r.instances.empty() ? 0 : r.instances.front().parts;
    return {parts == 100 && per_frame < 1.0 && fs::file_size(csv) > 0,
            std::to_string(parts) + " parts on 854x480, track+segment+weight+aggregate " + fmt(per_frame, 3) +
                " s per frame with 8 workers on " + std::to_string(resolve_workers(0)) +
                " hardware thread(s) (< 1 s); timing CSV " + csv.string()};
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*check)();
        bool soft;
    };
    const Criterion criteria[] = {
        {1, "geometry oracle suite", geometry_oracles, false},
        {2, "loss gradient check", gradient_check, false},
        {3, "part-generation contract", part_generation, false},
        {4, "tracker planted peak", tracker_planted_peak, false},
        {5, "end-to-end synthetic", end_to_end, false},
        {6, "ablation direction seg > ave", ablation_direction, false},
        {7, "gate refinement direction", gate_direction, false},
        {8, "metrics fixture", metrics_fixture, false},
        {9, "determinism and causality", determinism_causality, false},
        {10, "performance budget (soft)", performance_budget, true},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int hard_failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s  criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass && !c.soft) ++hard_failures;
    }
    std::printf("%d hard criterion failure(s)\n", hard_failures);
    return hard_failures == 0 ? 0 : 1;
}
