#include "partvos/roi_segment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "partvos/errors.hpp"
#include "partvos/parallel.hpp"
#include "partvos/rng.hpp"

namespace partvos {

namespace {

constexpr double kOutputClamp = 1e-12;

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double probability(double z) noexcept { return std::clamp(sigmoid(z), kOutputClamp, 1.0 - kOutputClamp); }

void require_box_in_frame(const RgbImage& frame, const BoundingBox& box, const char* what) {
    if (!box.valid()) throw std::invalid_argument(std::string(what) + ": degenerate box");
    if (box.x < 0 || box.y < 0 || box.right() > frame.width() || box.bottom() > frame.height()) {
        throw std::invalid_argument(std::string(what) + ": box outside frame");
    }
}

// 5x5 box mean with replicated borders, separable.
Plane box_mean5(const Plane& in) {
    const int w = in.width();
    const int h = in.height();
    Plane tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int d = -2; d <= 2; ++d) s += in(std::clamp(x + d, 0, w - 1), y);
            tmp(x, y) = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int d = -2; d <= 2; ++d) s += tmp(x, std::clamp(y + d, 0, h - 1));
            out(x, y) = s / 25.0;
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Patch geometry

PatchWarp PatchWarp::identity(const BoundingBox& box, int patch_size) {
    PatchWarp w;
    w.center_x = box.x + box.w / 2.0;
    w.center_y = box.y + box.h / 2.0;
    w.step_x = static_cast<double>(box.w) / patch_size;
    w.step_y = static_cast<double>(box.h) / patch_size;
    return w;
}

std::pair<double, double> PatchWarp::map(int u, int v, int patch_size) const noexcept {
    double a = (u + 0.5 - patch_size / 2.0) * step_x;
    const double b = (v + 0.5 - patch_size / 2.0) * step_y;
    if (flip) a = -a;
    double ra = a, rb = b;
    if (angle != 0.0) {
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        ra = c * a - s * b;
        rb = s * a + c * b;
    }
    return {center_x + ra - 0.5, center_y + rb - 0.5};
}

AlignedPatch warp_patch(const RgbImage& frame, const BoundingBox& box, const PatchWarp& warp, int patch_size) {
    if (patch_size < 1) throw std::invalid_argument("warp_patch: patch size must be positive");
    AlignedPatch p;
    p.box = box;
    p.size = patch_size;
    for (auto& c : p.rgb) c = Plane(patch_size, patch_size);
    for (int v = 0; v < patch_size; ++v) {
        for (int u = 0; u < patch_size; ++u) {
            const auto [fx, fy] = warp.map(u, v, patch_size);
            const auto px = sample_bilinear(frame, fx, fy);
            for (std::size_t c = 0; c < 3; ++c) p.rgb[c](u, v) = px[c] / 255.0;
        }
    }
    return p;
}

AlignedPatch align_patch(const RgbImage& frame, const BoundingBox& box, int patch_size) {
    require_box_in_frame(frame, box, "align_patch");
    return warp_patch(frame, box, PatchWarp::identity(box, patch_size), patch_size);
}

Plane project_to_box(const Plane& patch_map, const BoundingBox& box) {
    if (!box.valid()) throw std::invalid_argument("project_to_box: degenerate box");
    Plane out(box.w, box.h);
    const double sx = static_cast<double>(patch_map.width()) / box.w;
    const double sy = static_cast<double>(patch_map.height()) / box.h;
    for (int y = 0; y < box.h; ++y) {
        for (int x = 0; x < box.w; ++x) {
            out(x, y) = sample_bilinear(patch_map, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
        }
    }
    return out;
}

std::vector<Plane> pixel_features(const AlignedPatch& patch) {
    const int n = patch.size;
    std::vector<Plane> f;
    f.reserve(kFeatureChannels);
    for (const auto& c : patch.rgb) f.push_back(c);
    std::array<Plane, 3> sq;
    for (std::size_t c = 0; c < 3; ++c) {
        sq[c] = Plane(n, n);
        const auto in = patch.rgb[c].values();
        auto out = sq[c].values();
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * in[i];
    }
    std::array<Plane, 3> means;
    for (std::size_t c = 0; c < 3; ++c) {
        means[c] = box_mean5(patch.rgb[c]);
        f.push_back(means[c]);
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const auto m2 = box_mean5(sq[c]);
        Plane sd(n, n);
        for (std::size_t i = 0; i < sd.size(); ++i) {
            const double m = means[c].values()[i];
            sd.values()[i] = std::sqrt(std::max(0.0, m2.values()[i] - m * m));
        }
        f.push_back(std::move(sd));
    }
    Plane luma(n, n);
    for (std::size_t i = 0; i < luma.size(); ++i) {
        luma.values()[i] = 0.299 * patch.rgb[0].values()[i] + 0.587 * patch.rgb[1].values()[i] +
                           0.114 * patch.rgb[2].values()[i];
    }
    Plane grad(n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double gx = 0.5 * (luma(std::min(x + 1, n - 1), y) - luma(std::max(x - 1, 0), y));
            const double gy = 0.5 * (luma(x, std::min(y + 1, n - 1)) - luma(x, std::max(y - 1, 0)));
            grad(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    }
    f.push_back(std::move(grad));
    return f;
}

// ---------------------------------------------------------------------------
// Loss

WceResult wce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
    if (probs.size() != labels.size()) throw std::invalid_argument("wce_loss: size mismatch");
    if (probs.empty()) throw std::invalid_argument("wce_loss: empty input");
    const auto fg = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
    const auto total = static_cast<double>(labels.size());

    WceResult r;
    r.degenerate = fg == 0.0 || fg == total;
    r.fg_weight = std::clamp(fg / total, kProbEpsilon, 1.0 - kProbEpsilon);
    const double w = r.fg_weight;
    r.grad.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double raw = probs[i];
        const double p = std::clamp(raw, kProbEpsilon, 1.0 - kProbEpsilon);
        const bool clamped = p != raw;
        if (labels[i]) {
            r.loss -= (1.0 - w) * std::log(p);
            r.grad[i] = clamped ? 0.0 : -(1.0 - w) * (1.0 - p);
        } else {
            r.loss -= w * std::log(1.0 - p);
            r.grad[i] = clamped ? 0.0 : w * p;
        }
    }
    return r;
}

WceResult wce_loss(const ScoreMap& probs, const BinaryMask& labels) {
    if (probs.width() != labels.width() || probs.height() != labels.height()) {
        throw std::invalid_argument("wce_loss: dimension mismatch");
    }
    return wce_loss(probs.values(), labels.bits());
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct TrainingPatch {
    std::vector<double> features;   // sampled pixels x K, row-major
    std::vector<std::uint8_t> labels;
    double fg_weight = 0.5;
};

TrainingPatch build_patch(const RgbImage& frame, const BinaryMask& object_mask, const BoundingBox& box,
                          const PatchWarp& warp, const SegConfig& cfg, std::uint64_t seed) {
    const int n = cfg.patch_size;
    const auto patch = warp_patch(frame, box, warp, n);
    const auto feats = pixel_features(patch);

    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n) * n, 0);
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            const auto [fx, fy] = warp.map(u, v, n);
            const int x = static_cast<int>(std::floor(fx + 0.5));
            const int y = static_cast<int>(std::floor(fy + 0.5));
            labels[static_cast<std::size_t>(v) * n + u] = object_mask.in_bounds(x, y) && object_mask(x, y) ? 1 : 0;
        }
    }

    TrainingPatch tp;
    const auto fg = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    tp.fg_weight = std::clamp(fg / static_cast<double>(labels.size()), kProbEpsilon, 1.0 - kProbEpsilon);

    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto take = std::min(idx.size(), static_cast<std::size_t>(cfg.pixels_per_patch));
    if (take < idx.size()) {
        Rng rng(seed);
        // Partial Fisher-Yates: the first `take` entries are a uniform sample.
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + rng.below(idx.size() - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(take);
    }
    tp.features.reserve(take * kFeatureChannels);
    for (auto i : idx) {
        for (const auto& f : feats) tp.features.push_back(f.values()[i]);
        tp.labels.push_back(labels[i]);
    }
    return tp;
}

PatchWarp random_warp(const BoundingBox& box, int patch_size, Rng& rng) {
    auto w = PatchWarp::identity(box, patch_size);
    w.flip = rng.uniform() < 0.5;
    w.center_x += rng.uniform(-0.1, 0.1) * box.w;
    w.center_y += rng.uniform(-0.1, 0.1) * box.h;
    const double s = rng.uniform(0.9, 1.1);
    w.step_x *= s;
    w.step_y *= s;
    w.angle = rng.uniform(-30.0, 30.0) * std::numbers::pi / 180.0;
    return w;
}

}  // namespace

TrainResult train_segmenter(const RgbImage& frame0, const BinaryMask& object_mask, std::span<const Part> parts,
                            const SegConfig& cfg, std::uint64_t seed, int workers) {
    if (parts.empty()) throw std::invalid_argument("train_segmenter: no parts");
    if (frame0.width() != object_mask.width() || frame0.height() != object_mask.height()) {
        throw std::invalid_argument("train_segmenter: frame and mask differ in size");
    }
    const std::size_t copies = 1 + static_cast<std::size_t>(cfg.augment_copies);
    const std::size_t n_patches = parts.size() * copies;

    // Warps are drawn serially so they do not depend on the worker count.
    std::vector<std::pair<BoundingBox, PatchWarp>> jobs;
    jobs.reserve(n_patches);
    Rng aug_rng(derive_seed(seed, 1));
    for (const auto& part : parts) {
        require_box_in_frame(frame0, part.box, "train_segmenter");
        jobs.emplace_back(part.box, PatchWarp::identity(part.box, cfg.patch_size));
        for (int a = 0; a < cfg.augment_copies; ++a) jobs.emplace_back(part.box, random_warp(part.box, cfg.patch_size, aug_rng));
    }

    std::vector<TrainingPatch> patches(n_patches);
    parallel_for(n_patches, workers, [&](std::size_t i) {
        patches[i] = build_patch(frame0, object_mask, jobs[i].first, jobs[i].second, cfg, derive_seed(seed, 100 + i));
    });

    // Standardise features for conditioning; folded back into θ at the end.
    constexpr int K = kFeatureChannels;
    std::array<double, K> mean{}, sd{};
    std::size_t samples = 0;
    for (const auto& p : patches) {
        for (std::size_t r = 0; r < p.labels.size(); ++r) {
            for (int k = 0; k < K; ++k) mean[k] += p.features[r * K + k];
        }
        samples += p.labels.size();
    }
    for (auto& m : mean) m /= static_cast<double>(samples);
    for (const auto& p : patches) {
        for (std::size_t r = 0; r < p.labels.size(); ++r) {
            for (int k = 0; k < K; ++k) {
                const double d = p.features[r * K + k] - mean[k];
                sd[k] += d * d;
            }
        }
    }
    for (auto& s : sd) s = std::max(std::sqrt(s / static_cast<double>(samples)), 1e-8);
    for (auto& p : patches) {
        for (std::size_t r = 0; r < p.labels.size(); ++r) {
            for (int k = 0; k < K; ++k) p.features[r * K + k] = (p.features[r * K + k] - mean[k]) / sd[k];
        }
    }

    std::array<double, K> theta{};
    double bias = 0.0;
    std::vector<std::size_t> order(n_patches);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng batch_rng(derive_seed(seed, 2));

    TrainResult result;
    result.patches = n_patches;
    double last_finite = 0.0;
    const auto batch = static_cast<std::size_t>(cfg.batch);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        batch_rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        std::size_t epoch_px = 0;
        for (std::size_t start = 0; start < n_patches; start += batch) {
            const std::size_t stop = std::min(n_patches, start + batch);
            std::array<double, K> g{};
            double gb = 0.0;
            std::size_t px = 0;
            for (std::size_t oi = start; oi < stop; ++oi) {
                const auto& p = patches[order[oi]];
                const double w = p.fg_weight;
                for (std::size_t r = 0; r < p.labels.size(); ++r) {
                    const double* f = p.features.data() + r * K;
                    double z = bias;
                    for (int k = 0; k < K; ++k) z += theta[k] * f[k];
                    const double prob = std::clamp(sigmoid(z), kProbEpsilon, 1.0 - kProbEpsilon);
                    double dz;
                    if (p.labels[r]) {
                        epoch_loss -= (1.0 - w) * std::log(prob);
                        dz = -(1.0 - w) * (1.0 - prob);
                    } else {
                        epoch_loss -= w * std::log(1.0 - prob);
                        dz = w * prob;
                    }
                    for (int k = 0; k < K; ++k) g[k] += dz * f[k];
                    gb += dz;
                }
                px += p.labels.size();
            }
            epoch_px += px;
            const double step = cfg.lr / static_cast<double>(std::max<std::size_t>(px, 1));
            for (int k = 0; k < K; ++k) theta[k] -= step * g[k];
            bias -= step * gb;
        }
        const double mean_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(epoch_px, 1));
        // Clamped probabilities keep the loss finite while θ runs off, so
        // the parameters are checked as well.
        const bool params_finite =
            std::isfinite(bias) && std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); });
        if (!std::isfinite(mean_loss) || !params_finite) {
            throw TrainingDivergedError("train_segmenter: loss diverged at epoch " + std::to_string(epoch), last_finite);
        }
        last_finite = mean_loss;
        result.loss_history.push_back(mean_loss);
    }

    result.model.patch_size = cfg.patch_size;
    result.model.weights.assign(K, 0.0);
    result.model.bias = bias;
    for (int k = 0; k < K; ++k) {
        result.model.weights[static_cast<std::size_t>(k)] = theta[k] / sd[k];
        result.model.bias -= theta[k] * mean[k] / sd[k];
    }
    result.final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
    return result;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

Plane patch_probabilities(const std::vector<Plane>& feats, const SegmenterModel& model) {
    if (static_cast<int>(feats.size()) != model.channels()) {
        throw std::invalid_argument("segmenter: feature dimension does not match the model");
    }
    Plane out(feats.front().width(), feats.front().height());
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        double z = model.bias;
        for (std::size_t k = 0; k < feats.size(); ++k) z += model.weights[k] * feats[k].values()[i];
        o[i] = probability(z);
    }
    return out;
}

}  // namespace

ScoreMap segment_part(const RgbImage& frame, const BoundingBox& box, const SegmenterModel& model) {
    const auto patch = align_patch(frame, box, model.patch_size);
    const auto probs = patch_probabilities(pixel_features(patch), model);
    auto projected = project_to_box(probs, box);
    std::vector<double> values(projected.values().begin(), projected.values().end());
    return ScoreMap(box.w, box.h, std::move(values));
}

std::vector<ScoreMap> segment_parts(const RgbImage& frame, std::span<const BoundingBox> boxes,
                                    const SegmenterModel& model, int workers) {
    std::vector<ScoreMap> out(boxes.size(), ScoreMap(1, 1));
    parallel_for(boxes.size(), workers, [&](std::size_t i) { out[i] = segment_part(frame, boxes[i], model); });
    return out;
}

std::vector<ScoreMap> segment_parts_serial(const RgbImage& frame, std::span<const BoundingBox> boxes,
                                           const SegmenterModel& model) {
    std::vector<ScoreMap> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) out.push_back(segment_part(frame, b, model));
    return out;
}

FeatureVector part_feature(const RgbImage& frame, const BoundingBox& box, const BinaryMask& part_mask,
                           const SegmenterModel& model) {
    if (part_mask.width() != box.w || part_mask.height() != box.h) {
        throw std::invalid_argument("part_feature: mask is not box-sized");
    }
    FeatureVector fv;
    fv.values.assign(static_cast<std::size_t>(model.channels()), 0.0);
    if (part_mask.none()) return fv;

    const auto patch = align_patch(frame, box, model.patch_size);
    const auto feats = pixel_features(patch);
    const int n = model.patch_size;
    const double sx = static_cast<double>(n) / box.w;
    const double sy = static_cast<double>(n) / box.h;
    std::size_t count = 0;
    for (int y = 0; y < box.h; ++y) {
        const int v = std::min(n - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < box.w; ++x) {
            if (!part_mask(x, y)) continue;
            const int u = std::min(n - 1, static_cast<int>((x + 0.5) * sx));
            for (std::size_t k = 0; k < feats.size(); ++k) fv.values[k] += feats[k](u, v);
            ++count;
        }
    }
    double norm = 0.0;
    for (auto& v : fv.values) {
        v /= static_cast<double>(count);
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (auto& v : fv.values) v /= norm;
        fv.empty = false;
    }
    return fv;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[4] = {'P', 'V', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

std::uint64_t get_le(std::istream& in, int bytes, const std::filesystem::path& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), bytes)) throw IoError("truncated model file " + path.string());
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const SegmenterModel& model) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.channels()));
    put_u32(out, static_cast<std::uint32_t>(model.patch_size));
    for (double w : model.weights) put_f64(out, w);
    put_f64(out, model.bias);
    if (!out) throw IoError("write failed: " + path.string());
}

SegmenterModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a segmenter model: " + path.string());
    const auto version = get_le(in, 4, path);
    if (version != kVersion) throw IoError("unsupported model version " + std::to_string(version));
    const auto k = get_le(in, 4, path);
    const auto patch = get_le(in, 4, path);
    if (k != static_cast<std::uint64_t>(kFeatureChannels)) {
        throw IoError("model declares " + std::to_string(k) + " channels, expected " + std::to_string(kFeatureChannels));
    }
    if (patch < 16) throw IoError("model patch size below 16");
    SegmenterModel m;
    m.patch_size = static_cast<int>(patch);
    m.weights.resize(static_cast<std::size_t>(k));
    for (auto& w : m.weights) w = std::bit_cast<double>(get_le(in, 8, path));
    m.bias = std::bit_cast<double>(get_le(in, 8, path));
    for (double w : m.weights) {
        if (!std::isfinite(w)) throw IoError("model holds non-finite weights");
    }
    if (!std::isfinite(m.bias)) throw IoError("model holds a non-finite bias");
    return m;
}

}  // namespace partvos
