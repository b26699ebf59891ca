#include <limits>
#include <numeric>
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "partvos/dataset_io.hpp"
#include "partvos/errors.hpp"
#include "partvos/part_gen.hpp"
#include "partvos/roi_segment.hpp"
#include "partvos/rng.hpp"

using namespace partvos;
namespace fs = std::filesystem;

namespace {

RgbImage ramp_image(int w, int h) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.set(x, y, static_cast<std::uint8_t>(3 * x), static_cast<std::uint8_t>(5 * y),
                    static_cast<std::uint8_t>((x * y) % 256));
        }
    }
    return img;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double loss_at(const std::vector<double>& z, const std::vector<std::uint8_t>& labels) {
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = sigmoid(z[i]);
    return wce_loss(p, labels).loss;
}

struct Scene {
    FrameSequence seq;
    BinaryMask mask{1, 1};
    std::vector<Part> parts;
};

Scene small_scene() {
    Scene s;
    s.seq = synth_sequence(synth_preset("small"), 1);
    s.mask = s.seq.annotations[0]->instance(1);
    s.parts = generate_parts(s.mask, PartConfig{}, 1);
    return s;
}

SegConfig quick_config() {
    SegConfig cfg;
    cfg.epochs = 40;
    cfg.augment_copies = 1;
    return cfg;
}

}  // namespace

TEST_CASE("identity alignment reproduces the crop") {
    const auto img = ramp_image(40, 30);
    const auto p = align_patch(img, {5, 7, 12, 12}, 12);
    for (int v = 0; v < 12; ++v) {
        for (int u = 0; u < 12; ++u) {
            CHECK(p.rgb[0](u, v) == doctest::Approx(img(5 + u, 7 + v, 0) / 255.0).epsilon(1e-12));
            CHECK(p.rgb[1](u, v) == doctest::Approx(img(5 + u, 7 + v, 1) / 255.0).epsilon(1e-12));
        }
    }
    CHECK(p.size == 12);
    CHECK_THROWS_AS(align_patch(img, {35, 0, 10, 5}, 16), std::invalid_argument);
}

TEST_CASE("projection back to the box") {
    Plane patch(4, 4);
    for (int v = 0; v < 4; ++v) {
        for (int u = 0; u < 4; ++u) patch(u, v) = 0.1 * u + 0.01 * v;
    }
    const auto same = project_to_box(patch, {0, 0, 4, 4});
    CHECK(same == patch);
    // Halving the resolution samples between patch pixel centres.
    const auto half = project_to_box(patch, {0, 0, 2, 2});
    CHECK(half(0, 0) == doctest::Approx(0.05 + 0.005));
    CHECK(half(1, 1) == doctest::Approx(0.25 + 0.025));
}

TEST_CASE("pixel features of a flat patch") {
    RgbImage img(20, 20);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) img.set(x, y, 51, 102, 153);
    }
    const auto f = pixel_features(align_patch(img, {2, 2, 10, 10}, 16));
    REQUIRE(f.size() == static_cast<std::size_t>(kFeatureChannels));
    CHECK(f[0](3, 3) == doctest::Approx(0.2));
    CHECK(f[4](0, 0) == doctest::Approx(0.4));
    CHECK(f[8](7, 7) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(f[9](5, 5) == 0.0);
}

TEST_CASE("feature stack on a horizontal ramp") {
    // r = 3x/255 with x = u in a patch the size of the box.
    const auto img = ramp_image(40, 40);
    const auto f = pixel_features(align_patch(img, {0, 0, 20, 20}, 20));
    // 5x5 mean of a linear function at an interior pixel is the value itself.
    CHECK(f[3](10, 10) == doctest::Approx(f[0](10, 10)));
    // Population std of {-2..2} * 3/255 across each row of the window.
    CHECK(f[6](10, 10) == doctest::Approx(std::sqrt(2.0) * 3.0 / 255.0));
}

TEST_CASE("weighted cross-entropy by hand") {
    // One fg pixel at p = 0.8, three bg pixels at p = 0.1: w = 0.25.
    const std::vector<double> p{0.8, 0.1, 0.1, 0.1};
    const std::vector<std::uint8_t> l{1, 0, 0, 0};
    const auto r = wce_loss(p, l);
    CHECK(r.fg_weight == 0.25);
    CHECK(r.loss == doctest::Approx(-0.75 * std::log(0.8) - 3 * 0.25 * std::log(0.9)));
    CHECK(r.grad[0] == doctest::Approx(-0.75 * 0.2));
    CHECK(r.grad[1] == doctest::Approx(0.25 * 0.1));
    CHECK_FALSE(r.degenerate);

    const auto all_fg = wce_loss(std::vector<double>{0.5, 0.5}, std::vector<std::uint8_t>{1, 1});
    CHECK(all_fg.degenerate);
    CHECK(std::isfinite(all_fg.loss));
    CHECK_THROWS_AS(wce_loss(std::vector<double>{0.5}, std::vector<std::uint8_t>{1, 0}), std::invalid_argument);
}

TEST_CASE("loss gradient matches central differences") {
    Rng rng(21);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> z(64);
        std::vector<std::uint8_t> l(64);
        for (auto& v : z) v = rng.uniform(-4.0, 4.0);
        for (auto& v : l) v = rng.uniform() < 0.4 ? 1 : 0;
        std::vector<double> p(64);
        for (std::size_t i = 0; i < 64; ++i) p[i] = sigmoid(z[i]);
        const auto analytic = wce_loss(p, l).grad;
        for (std::size_t i = 0; i < 64; ++i) {
            const double h = 1e-5;
            auto zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            const double numeric = (loss_at(zp, l) - loss_at(zm, l)) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
            worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("segmenter learns a colour-separable object") {
    const auto s = small_scene();
    const auto trained = train_segmenter(s.seq.frames[0], s.mask, s.parts, quick_config(), 3);
    CHECK(trained.patches == s.parts.size() * 2);
    CHECK(trained.loss_history.size() == 40);
    CHECK(trained.final_loss < trained.loss_history.front());

    double iou_sum = 0.0;
    for (const auto& p : s.parts) {
        const auto out = segment_part(s.seq.frames[0], p.box, trained.model);
        for (double v : out.values()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
        iou_sum += mask_iou(binarize(out, 0.5), p.local_mask);
    }
    CHECK(iou_sum / static_cast<double>(s.parts.size()) > 0.9);

    const auto again = train_segmenter(s.seq.frames[0], s.mask, s.parts, quick_config(), 3);
    CHECK(again.model.weights == trained.model.weights);
    const auto threaded = train_segmenter(s.seq.frames[0], s.mask, s.parts, quick_config(), 3, 4);
    CHECK(threaded.model.weights == trained.model.weights);
    CHECK(threaded.model.bias == trained.model.bias);
}

TEST_CASE("loss trends downward") {
    const auto s = small_scene();
    const auto h = train_segmenter(s.seq.frames[0], s.mask, s.parts, quick_config(), 5).loss_history;
    const auto half = h.begin() + static_cast<std::ptrdiff_t>(h.size() / 2);
    const double first = std::accumulate(h.begin(), half, 0.0) / static_cast<double>(half - h.begin());
    const double second = std::accumulate(half, h.end(), 0.0) / static_cast<double>(h.end() - half);
    CHECK(second <= first);
}

TEST_CASE("augmentation does not hurt a held-out frame") {
    const auto s = small_scene();
    const std::size_t last = s.seq.size() - 1;
    const auto gt = s.seq.annotations[last]->instance(1);
    // Part boxes moved with the object: the held-out frame's parts.
    const auto b0 = *mask_bounds(s.mask);
    const auto b1 = *mask_bounds(gt);
    auto held_out_iou = [&](int copies) {
        auto cfg = quick_config();
        cfg.augment_copies = copies;
        const auto model = train_segmenter(s.seq.frames[0], s.mask, s.parts, cfg, 9).model;
        double sum = 0.0;
        for (const auto& p : s.parts) {
            const auto box = *clip_box({p.box.x + b1.x - b0.x, p.box.y + b1.y - b0.y, p.box.w, p.box.h},
                                       gt.width(), gt.height());
            sum += mask_iou(binarize(segment_part(s.seq.frames[last], box, model), 0.5), gt.crop(box));
        }
        return sum / static_cast<double>(s.parts.size());
    };
    const double plain = held_out_iou(0);
    const double augmented = held_out_iou(8);
    MESSAGE("held-out IoU A=0 " << plain << ", A=8 " << augmented);
    CHECK(augmented >= plain);
}

TEST_CASE("divergence is reported") {
    const auto s = small_scene();
    auto cfg = quick_config();
    cfg.lr = std::numeric_limits<double>::infinity();
    cfg.epochs = 5;
    CHECK_THROWS_AS(train_segmenter(s.seq.frames[0], s.mask, s.parts, cfg, 3), TrainingDivergedError);
}

TEST_CASE("batch segmentation and features") {
    const auto s = small_scene();
    const auto model = train_segmenter(s.seq.frames[0], s.mask, s.parts, quick_config(), 3).model;
    std::vector<BoundingBox> boxes;
    for (const auto& p : s.parts) boxes.push_back(p.box);
    const auto serial = segment_parts_serial(s.seq.frames[1], boxes, model);
    CHECK(segment_parts(s.seq.frames[1], boxes, model, 4) == serial);

    const auto f = part_feature(s.seq.frames[0], s.parts[0].box, s.parts[0].local_mask, model);
    CHECK_FALSE(f.empty);
    double norm = 0.0;
    for (double v : f.values) norm += v * v;
    CHECK(norm == doctest::Approx(1.0));
    const BinaryMask none(s.parts[0].box.w, s.parts[0].box.h);
    CHECK(part_feature(s.seq.frames[0], s.parts[0].box, none, model).empty);
}

TEST_CASE("uniform model gives 0.5 everywhere") {
    const auto s = small_scene();
    SegmenterModel zero;
    const auto out = segment_part(s.seq.frames[0], s.parts[0].box, zero);
    for (double v : out.values()) CHECK(v == 0.5);
}

TEST_CASE("model file round trip") {
    const auto dir = fs::temp_directory_path() / "partvos_test_model";
    fs::create_directories(dir);
    SegmenterModel m;
    m.patch_size = 48;
    for (int k = 0; k < kFeatureChannels; ++k) m.weights[static_cast<std::size_t>(k)] = std::ldexp(1.0, -k) - 0.3;
    m.bias = -1.0 / 3.0;
    save_model(dir / "m.pvsm", m);
    const auto back = load_model(dir / "m.pvsm");
    CHECK(back.patch_size == 48);
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(fs::file_size(dir / "m.pvsm") == 4 + 3 * 4 + 8 * (kFeatureChannels + 1));

    std::ofstream(dir / "bad.pvsm", std::ios::binary) << "XXXX";
    CHECK_THROWS_AS(load_model(dir / "bad.pvsm"), IoError);
    {
        std::ifstream in(dir / "m.pvsm", std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream(dir / "short.pvsm", std::ios::binary) << bytes.substr(0, 30);
    }
    CHECK_THROWS_AS(load_model(dir / "short.pvsm"), IoError);
}
