// Deterministic synthetic sequences: textured shapes moving rigidly over a
// smooth background, with exact per-frame ground truth.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "partvos/dataset_io.hpp"
#include "partvos/errors.hpp"
#include "partvos/rng.hpp"

namespace fs = std::filesystem;

namespace partvos {

namespace {

// Lattice value in [-1, 1] from an integer hash.
double lattice(std::uint64_t seed, long long ix, long long iy) noexcept {
    const auto ux = static_cast<std::uint64_t>(ix);
    const auto uy = static_cast<std::uint64_t>(iy);
    const std::uint64_t h = derive_seed(derive_seed(seed, ux), uy);
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

double smooth(double t) noexcept { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double u, double v, double spacing) noexcept {
    const double fu = u / spacing;
    const double fv = v / spacing;
    const double iu = std::floor(fu);
    const double iv = std::floor(fv);
    const auto x0 = static_cast<long long>(iu);
    const auto y0 = static_cast<long long>(iv);
    const double a = smooth(fu - iu);
    const double b = smooth(fv - iv);
    const double top = lattice(seed, x0, y0) * (1 - a) + lattice(seed, x0 + 1, y0) * a;
    const double bot = lattice(seed, x0, y0 + 1) * (1 - a) + lattice(seed, x0 + 1, y0 + 1) * a;
    return top * (1 - b) + bot * b;
}

// Three octaves, result in [-1, 1].
double fractal_noise(std::uint64_t seed, double u, double v, double spacing) noexcept {
    return (value_noise(derive_seed(seed, 1), u, v, spacing) * 0.5 +
            value_noise(derive_seed(seed, 2), u, v, spacing * 2.0) * 0.3 +
            value_noise(derive_seed(seed, 3), u, v, spacing * 4.0) * 0.2);
}

std::uint8_t to_byte(double v) noexcept {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

struct Pose {
    double cx, cy, cos_a, sin_a;
};

Pose pose_at(const SynthObject& o, int t) {
    const double angle = o.rot_deg * t * std::numbers::pi / 180.0;
    return Pose{o.cx + o.dx * t, o.cy + o.dy * t, std::cos(angle), std::sin(angle)};
}

// Object coordinates of pixel centre (x, y).
std::pair<double, double> to_object(const Pose& p, int x, int y) noexcept {
    const double ox = x - p.cx;
    const double oy = y - p.cy;
    return {p.cos_a * ox + p.sin_a * oy, -p.sin_a * ox + p.cos_a * oy};
}

bool inside(const SynthObject& o, double u, double v) noexcept {
    if (o.shape == SynthShape::ellipse) return (u / o.rx) * (u / o.rx) + (v / o.ry) * (v / o.ry) <= 1.0;
    return std::abs(u) <= o.rx && std::abs(v) <= o.ry;
}

void check_in_frame(const SynthObject& o, std::size_t index, int t, int width, int height) {
    const auto p = pose_at(o, t);
    const double c = std::abs(p.cos_a);
    const double s = std::abs(p.sin_a);
    double ex, ey;
    if (o.shape == SynthShape::ellipse) {
        ex = std::sqrt(o.rx * o.rx * c * c + o.ry * o.ry * s * s);
        ey = std::sqrt(o.rx * o.rx * s * s + o.ry * o.ry * c * c);
    } else {
        ex = o.rx * c + o.ry * s;
        ey = o.rx * s + o.ry * c;
    }
    if (p.cx - ex < 0.0 || p.cy - ey < 0.0 || p.cx + ex > width - 1 || p.cy + ey > height - 1) {
        throw std::invalid_argument("synth_sequence: object " + std::to_string(index + 1) + " leaves the frame at t=" +
                                    std::to_string(t));
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("synth spec: cannot parse '" + v + "' for " + key);
    }
}

}  // namespace

FrameSequence synth_sequence(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.width <= 0 || spec.height <= 0 || spec.frames <= 0) {
        throw std::invalid_argument("synth_sequence: dimensions and frame count must be positive");
    }
    if (spec.objects.empty()) throw std::invalid_argument("synth_sequence: no objects");
    if (spec.objects.size() > 255) throw std::invalid_argument("synth_sequence: at most 255 objects");
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& o = spec.objects[k];
        if (o.rx <= 0 || o.ry <= 0) throw std::invalid_argument("synth_sequence: object extents must be positive");
        for (int t = 0; t < spec.frames; ++t) check_in_frame(o, k, t, spec.width, spec.height);
    }

    const std::uint64_t bg_seed = derive_seed(seed, 0);
    const int w = spec.width;
    const int h = spec.height;

    // The background never moves, so render it once.
    std::vector<std::array<double, 3>> background(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double n = fractal_noise(bg_seed, x, y, 12.0);
            const double ramp = (static_cast<double>(x) / w - 0.5) * 30.0 + (static_cast<double>(y) / h - 0.5) * 20.0;
            auto& px = background[static_cast<std::size_t>(y) * w + x];
            for (int c = 0; c < 3; ++c) {
                px[static_cast<std::size_t>(c)] =
                    spec.background[static_cast<std::size_t>(c)] + ramp * (c == 2 ? -0.5 : 0.5) + spec.background_amplitude * n;
            }
        }
    }

    FrameSequence seq;
    seq.name = spec.name;
    for (int t = 0; t < spec.frames; ++t) {
        RgbImage frame(w, h);
        InstanceMask labels(w, h);
        std::vector<Pose> poses;
        for (const auto& o : spec.objects) poses.push_back(pose_at(o, t));

        Rng noise(derive_seed(seed, 1000 + static_cast<std::uint64_t>(t)));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                std::array<double, 3> px = background[static_cast<std::size_t>(y) * w + x];
                for (std::size_t k = spec.objects.size(); k-- > 0;) {
                    const auto& o = spec.objects[k];
                    const auto [u, v] = to_object(poses[k], x, y);
                    if (!inside(o, u, v)) continue;
                    const double n = fractal_noise(derive_seed(seed, 10 + k), u, v, o.texture_scale);
                    static constexpr std::array<double, 3> tint{1.0, 0.8, 0.6};
                    for (std::size_t c = 0; c < 3; ++c) px[c] = o.color[c] + o.texture_amplitude * n * tint[c];
                    labels.set(x, y, static_cast<std::uint8_t>(k + 1));
                    break;
                }
                if (spec.noise_sigma > 0.0) {
                    for (auto& c : px) c += spec.noise_sigma * noise.normal();
                }
                frame.set(x, y, to_byte(px[0]), to_byte(px[1]), to_byte(px[2]));
            }
        }
        seq.frame_ids.push_back(frame_id(static_cast<std::size_t>(t)));
        seq.frames.push_back(std::move(frame));
        seq.annotations.emplace_back(std::move(labels));
    }
    return seq;
}

SynthSpec SynthSpec::from_text(std::string_view text) {
    SynthSpec spec;
    spec.objects.clear();
    std::istringstream in{std::string(text)};
    std::string line;
    auto object = [&spec](std::size_t n) -> SynthObject& {
        if (n == 0 || n > 255) throw ConfigError("synth spec: object index must be 1..255");
        if (spec.objects.size() < n) spec.objects.resize(n);
        return spec.objects[n - 1];
    };
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                throw ConfigError("synth spec: expected key=value, got '" + line + "'");
            }
            continue;
        }
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));

        if (key == "name") spec.name = value;
        else if (key == "width") spec.width = static_cast<int>(parse_real(key, value));
        else if (key == "height") spec.height = static_cast<int>(parse_real(key, value));
        else if (key == "frames") spec.frames = static_cast<int>(parse_real(key, value));
        else if (key == "noise") spec.noise_sigma = parse_real(key, value);
        else if (key == "bg.r") spec.background[0] = parse_real(key, value);
        else if (key == "bg.g") spec.background[1] = parse_real(key, value);
        else if (key == "bg.b") spec.background[2] = parse_real(key, value);
        else if (key == "bg.amp") spec.background_amplitude = parse_real(key, value);
        else if (key.rfind("obj", 0) == 0 && key.find('.') != std::string::npos) {
            const auto dot = key.find('.');
            std::size_t n = 0;
            const auto idx = key.substr(3, dot - 3);
            const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), n);
            if (ec != std::errc{} || ptr != idx.data() + idx.size()) throw ConfigError("synth spec: bad key " + key);
            auto& o = object(n);
            const auto field = key.substr(dot + 1);
            if (field == "shape") {
                if (value == "ellipse") o.shape = SynthShape::ellipse;
                else if (value == "rect" || value == "rectangle") o.shape = SynthShape::rectangle;
                else throw ConfigError("synth spec: unknown shape '" + value + "'");
            } else if (field == "cx") o.cx = parse_real(key, value);
            else if (field == "cy") o.cy = parse_real(key, value);
            else if (field == "rx") o.rx = parse_real(key, value);
            else if (field == "ry") o.ry = parse_real(key, value);
            else if (field == "dx") o.dx = parse_real(key, value);
            else if (field == "dy") o.dy = parse_real(key, value);
            else if (field == "rot") o.rot_deg = parse_real(key, value);
            else if (field == "r") o.color[0] = parse_real(key, value);
            else if (field == "g") o.color[1] = parse_real(key, value);
            else if (field == "b") o.color[2] = parse_real(key, value);
            else if (field == "amp") o.texture_amplitude = parse_real(key, value);
            else if (field == "scale") o.texture_scale = parse_real(key, value);
            else throw ConfigError("synth spec: unknown key " + key);
        } else {
            throw ConfigError("synth spec: unknown key " + key);
        }
    }
    return spec;
}

SynthSpec synth_preset(std::string_view name) {
    SynthSpec s;
    s.name = std::string(name);
    SynthObject o;
    if (name == "static") {
        o.cx = 80; o.cy = 60; o.rx = 32; o.ry = 24;
        s.frames = 6;
    } else if (name == "small") {
        o.cx = 60; o.cy = 60; o.rx = 30; o.ry = 22; o.dx = 2; o.dy = 0.5;
        s.frames = 12;
    } else if (name == "translate") {
        s.width = 854;
        s.height = 480;
        s.frames = 30;
        o.cx = 300; o.cy = 220; o.rx = 90; o.ry = 65; o.dx = 6; o.dy = 2;
        o.texture_scale = 6;
    } else if (name == "pair") {
        s.width = 200;
        s.frames = 8;
        o.cx = 55; o.cy = 60; o.rx = 30; o.ry = 24; o.dx = 2;
        SynthObject b;
        b.shape = SynthShape::rectangle;
        b.cx = 150; b.cy = 62; b.rx = 26; b.ry = 30; b.dx = -1.5;
        b.color = {70.0, 190.0, 80.0};
        s.objects.push_back(o);
        s.objects.push_back(b);
        return s;
    } else {
        throw ConfigError("unknown synth preset '" + std::string(name) + "'");
    }
    s.objects.push_back(o);
    return s;
}

std::vector<std::string> synth_preset_names() { return {"static", "small", "translate", "pair"}; }

void write_sequence(const fs::path& root, const FrameSequence& seq) {
    const auto frames_dir = root / "JPEGImages" / seq.name;
    const auto ann_dir = root / "Annotations" / seq.name;
    fs::create_directories(frames_dir);
    fs::create_directories(ann_dir);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto id = i < seq.frame_ids.size() ? seq.frame_ids[i] : frame_id(i);
        write_rgb_png(frames_dir / (id + ".png"), seq.frames[i]);
        if (seq.annotations[i]) write_instance_png(ann_dir / (id + ".png"), *seq.annotations[i]);
    }
}

}  // namespace partvos
