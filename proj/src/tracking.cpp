#include "partvos/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fft_correlate.hpp"
#include "partvos/errors.hpp"
#include "partvos/parallel.hpp"

namespace partvos {

namespace {

// Mean squared deviation below this is treated as a flat patch.
constexpr double kFlatVariance = 1e-10;

struct Centered {
    Plane values;        // zero-mean template
    double norm = 0.0;   // sqrt of the sum of squares
    bool flat = false;
};

Centered center_template(const Plane& tmpl) {
    const auto n = static_cast<double>(tmpl.size());
    double mean = 0.0;
    for (double v : tmpl.values()) mean += v;
    mean /= n;
    Centered c{Plane(tmpl.width(), tmpl.height()), 0.0, false};
    double ss = 0.0;
    auto out = c.values.values();
    const auto in = tmpl.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = in[i] - mean;
        ss += out[i] * out[i];
    }
    c.norm = std::sqrt(ss);
    c.flat = ss <= kFlatVariance * n;
    return c;
}

void require_fits(const Plane& tmpl, const Plane& search) {
    if (tmpl.empty() || search.empty()) throw std::invalid_argument("ncc_track: empty patch");
    if (search.width() < tmpl.width() || search.height() < tmpl.height()) {
        throw std::invalid_argument("ncc_track: search region smaller than template");
    }
}

double to_unit(double ncc) noexcept { return 0.5 * (std::clamp(ncc, -1.0, 1.0) + 1.0); }

}  // namespace

TrackResponse ncc_track(const Plane& tmpl, const Plane& search) {
    require_fits(tmpl, search);
    const int ow = search.width() - tmpl.width() + 1;
    const int oh = search.height() - tmpl.height() + 1;
    const auto centered = center_template(tmpl);
    if (centered.flat) return TrackResponse{ScoreMap(ow, oh, 0.5), true};

    const auto numerator = detail::correlate_valid_fft(search, centered.values);

    // Integral images of the search values and their squares.
    const int sw = search.width();
    const int sh = search.height();
    std::vector<double> s1(static_cast<std::size_t>(sw + 1) * (sh + 1), 0.0);
    std::vector<double> s2(s1.size(), 0.0);
    for (int y = 0; y < sh; ++y) {
        double row1 = 0.0, row2 = 0.0;
        for (int x = 0; x < sw; ++x) {
            const double v = search(x, y);
            row1 += v;
            row2 += v * v;
            const std::size_t i = static_cast<std::size_t>(y + 1) * (sw + 1) + (x + 1);
            s1[i] = s1[i - (sw + 1)] + row1;
            s2[i] = s2[i - (sw + 1)] + row2;
        }
    }
    auto box_sum = [sw](const std::vector<double>& s, int x, int y, int w, int h) {
        const auto at = [&](int xx, int yy) { return s[static_cast<std::size_t>(yy) * (sw + 1) + xx]; };
        return at(x + w, y + h) - at(x, y + h) - at(x + w, y) + at(x, y);
    };

    const int tw = tmpl.width();
    const int th = tmpl.height();
    const auto n = static_cast<double>(tmpl.size());
    std::vector<double> scores(numerator.size());
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const double sum = box_sum(s1, x, y, tw, th);
            const double sq = box_sum(s2, x, y, tw, th);
            const double var_sum = sq - sum * sum / n;
            const std::size_t i = static_cast<std::size_t>(y) * ow + x;
            scores[i] = var_sum <= kFlatVariance * n ? 0.5
                                                     : to_unit(numerator[i] / (std::sqrt(var_sum) * centered.norm));
        }
    }
    return TrackResponse{ScoreMap(ow, oh, std::move(scores)), false};
}

TrackResponse ncc_track_spatial(const Plane& tmpl, const Plane& search) {
    require_fits(tmpl, search);
    const int ow = search.width() - tmpl.width() + 1;
    const int oh = search.height() - tmpl.height() + 1;
    const auto centered = center_template(tmpl);
    if (centered.flat) return TrackResponse{ScoreMap(ow, oh, 0.5), true};

    const int tw = tmpl.width();
    const int th = tmpl.height();
    const auto n = static_cast<double>(tmpl.size());
    std::vector<double> scores(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double mean = 0.0;
            for (int j = 0; j < th; ++j) {
                for (int i = 0; i < tw; ++i) mean += search(x + i, y + j);
            }
            mean /= n;
            double num = 0.0, var_sum = 0.0;
            for (int j = 0; j < th; ++j) {
                for (int i = 0; i < tw; ++i) {
                    const double d = search(x + i, y + j) - mean;
                    num += d * centered.values(i, j);
                    var_sum += d * d;
                }
            }
            scores[static_cast<std::size_t>(y) * ow + x] =
                var_sum <= kFlatVariance * n ? 0.5 : to_unit(num / (std::sqrt(var_sum) * centered.norm));
        }
    }
    return TrackResponse{ScoreMap(ow, oh, std::move(scores)), false};
}

Peak find_peak(std::span<const double> values, int width, int height) {
    if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("find_peak: bad map dimensions");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return Peak{static_cast<int>(best % width), static_cast<int>(best / width), values[best]};
}

TrackState init_track_state(int part_id, const BoundingBox& box, const Plane& frame_luma) {
    TrackState s;
    s.part_id = part_id;
    s.box = box;
    s.tmpl = crop(frame_luma, box);
    s.initial_tmpl = s.tmpl;
    return s;
}

std::optional<BoundingBox> search_region(const BoundingBox& box, double factor, int width, int height) {
    const int sw = std::max(box.w, static_cast<int>(std::floor(box.w * factor + 0.5)));
    const int sh = std::max(box.h, static_cast<int>(std::floor(box.h * factor + 0.5)));
    return clip_box(box_centered_at(box.center_x(), box.center_y(), sw, sh), width, height);
}

StepResult step_part(const TrackState& state, const Plane& next_luma, const TrackConfig& cfg) {
    if (!state.alive) throw std::invalid_argument("step_part: part is dead");

    StepResult r;
    r.state = state;
    r.box = state.box;

    const auto region = search_region(state.box, cfg.search_factor, next_luma.width(), next_luma.height());
    if (!region || region->w < state.tmpl.width() || region->h < state.tmpl.height()) {
        r.state.alive = false;
        return r;
    }

    auto response = ncc_track(state.tmpl, crop(next_luma, *region));
    const auto peak = find_peak(response.map);
    r.state.last_peak = peak.value;
    r.confident = !response.degenerate && peak.value >= cfg.peak_min;

    if (!response.degenerate) {
        r.box = BoundingBox{region->x + peak.x, region->y + peak.y, state.tmpl.width(), state.tmpl.height()};
        r.state.box = r.box;
    }
    if (r.confident) {
        r.state.low_streak = 0;
        const auto fresh = crop(next_luma, r.box);
        const double a = cfg.template_blend;
        auto t = r.state.tmpl.values();
        const auto f = fresh.values();
        const auto init = state.initial_tmpl.values();
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = a * f[i] + (1.0 - a) * init[i];
    } else {
        ++r.state.low_streak;
        if (r.state.low_streak >= cfg.patience) r.state.alive = false;
    }
    r.map = std::move(response.map);
    return r;
}

namespace {

void require_any_alive(std::span<const TrackState> states) {
    if (std::none_of(states.begin(), states.end(), [](const TrackState& s) { return s.alive; })) {
        throw TrackingLostError("track_all_parts: no live parts");
    }
}

StepResult pass_through(const TrackState& s) {
    StepResult r;
    r.box = s.box;
    r.state = s;
    return r;
}

}  // namespace

std::vector<StepResult> track_all_parts(std::span<const TrackState> states, const Plane& next_luma,
                                        const TrackConfig& cfg, int workers) {
    require_any_alive(states);
    std::vector<StepResult> out(states.size());
    parallel_for(states.size(), workers, [&](std::size_t i) {
        out[i] = states[i].alive ? step_part(states[i], next_luma, cfg) : pass_through(states[i]);
    });
    return out;
}

std::vector<StepResult> track_all_parts_serial(std::span<const TrackState> states, const Plane& next_luma,
                                               const TrackConfig& cfg) {
    require_any_alive(states);
    std::vector<StepResult> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.alive ? step_part(s, next_luma, cfg) : pass_through(s));
    return out;
}

ObjectTrackResult object_track(const BoundingBox& previous, std::optional<std::pair<double, double>> centroid,
                               std::span<const BoundingBox> candidates) {
    if (candidates.empty()) return ObjectTrackResult{previous, std::nullopt, true};
    const double rx = centroid ? centroid->first : previous.center_x();
    const double ry = centroid ? centroid->second : previous.center_y();

    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double dx = candidates[i].center_x() - rx;
        const double dy = candidates[i].center_y() - ry;
        const double d = dx * dx + dy * dy;
        if (i == 0 || d < best_d || (d == best_d && candidates[i].area() > candidates[best].area())) {
            best = i;
            best_d = d;
        }
    }
    return ObjectTrackResult{candidates[best], best, !centroid.has_value()};
}

std::vector<double> default_iou_thresholds() {
    std::vector<double> t;
    for (int k = 0; k <= 20; ++k) t.push_back(k / 20.0);
    return t;
}

std::vector<std::pair<double, double>> iou_recall_curve(std::span<const BoundingBox> pred,
                                                        std::span<const BoundingBox> gt,
                                                        std::span<const double> thresholds) {
    if (pred.size() != gt.size()) throw std::invalid_argument("iou_recall_curve: frame counts differ");
    std::vector<double> ious;
    ious.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) ious.push_back(box_iou(pred[i], gt[i]));
    std::vector<std::pair<double, double>> curve;
    for (double t : thresholds) {
        const auto hits = std::count_if(ious.begin(), ious.end(), [t](double v) { return v >= t; });
        curve.emplace_back(t, pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size()));
    }
    return curve;
}

}  // namespace partvos
