#include "partvos/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace partvos {

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw std::invalid_argument(std::string(what) + ": mask dimensions differ");
    }
}

// |a ∩ b|
std::size_t overlap(const BinaryMask& a, const BinaryMask& b) {
    std::size_t n = 0;
    const auto x = a.bits();
    const auto y = b.bits();
    for (std::size_t i = 0; i < x.size(); ++i) n += (x[i] && y[i]) ? 1 : 0;
    return n;
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double j_frame(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_dims(pred, gt, "j_frame");
    return mask_iou(pred, gt);
}

BinaryMask boundary_pixels(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask(x - 1, y) || !mask(x + 1, y) ||
                              !mask(x, y - 1) || !mask(x, y + 1);
            if (edge) out.set(x, y, true);
        }
    }
    return out;
}

int default_boundary_tolerance(int width, int height) {
    return static_cast<int>(std::ceil(0.008 * std::hypot(static_cast<double>(width), static_cast<double>(height))));
}

double f_frame(const BinaryMask& pred, const BinaryMask& gt, int tolerance) {
    require_same_dims(pred, gt, "f_frame");
    if (tolerance < 0) throw std::invalid_argument("f_frame: negative tolerance");
    const auto bp = boundary_pixels(pred);
    const auto bg = boundary_pixels(gt);
    const auto np = bp.count();
    const auto ng = bg.count();
    if (np == 0 && ng == 0) return 1.0;
    if (np == 0 || ng == 0) return 0.0;
    const auto bp_zone = tolerance > 0 ? morphology(bp, MorphOp::dilate, tolerance) : bp;
    const auto bg_zone = tolerance > 0 ? morphology(bg, MorphOp::dilate, tolerance) : bg;
    const double precision = static_cast<double>(overlap(bp, bg_zone)) / static_cast<double>(np);
    const double recall = static_cast<double>(overlap(bg, bp_zone)) / static_cast<double>(ng);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

SequenceStats sequence_stats(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("sequence_stats: no frames");
    SequenceStats s;
    s.mean = mean_of(values);
    s.recall = static_cast<double>(std::count_if(values.begin(), values.end(), [](double v) { return v > 0.5; })) /
               static_cast<double>(values.size());
    const std::size_t q = values.size() / 4;
    if (q == 0) {
        s.decay_undefined = true;
        return s;
    }
    s.decay = mean_of(values.first(q)) - mean_of(values.last(q));
    return s;
}

SequenceReport evaluate_sequence(const std::string& name, std::span<const InstanceMask> pred,
                                 std::span<const std::optional<InstanceMask>> gt, int tolerance) {
    if (pred.size() != gt.size()) throw std::invalid_argument("evaluate_sequence: frame counts differ");
    if (gt.empty() || !gt.front()) throw std::invalid_argument("evaluate_sequence: first annotation missing");
    SequenceReport r;
    r.name = name;
    r.instances = gt.front()->instance_ids();
    if (r.instances.empty()) r.instances.push_back(1);
    const int tol = tolerance > 0 ? tolerance : default_boundary_tolerance(gt.front()->width(), gt.front()->height());
    r.j_instance.resize(r.instances.size());
    r.f_instance.resize(r.instances.size());

    for (std::size_t t = 1; t < pred.size(); ++t) {
        if (!gt[t]) continue;
        if (pred[t].width() != gt[t]->width() || pred[t].height() != gt[t]->height()) {
            throw std::invalid_argument("evaluate_sequence: mask dimensions differ at frame " + std::to_string(t));
        }
        double js = 0.0, fs = 0.0;
        for (std::size_t k = 0; k < r.instances.size(); ++k) {
            const auto p = pred[t].instance(r.instances[k]);
            const auto g = gt[t]->instance(r.instances[k]);
            const double j = j_frame(p, g);
            const double f = f_frame(p, g, tol);
            r.j_instance[k].push_back(j);
            r.f_instance[k].push_back(f);
            js += j;
            fs += f;
        }
        r.frames.push_back(t);
        r.j.push_back(js / static_cast<double>(r.instances.size()));
        r.f.push_back(fs / static_cast<double>(r.instances.size()));
    }
    if (r.frames.empty()) throw std::invalid_argument("evaluate_sequence: no annotated frame after the first");
    r.j_stats = sequence_stats(r.j);
    r.f_stats = sequence_stats(r.f);
    return r;
}

MetricReport summarize(std::vector<SequenceReport> sequences) {
    MetricReport m;
    m.sequences = std::move(sequences);
    if (m.sequences.empty()) return m;
    const auto n = static_cast<double>(m.sequences.size());
    for (const auto& s : m.sequences) {
        m.j.mean += s.j_stats.mean / n;
        m.j.recall += s.j_stats.recall / n;
        m.j.decay += s.j_stats.decay / n;
        m.f.mean += s.f_stats.mean / n;
        m.f.recall += s.f_stats.recall / n;
        m.f.decay += s.f_stats.decay / n;
        m.j.decay_undefined = m.j.decay_undefined || s.j_stats.decay_undefined;
        m.f.decay_undefined = m.f.decay_undefined || s.f_stats.decay_undefined;
    }
    return m;
}

CsvTable frame_table(const SequenceReport& report) {
    CsvTable t;
    t.header = {"frame_index", "J", "F"};
    const bool multi = report.instances.size() > 1;
    if (multi) {
        for (int k : report.instances) {
            t.header.push_back("J_" + std::to_string(k));
            t.header.push_back("F_" + std::to_string(k));
        }
    }
    for (std::size_t i = 0; i < report.frames.size(); ++i) {
        std::vector<std::string> row{std::to_string(report.frames[i]), format_csv_number(report.j[i]),
                                     format_csv_number(report.f[i])};
        if (multi) {
            for (std::size_t k = 0; k < report.instances.size(); ++k) {
                row.push_back(format_csv_number(report.j_instance[k][i]));
                row.push_back(format_csv_number(report.f_instance[k][i]));
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string summary_table(const MetricReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"sequence", "J mean", "J recall", "J decay", "F mean", "F recall", "F decay", "T mean"});
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    auto row_of = [&](const std::string& name, const SequenceStats& j, const SequenceStats& f) {
        return std::vector<std::string>{name,        fmt(j.mean), fmt(j.recall), fmt(j.decay),
                                        fmt(f.mean), fmt(f.recall), fmt(f.decay), "n/a"};
    };
    for (const auto& s : report.sequences) rows.push_back(row_of(s.name, s.j_stats, s.f_stats));
    if (!report.sequences.empty()) rows.push_back(row_of("mean", report.j, report.f));

    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c == 0) {
                out << r[c] << std::string(width[c] - r[c].size(), ' ');
            } else {
                out << "  " << std::string(width[c] - r[c].size(), ' ') << r[c];
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace partvos
