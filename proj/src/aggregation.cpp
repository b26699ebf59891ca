#include "partvos/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "partvos/parallel.hpp"

namespace partvos {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        d += t * t;
    }
    return d;
}

}  // namespace

double bank_sigma(std::span<const BankEntry> entries, double floor) {
    std::vector<double> d;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].feature.empty) continue;
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            if (entries[j].feature.empty) continue;
            d.push_back(squared_distance(entries[i].feature.values, entries[j].feature.values));
        }
    }
    if (d.empty()) return floor;
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size() / 2;
    const double median = d.size() % 2 ? d[m] : 0.5 * (d[m - 1] + d[m]);
    return std::max(median, floor);
}

InitialPartBank build_bank(const RgbImage& frame0, const BinaryMask& object_mask, std::span<const Part> parts,
                           const SegmenterModel& model, const AggConfig& cfg, int workers) {
    if (parts.empty()) throw std::invalid_argument("build_bank: no parts");
    InitialPartBank bank;
    bank.entries.resize(parts.size());
    parallel_for(parts.size(), workers, [&](std::size_t i) {
        const auto& part = parts[i];
        auto& e = bank.entries[i];
        e.part_id = part.id;
        e.box = part.box;
        e.local_mask = part.local_mask;
        e.feature = part_feature(frame0, part.box, part.local_mask, model);
        const auto predicted = binarize(segment_part(frame0, part.box, model), cfg.binarize_threshold);
        e.confidence = mask_iou(predicted, object_mask.crop(part.box));
    });
    bank.sigma = bank_sigma(bank.entries, cfg.sigma_floor);
    return bank;
}

NearestPart nearest_initial(const FeatureVector& feature, const InitialPartBank& bank) {
    if (bank.entries.empty()) throw std::invalid_argument("nearest_initial: empty bank");
    if (feature.empty) return NearestPart{-1, std::numeric_limits<double>::infinity()};
    NearestPart best{-1, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < bank.entries.size(); ++i) {
        const auto& e = bank.entries[i];
        if (e.feature.empty) continue;
        if (e.feature.values.size() != feature.values.size()) {
            throw std::invalid_argument("nearest_initial: feature dimension mismatch");
        }
        const double d = squared_distance(feature.values, e.feature.values);
        if (d < best.distance) best = NearestPart{static_cast<int>(i), d};
    }
    return best;
}

double similarity_weight(double distance, double sigma) {
    if (!(distance >= 0.0)) throw std::invalid_argument("similarity_weight: negative distance");
    if (!(sigma > 0.0)) throw std::invalid_argument("similarity_weight: sigma must be positive");
    return std::exp(-distance / sigma);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> id_order(std::span<const PartObservation> obs, int width, int height) {
    for (const auto& o : obs) {
        if (!o.box.valid() || o.box.x < 0 || o.box.y < 0 || o.box.right() > width || o.box.bottom() > height) {
            throw std::invalid_argument("aggregate: observation box outside the frame");
        }
        if (o.map.width() != o.box.w || o.map.height() != o.box.h) {
            throw std::invalid_argument("aggregate: map is not box-sized");
        }
        if (!(o.weight >= 0.0) || !std::isfinite(o.weight)) throw std::invalid_argument("aggregate: bad weight");
    }
    std::vector<std::size_t> order(obs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return obs[a].part_id < obs[b].part_id; });
    return order;
}

double vote_weight(const PartObservation& o, AggMode mode) { return mode == AggMode::seg ? o.weight : 1.0; }

// Final per-pixel division shared by both implementations.
double finish(double num, double den, double global_den, bool strict) {
    const double d = strict ? global_den : den;
    if (!(d > 0.0)) return 0.0;
    return std::clamp(num / d, 0.0, 1.0);
}

FrameAggregate package(std::span<const PartObservation> obs, const std::vector<std::size_t>& order,
                       ScoreMap map, const AggConfig& cfg) {
    FrameAggregate agg;
    agg.score_map = std::move(map);
    agg.empty = obs.empty();
    for (auto i : order) agg.contributions.push_back({obs[i].part_id, obs[i].box, vote_weight(obs[i], cfg.mode)});
    agg.centroid = mass_centroid(agg.score_map, cfg.binarize_threshold);
    return agg;
}

// |P_t|: the strict form averages over every part, whatever its weight.
double global_denominator(std::span<const PartObservation> obs) { return static_cast<double>(obs.size()); }

}  // namespace

FrameAggregate aggregate(std::span<const PartObservation> obs, const AggConfig& cfg, int width, int height,
                         int workers) {
    if (width < 1 || height < 1) throw std::invalid_argument("aggregate: bad frame size");
    const auto order = id_order(obs, width, height);
    const double global = global_denominator(obs);

    ScoreMap out(width, height);
    auto values = out.values();
    parallel_for(static_cast<std::size_t>(height), workers, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        std::vector<double> num(static_cast<std::size_t>(width), 0.0);
        std::vector<double> den(static_cast<std::size_t>(width), 0.0);
        for (auto i : order) {
            const auto& o = obs[i];
            if (y < o.box.y || y >= o.box.bottom()) continue;
            const double w = vote_weight(o, cfg.mode);
            const auto* src = o.map.values().data() + static_cast<std::size_t>(y - o.box.y) * o.box.w;
            for (int x = 0; x < o.box.w; ++x) {
                num[static_cast<std::size_t>(o.box.x + x)] += w * src[x];
                den[static_cast<std::size_t>(o.box.x + x)] += w;
            }
        }
        double* dst = values.data() + row * static_cast<std::size_t>(width);
        for (int x = 0; x < width; ++x) dst[x] = finish(num[x], den[x], global, cfg.strict_eq5);
    });
    return package(obs, order, std::move(out), cfg);
}

FrameAggregate aggregate_serial(std::span<const PartObservation> obs, const AggConfig& cfg, int width,
                                int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("aggregate: bad frame size");
    const auto order = id_order(obs, width, height);
    const double global = global_denominator(obs);

    const auto n = static_cast<std::size_t>(width) * height;
    std::vector<double> num(n, 0.0), den(n, 0.0);
    for (auto i : order) {
        const auto& o = obs[i];
        const double w = vote_weight(o, cfg.mode);
        for (int y = 0; y < o.box.h; ++y) {
            for (int x = 0; x < o.box.w; ++x) {
                const auto p = static_cast<std::size_t>(o.box.y + y) * width + (o.box.x + x);
                num[p] += w * o.map(x, y);
                den[p] += w;
            }
        }
    }
    ScoreMap out(width, height);
    for (std::size_t p = 0; p < n; ++p) out.values()[p] = finish(num[p], den[p], global, cfg.strict_eq5);
    return package(obs, order, std::move(out), cfg);
}

std::optional<std::pair<double, double>> mass_centroid(const ScoreMap& map, double threshold) {
    double sx = 0.0, sy = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (map(x, y) > threshold) {
                sx += x;
                sy += y;
                ++count;
            }
        }
    }
    if (count == 0) return std::nullopt;
    return std::pair{sx / static_cast<double>(count), sy / static_cast<double>(count)};
}

BinaryMask binarize_frame(const FrameAggregate& aggregate, double threshold) {
    return binarize(aggregate.score_map, threshold);
}

InstanceMask resolve_instances(std::span<const ScoreMap> maps, std::span<const std::uint8_t> labels,
                               double threshold) {
    if (maps.empty()) throw std::invalid_argument("resolve_instances: no instances");
    if (maps.size() != labels.size()) throw std::invalid_argument("resolve_instances: label count mismatch");
    const int w = maps.front().width();
    const int h = maps.front().height();
    for (const auto& m : maps) {
        if (m.width() != w || m.height() != h) throw std::invalid_argument("resolve_instances: size mismatch");
    }
    InstanceMask out(w, h);
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < maps.size(); ++k) {
            if (maps[k].values()[p] > maps[best].values()[p]) best = k;
        }
        out.labels()[p] = maps[best].values()[p] > threshold ? labels[best] : 0;
    }
    return out;
}

}  // namespace partvos
