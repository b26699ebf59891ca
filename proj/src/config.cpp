#include "partvos/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "partvos/errors.hpp"

namespace partvos {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError("config: cannot parse '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
    if (text == "0" || text == "false" || text == "off" || text == "no") return false;
    throw ConfigError("config: expected a boolean for " + std::string(key) + ", got '" + std::string(text) + "'");
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Field {
    const char* key;
    const char* doc;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename M>
Field real_field(const char* key, const char* doc, M member) {
    return Field{key, doc,
                 [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number<double>(key, v); },
                 [member](const RunConfig& c) { return format_double(member(c)); }};
}

template <typename M>
Field int_field(const char* key, const char* doc, M member) {
    return Field{key, doc,
                 [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number<int>(key, v); },
                 [member](const RunConfig& c) { return std::to_string(member(c)); }};
}

template <typename M>
Field bool_field(const char* key, const char* doc, M member) {
    return Field{key, doc, [member, key](RunConfig& c, std::string_view v) { member(c) = parse_bool(key, v); },
                 [member](const RunConfig& c) {
                     return std::string(member(c) ? "true" : "false");
                 }};
}

const std::vector<Field>& registry() {
    static const std::vector<Field> fields = {
        int_field("parts.n_proposals", "random proposals drawn per object, >= 1",
                  [](auto& c) -> auto& { return c.parts.n_proposals; }),
        real_field("parts.iou_min", "minimum proposal/object overlap, [0,1]",
                   [](auto& c) -> auto& { return c.parts.iou_min; }),
        real_field("parts.purity_min", "purity S_p must exceed this, [0,1)",
                   [](auto& c) -> auto& { return c.parts.purity_min; }),
        real_field("parts.nms_overlap", "NMS IoU threshold, (0,1)",
                   [](auto& c) -> auto& { return c.parts.nms_overlap; }),
        int_field("parts.max_count", "cap on emitted parts, >= 1",
                  [](auto& c) -> auto& { return c.parts.max_count; }),
        int_field("parts.min_count", "fewer survivors is an error, >= 1",
                  [](auto& c) -> auto& { return c.parts.min_count; }),
        Field{"parts.overlap", "overlap measure for the proposal filter: coverage | mask_iou",
              [](RunConfig& c, std::string_view v) {
                  if (v == "coverage") c.parts.overlap = OverlapMeasure::coverage;
                  else if (v == "mask_iou") c.parts.overlap = OverlapMeasure::mask_iou;
                  else throw ConfigError("config: parts.overlap must be coverage or mask_iou");
              },
              [](const RunConfig& c) {
                  return std::string(c.parts.overlap == OverlapMeasure::coverage ? "coverage" : "mask_iou");
              }},
        Field{"parts.purity", "purity denominator: box | pixel",
              [](RunConfig& c, std::string_view v) {
                  if (v == "box") c.parts.purity = PurityMode::box;
                  else if (v == "pixel") c.parts.purity = PurityMode::pixel;
                  else throw ConfigError("config: parts.purity must be box or pixel");
              },
              [](const RunConfig& c) { return std::string(c.parts.purity == PurityMode::box ? "box" : "pixel"); }},
        real_field("parts.center_margin", "proposal centre region margin per side, [0,1]",
                   [](auto& c) -> auto& { return c.parts.center_margin; }),
        real_field("parts.side_min", "smallest proposal side / object side, (0,1]",
                   [](auto& c) -> auto& { return c.parts.side_min; }),
        real_field("parts.side_max", "largest proposal side / object side, [side_min,1]",
                   [](auto& c) -> auto& { return c.parts.side_max; }),
        real_field("track.search_factor", "search region / template size, >= 1",
                   [](auto& c) -> auto& { return c.track.search_factor; }),
        real_field("track.peak_min", "peak score below this counts as unconfident, [0,1]",
                   [](auto& c) -> auto& { return c.track.peak_min; }),
        int_field("track.patience", "consecutive unconfident frames before a part dies, >= 1",
                  [](auto& c) -> auto& { return c.track.patience; }),
        real_field("track.template_blend", "weight of the newly tracked patch in the template, [0,1]",
                   [](auto& c) -> auto& { return c.track.template_blend; }),
        int_field("seg.patch_size", "aligned ROI side in pixels, >= 16",
                  [](auto& c) -> auto& { return c.seg.patch_size; }),
        real_field("seg.lr", "SGD learning rate, > 0", [](auto& c) -> auto& { return c.seg.lr; }),
        int_field("seg.epochs", "passes over the training patches, >= 1",
                  [](auto& c) -> auto& { return c.seg.epochs; }),
        int_field("seg.batch", "patches per mini-batch, >= 1", [](auto& c) -> auto& { return c.seg.batch; }),
        int_field("seg.augment_copies", "augmented copies per part patch, >= 0",
                  [](auto& c) -> auto& { return c.seg.augment_copies; }),
        int_field("seg.pixels_per_patch", "training pixels sampled per patch, >= 1",
                  [](auto& c) -> auto& { return c.seg.pixels_per_patch; }),
        Field{"agg.mode", "aggregation: ave | seg",
              [](RunConfig& c, std::string_view v) {
                  if (v == "ave") c.agg.mode = AggMode::ave;
                  else if (v == "seg") c.agg.mode = AggMode::seg;
                  else throw ConfigError("config: agg.mode must be ave or seg");
              },
              [](const RunConfig& c) { return std::string(to_string(c.agg.mode)); }},
        bool_field("agg.strict_eq5", "divide by the part count instead of per-pixel coverage",
                   [](auto& c) -> auto& { return c.agg.strict_eq5; }),
        real_field("agg.binarize_threshold", "foreground iff score > threshold, [0,1)",
                   [](auto& c) -> auto& { return c.agg.binarize_threshold; }),
        real_field("agg.sigma_floor", "lower bound of the similarity bandwidth, > 0",
                   [](auto& c) -> auto& { return c.agg.sigma_floor; }),
        bool_field("refine.gate", "attenuate scores outside the object box",
                   [](auto& c) -> auto& { return c.refine.gate; }),
        real_field("refine.alpha", "attenuation outside the object box, [0,1]",
                   [](auto& c) -> auto& { return c.refine.alpha; }),
        bool_field("refine.morph", "close-then-open the output mask",
                   [](auto& c) -> auto& { return c.refine.morph; }),
        int_field("refine.radius", "disc radius for refine.morph, >= 1",
                  [](auto& c) -> auto& { return c.refine.radius; }),
        int_field("eval.boundary_tolerance", "boundary match distance in pixels; 0 = ceil(0.8% diagonal)",
                  [](auto& c) -> auto& { return c.eval.boundary_tolerance; }),
        Field{"seed", "RNG seed for every stochastic step",
              [](RunConfig& c, std::string_view v) { c.rng_seed = parse_number<std::uint64_t>("seed", v); },
              [](const RunConfig& c) { return std::to_string(c.rng_seed); }},
        int_field("workers", "worker threads, 0 = OpenMP default", [](auto& c) -> auto& { return c.workers; }),
    };
    return fields;
}

const Field& lookup(std::string_view key) {
    for (const auto& f : registry()) {
        if (key == f.key) return f;
    }
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

void check(bool ok, const char* key, const char* range) {
    if (!ok) throw ConfigError(std::string("config: ") + key + " out of range (" + range + ")");
}

}  // namespace

std::string_view to_string(AggMode mode) noexcept {
    return mode == AggMode::ave ? "ave" : "seg";
}

void RunConfig::set(std::string_view key, std::string_view value) {
    lookup(key).set(*this, trim(value));
}

std::string RunConfig::get(std::string_view key) const {
    return lookup(key).get(*this);
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& f : registry()) out.emplace_back(f.key);
    return out;
}

std::string RunConfig::describe(std::string_view key) {
    return lookup(key).doc;
}

void RunConfig::validate() const {
    check(parts.n_proposals >= 1, "parts.n_proposals", ">= 1");
    check(parts.iou_min >= 0.0 && parts.iou_min <= 1.0, "parts.iou_min", "[0,1]");
    check(parts.purity_min >= 0.0 && parts.purity_min < 1.0, "parts.purity_min", "[0,1)");
    check(parts.nms_overlap > 0.0 && parts.nms_overlap < 1.0, "parts.nms_overlap", "(0,1)");
    check(parts.max_count >= 1, "parts.max_count", ">= 1");
    check(parts.min_count >= 1 && parts.min_count <= parts.max_count, "parts.min_count", "[1, max_count]");
    check(parts.center_margin >= 0.0 && parts.center_margin <= 1.0, "parts.center_margin", "[0,1]");
    check(parts.side_min > 0.0 && parts.side_min <= 1.0, "parts.side_min", "(0,1]");
    check(parts.side_max >= parts.side_min && parts.side_max <= 1.0, "parts.side_max", "[side_min,1]");
    check(track.search_factor >= 1.0, "track.search_factor", ">= 1");
    check(track.peak_min >= 0.0 && track.peak_min <= 1.0, "track.peak_min", "[0,1]");
    check(track.patience >= 1, "track.patience", ">= 1");
    check(track.template_blend >= 0.0 && track.template_blend <= 1.0, "track.template_blend", "[0,1]");
    check(seg.patch_size >= 16, "seg.patch_size", ">= 16");
    check(seg.lr > 0.0, "seg.lr", "> 0");
    check(seg.epochs >= 1, "seg.epochs", ">= 1");
    check(seg.batch >= 1, "seg.batch", ">= 1");
    check(seg.augment_copies >= 0, "seg.augment_copies", ">= 0");
    check(seg.pixels_per_patch >= 1, "seg.pixels_per_patch", ">= 1");
    check(agg.binarize_threshold >= 0.0 && agg.binarize_threshold < 1.0, "agg.binarize_threshold", "[0,1)");
    check(agg.sigma_floor > 0.0, "agg.sigma_floor", "> 0");
    check(refine.alpha >= 0.0 && refine.alpha <= 1.0, "refine.alpha", "[0,1]");
    check(refine.radius >= 1, "refine.radius", ">= 1");
    check(eval.boundary_tolerance >= 0, "eval.boundary_tolerance", ">= 0");
    check(workers >= 0, "workers", ">= 0");
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& f : registry()) {
        out += f.key;
        out += '=';
        out += f.get(*this);
        out += '\n';
    }
    return out;
}

void RunConfig::apply_text(std::string_view text, std::string_view origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key=value");
        }
        try {
            set(trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw ConfigError("config: override '" + a + "' is not key=value");
        set(trim(std::string_view(a).substr(0, eq)), std::string_view(a).substr(eq + 1));
    }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig cfg;
    cfg.apply_text(buffer.str(), path.string());
    return cfg;
}

}  // namespace partvos
