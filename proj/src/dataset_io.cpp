#include "partvos/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "partvos/errors.hpp"

namespace fs = std::filesystem;

namespace partvos {

InstanceMask::InstanceMask(int width, int height)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("InstanceMask: dimensions must be positive");
    labels_.assign(static_cast<std::size_t>(width) * height, 0);
}

InstanceMask::InstanceMask(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("InstanceMask: dimensions must be positive");
    if (labels_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("InstanceMask: label count does not match dimensions");
    }
}

int InstanceMask::max_label() const noexcept {
    return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

std::vector<int> InstanceMask::instance_ids() const {
    std::array<bool, 256> seen{};
    for (auto l : labels_) seen[l] = true;
    std::vector<int> ids;
    for (int l = 1; l < 256; ++l) {
        if (seen[static_cast<std::size_t>(l)]) ids.push_back(l);
    }
    return ids;
}

BinaryMask InstanceMask::instance(int label) const {
    BinaryMask out(width_, height_);
    auto bits = out.bits();
    for (std::size_t i = 0; i < labels_.size(); ++i) bits[i] = labels_[i] == label ? 1 : 0;
    return out;
}

InstanceMask from_binary(const BinaryMask& mask, std::uint8_t label) {
    InstanceMask out(mask.width(), mask.height());
    const auto bits = mask.bits();
    auto labels = out.labels();
    for (std::size_t i = 0; i < bits.size(); ++i) labels[i] = bits[i] ? label : 0;
    return out;
}

std::string frame_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", index);
    return buf;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<unsigned long long> numeric_stem(const fs::path& p) {
    const auto stem = p.stem().string();
    if (stem.empty()) return std::nullopt;
    unsigned long long v = 0;
    const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), v);
    if (ec != std::errc{} || ptr != stem.data() + stem.size()) return std::nullopt;
    return v;
}

bool is_image(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace

std::vector<fs::path> list_numbered_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::pair<unsigned long long, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image(entry.path())) continue;
        if (auto n = numeric_stem(entry.path())) found.emplace_back(*n, entry.path());
    }
    // Filename as secondary key keeps the order stable if two stems share a value.
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second.filename() < b.second.filename();
    });
    std::vector<fs::path> out;
    out.reserve(found.size());
    for (auto& [n, p] : found) out.push_back(std::move(p));
    return out;
}

FrameSequence load_sequence(const fs::path& frames_dir, const fs::path& annotations_dir) {
    FrameSequence seq;
    seq.name = frames_dir.filename().string();
    if (seq.name.empty()) seq.name = frames_dir.parent_path().filename().string();

    const auto files = list_numbered_images(frames_dir);
    if (files.empty()) throw IoError("no numbered frames in " + frames_dir.string());

    for (const auto& f : files) {
        auto image = read_rgb(f);
        if (!seq.frames.empty() && (image.width() != seq.width() || image.height() != seq.height())) {
            throw IoError("frame " + f.filename().string() + " differs in size from the first frame");
        }
        const auto id = f.stem().string();
        std::optional<InstanceMask> annotation;
        const auto ann_path = annotations_dir / (id + ".png");
        if (fs::exists(ann_path)) {
            auto m = read_instance_png(ann_path);
            if (m.width() != image.width() || m.height() != image.height()) {
                throw IoError("annotation " + ann_path.string() + " does not match frame size");
            }
            annotation = std::move(m);
        }
        seq.frame_ids.push_back(id);
        seq.frames.push_back(std::move(image));
        seq.annotations.push_back(std::move(annotation));
    }
    if (!seq.annotations.front()) {
        throw IoError("missing annotation for first frame " + seq.frame_ids.front() + " in " + annotations_dir.string());
    }
    return seq;
}

void save_masks(const std::string& sequence_name, std::span<const InstanceMask> masks, const fs::path& out_dir,
                std::span<const std::string> frame_ids) {
    if (!frame_ids.empty() && frame_ids.size() != masks.size()) {
        throw std::invalid_argument("save_masks: frame id count does not match mask count");
    }
    const auto dir = out_dir / sequence_name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto id = frame_ids.empty() ? frame_id(i) : frame_ids[i];
        write_instance_png(dir / (id + ".png"), masks[i]);
    }
}

std::vector<std::pair<std::string, InstanceMask>> load_masks(const fs::path& dir) {
    std::vector<std::pair<std::string, InstanceMask>> out;
    for (const auto& p : list_numbered_images(dir)) {
        if (p.extension() != ".png") continue;
        out.emplace_back(p.stem().string(), read_instance_png(p));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string format_csv_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows) emit(r);
    return out;
}

void write_csv(const fs::path& path, const CsvTable& table) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_csv(table);
}

std::vector<ScoredBox> read_boxes(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<ScoredBox> boxes;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        ScoredBox b;
        if (!(fields >> b.box.x)) continue;
        if (!(fields >> b.box.y >> b.box.w >> b.box.h)) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 'x y w h [score]'");
        }
        if (!(fields >> b.score)) b.score = 0.0;
        if (!b.box.valid()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": empty box");
        boxes.push_back(b);
    }
    return boxes;
}

void write_boxes(const fs::path& path, std::span<const ScoredBox> boxes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& b : boxes) {
        out << b.box.x << ' ' << b.box.y << ' ' << b.box.w << ' ' << b.box.h << ' ' << format_csv_number(b.score)
            << '\n';
    }
}

}  // namespace partvos
