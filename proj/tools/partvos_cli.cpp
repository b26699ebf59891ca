// partvos command line: run, eval, track-eval, synth, train.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "partvos/config.hpp"
#include "partvos/dataset_io.hpp"
#include "partvos/errors.hpp"
#include "partvos/eval.hpp"
#include "partvos/part_gen.hpp"
#include "partvos/pipeline.hpp"
#include "partvos/roi_segment.hpp"
#include "partvos/rng.hpp"
#include "partvos/tracking.hpp"

namespace fs = std::filesystem;
using namespace partvos;

namespace {

constexpr int kExitError = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;
    std::vector<std::string> overrides;

    void attach(CLI::App* app, bool out_required) {
        app->add_option("--config", config, "key=value configuration file")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "random seed (overrides the config)");
        app->add_option("--workers", workers, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
        auto* o = app->add_option("--out", out, "output location");
        if (out_required) o->required();
        app->add_option("--set", overrides, "override a config key, key=value (repeatable)");
    }

    RunConfig resolve() const {
        RunConfig cfg = config.empty() ? RunConfig{} : RunConfig::from_file(config);
        cfg.apply_overrides(overrides);
        if (seed) cfg.rng_seed = *seed;
        if (workers) cfg.workers = *workers;
        cfg.validate();
        return cfg;
    }
};

std::vector<std::vector<BoundingBox>> read_proposals(const fs::path& dir, const std::vector<std::string>& ids) {
    std::vector<std::vector<BoundingBox>> out(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto file = dir / (ids[t] + ".txt");
        if (!fs::exists(file)) continue;
        for (const auto& b : read_boxes(file)) out[t].push_back(b.box);
    }
    return out;
}

// Sequence directories under `root`: the root itself when it holds numbered
// PNGs, else each subdirectory that does.
std::vector<fs::path> mask_dirs(const fs::path& root) {
    if (!list_numbered_images(root).empty()) return {root};
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && !list_numbered_images(e.path()).empty()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

SequenceReport evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir, const std::string& name, int tol) {
    const auto gt_masks = load_masks(gt_dir);
    if (gt_masks.empty()) throw IoError("no ground-truth masks in " + gt_dir.string());
    std::vector<InstanceMask> pred;
    std::vector<std::optional<InstanceMask>> gt;
    for (const auto& [id, mask] : gt_masks) {
        const auto file = pred_dir / (id + ".png");
        if (!fs::exists(file)) throw IoError("prediction missing for frame " + id + " in " + pred_dir.string());
        pred.push_back(read_instance_png(file));
        gt.emplace_back(mask);
    }
    return evaluate_sequence(name, pred, gt, tol);
}

void write_report(const MetricReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    for (const auto& s : report.sequences) write_csv(out_dir / (s.name + ".csv"), frame_table(s));
    std::ofstream(out_dir / "summary.txt") << summary_table(report);
}

int cmd_run(const Common& common, const std::string& frames_arg, const std::string& ann_arg,
            const std::string& davis, const std::string& sequence, const std::string& proposals_dir,
            const std::string& timing_path) {
    const auto cfg = common.resolve();
    fs::path frames_dir = frames_arg;
    fs::path ann_dir = ann_arg;
    if (!davis.empty()) {
        frames_dir = fs::path(davis) / "JPEGImages" / sequence;
        ann_dir = fs::path(davis) / "Annotations" / sequence;
    }
    const std::string name = sequence.empty() ? frames_dir.filename().string() : sequence;

    DirectorySource source(frames_dir);
    const auto ids = source.frame_ids();
    const auto first = ann_dir / (ids.front() + ".png");
    if (!fs::exists(first)) throw IoError("first-frame annotation missing: " + first.string());
    const auto annotation = read_instance_png(first);

    PipelineInputs inputs;
    if (!proposals_dir.empty()) inputs.proposals = read_proposals(proposals_dir, ids);

    const fs::path out_dir = common.out;
    const auto result = run_pipeline(source, annotation, cfg, {}, inputs);
    save_masks(name, result.masks, out_dir, ids);
    write_csv(timing_path.empty() ? out_dir / "timing.csv" : fs::path(timing_path), timing_table(result.timing));
    std::ofstream(out_dir / "config.txt") << cfg.to_text();

    for (const auto& inst : result.instances) {
        std::cerr << "instance " << inst.label << ": " << inst.parts << " parts, training loss "
                  << inst.final_training_loss;
        if (inst.lost_at) std::cerr << ", tracking lost at frame " << *inst.lost_at;
        std::cerr << '\n';
    }

    // Ground truth beyond frame 0 is only consulted once every mask is out.
    if (load_masks(ann_dir).size() > 1) {
        const auto report = summarize({evaluate_dirs(out_dir / name, ann_dir, name, cfg.eval.boundary_tolerance)});
        write_report(report, out_dir / "metrics");
        std::cout << summary_table(report);
    }
    return exit_status(result);
}

int cmd_eval(const Common& common, const std::string& pred_root, const std::string& gt_root) {
    const auto cfg = common.resolve();
    std::vector<SequenceReport> reports;
    const auto pred_dirs = mask_dirs(pred_root);
    if (pred_dirs.empty()) throw IoError("no mask directories under " + pred_root);
    const bool single = pred_dirs.size() == 1 && pred_dirs.front() == fs::path(pred_root);
    for (const auto& dir : pred_dirs) {
        const auto name = dir.filename().string();
        const fs::path gt_dir = single ? fs::path(gt_root) : fs::path(gt_root) / name;
        reports.push_back(evaluate_dirs(dir, gt_dir, name, cfg.eval.boundary_tolerance));
    }
    const auto report = summarize(std::move(reports));
    if (!common.out.empty()) write_report(report, common.out);
    std::cout << summary_table(report);
    return 0;
}

int cmd_track_eval(const Common& common, const std::string& pred_file, const std::string& gt_file) {
    common.resolve();
    std::vector<BoundingBox> pred, gt;
    for (const auto& b : read_boxes(pred_file)) pred.push_back(b.box);
    for (const auto& b : read_boxes(gt_file)) gt.push_back(b.box);
    if (pred.size() != gt.size()) {
        throw IoError("box files disagree in frame count: " + std::to_string(pred.size()) + " vs " +
                      std::to_string(gt.size()));
    }
    const auto thresholds = default_iou_thresholds();
    CsvTable table;
    table.header = {"iou_threshold", "recall"};
    for (const auto& [t, r] : iou_recall_curve(pred, gt, thresholds)) {
        table.rows.push_back({format_csv_number(t), format_csv_number(r)});
    }
    if (common.out.empty()) {
        std::cout << to_csv(table);
    } else {
        write_csv(common.out, table);
    }
    return 0;
}

int cmd_synth(const Common& common, const std::string& spec_file, const std::string& preset) {
    const auto cfg = common.resolve();
    SynthSpec spec;
    if (!spec_file.empty()) {
        std::ifstream in(spec_file);
        if (!in) throw IoError("cannot read " + spec_file);
        std::stringstream text;
        text << in.rdbuf();
        spec = SynthSpec::from_text(text.str());
    } else {
        spec = synth_preset(preset);
    }
    write_sequence(common.out, synth_sequence(spec, cfg.rng_seed));
    return 0;
}

int cmd_train(const Common& common, const std::string& frame_file, const std::string& mask_file, int label) {
    const auto cfg = common.resolve();
    const auto frame = read_rgb(frame_file);
    const auto annotation = read_instance_png(mask_file);
    if (annotation.width() != frame.width() || annotation.height() != frame.height()) {
        throw IoError("frame and annotation differ in size");
    }
    const auto mask = annotation.instance(label);
    if (mask.none()) throw IoError("label " + std::to_string(label) + " absent from " + mask_file);
    const auto seed = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(label));
    const auto parts = generate_parts(mask, cfg.parts, derive_seed(seed, 1));
    const auto trained = train_segmenter(frame, mask, parts, cfg.seg, derive_seed(seed, 2), cfg.workers);
    save_model(common.out, trained.model);
    std::cerr << parts.size() << " parts, " << trained.patches << " patches, final loss " << trained.final_loss
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Part-based online video object segmentation"};
    app.require_subcommand(1);

    Common run_opts, eval_opts, track_opts, synth_opts, train_opts;
    std::string frames, annotations, davis, sequence, proposals, timing;
    auto* run = app.add_subcommand("run", "segment a sequence from its first-frame annotation");
    run_opts.attach(run, true);
    auto* f_opt = run->add_option("--frames", frames, "directory of numbered frames")->check(CLI::ExistingDirectory);
    auto* a_opt = run->add_option("--annotations", annotations, "directory holding the first-frame annotation")
                      ->check(CLI::ExistingDirectory);
    auto* d_opt = run->add_option("--davis", davis, "DAVIS-layout root (JPEGImages/, Annotations/)")
                      ->check(CLI::ExistingDirectory);
    run->add_option("--sequence", sequence, "sequence name (required with --davis)");
    run->add_option("--proposals", proposals, "directory of <frame>.txt whole-object box proposals")
        ->check(CLI::ExistingDirectory);
    run->add_option("--timing", timing, "stage timing CSV (default <out>/timing.csv)");
    f_opt->excludes(d_opt);
    a_opt->excludes(d_opt);
    f_opt->needs(a_opt);
    a_opt->needs(f_opt);

    std::string pred, gt;
    auto* eval = app.add_subcommand("eval", "J/F metrics of predicted masks against ground truth");
    eval_opts.attach(eval, false);
    eval->add_option("--pred", pred, "predicted masks (sequence dir or parent of sequence dirs)")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval->add_option("--gt", gt, "ground-truth masks, same layout")->required()->check(CLI::ExistingDirectory);

    std::string pred_boxes, gt_boxes;
    auto* track_eval = app.add_subcommand("track-eval", "IoU-recall curve of per-frame object boxes");
    track_opts.attach(track_eval, false);
    track_eval->add_option("--pred", pred_boxes, "predicted boxes, one 'x y w h' line per frame")
        ->required()
        ->check(CLI::ExistingFile);
    track_eval->add_option("--gt", gt_boxes, "ground-truth boxes")->required()->check(CLI::ExistingFile);

    std::string spec_file, preset = "small";
    auto* synth = app.add_subcommand("synth", "write a synthetic sequence with exact ground truth");
    synth_opts.attach(synth, true);
    auto* s_opt = synth->add_option("--spec", spec_file, "key=value scene description")->check(CLI::ExistingFile);
    auto* p_opt = synth->add_option("--preset", preset, "built-in scene")
                      ->check(CLI::IsMember(synth_preset_names()));
    s_opt->excludes(p_opt);

    std::string frame_file, mask_file;
    int label = 1;
    auto* train = app.add_subcommand("train", "fit the part segmenter on one annotated frame");
    train_opts.attach(train, true);
    train->add_option("--frame", frame_file, "frame image")->required()->check(CLI::ExistingFile);
    train->add_option("--mask", mask_file, "annotation PNG")->required()->check(CLI::ExistingFile);
    train->add_option("--label", label, "instance label to train on")->check(CLI::Range(1, 255));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*run) {
            if (davis.empty() && frames.empty()) throw ConfigError("run: give --frames/--annotations or --davis");
            if (!davis.empty() && sequence.empty()) throw ConfigError("run: --davis needs --sequence");
            return cmd_run(run_opts, frames, annotations, davis, sequence, proposals, timing);
        }
        if (*eval) return cmd_eval(eval_opts, pred, gt);
        if (*track_eval) return cmd_track_eval(track_opts, pred_boxes, gt_boxes);
        if (*synth) return cmd_synth(synth_opts, spec_file, preset);
        if (*train) return cmd_train(train_opts, frame_file, mask_file, label);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
