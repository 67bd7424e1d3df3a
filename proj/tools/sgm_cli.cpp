// sgm: command-line front end for frame interpolation, dataset curation and evaluation.
//
// Exit codes: 0 success, 1 processing errors, 2 usage / IO errors.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"

#include "sgm/config.hpp"
#include "sgm/io.hpp"
#include "sgm/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgm;

namespace {

constexpr int kExitProcessing = 1;
constexpr int kExitUsage = 2;

/// Raised while loading inputs; maps to the usage / IO exit code.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename F>
auto load(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

PipelineConfig config_from(const std::string& path) {
    return load([&] { return path.empty() ? PipelineConfig{} : load_config(path); });
}

ImageU8 image_from(const std::string& path) {
    return load([&] { return io::read_image(path); });
}

std::pair<ImageU8, ImageU8> frame_pair(const std::string& a, const std::string& b) {
    auto f0 = image_from(a);
    auto f1 = image_from(b);
    if (!f0.same_size(f1) || f0.channels() != f1.channels()) {
        throw UsageError("frames differ in size or channel count: " + a + ", " + b);
    }
    return {std::move(f0), std::move(f1)};
}

std::optional<std::pair<FeatureTensor, FeatureTensor>> external_features(const std::vector<std::string>& paths) {
    if (paths.empty()) {
        return std::nullopt;
    }
    return load([&] {
        return std::make_pair(io::read_feature_tensor(paths.at(0)), io::read_feature_tensor(paths.at(1)));
    });
}

/// Infinite metrics (PSNR of identical images) are written as the string "inf".
json metric(double v) {
    return std::isinf(v) ? json("inf") : json(v);
}

json metrics_json(const curation::Metrics& m) {
    return {{"psnr", metric(m.psnr)}, {"ssim", m.ssim}};
}

void write_json(const fs::path& path, const json& j) {
    io::write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- interpolate

struct InterpolateArgs {
    std::string frame0, frame1, out, config;
    bool dump = false;
    std::vector<std::string> features;
};

int cmd_interpolate(const InterpolateArgs& a) {
    const auto config = config_from(a.config);
    const auto [f0, f1] = frame_pair(a.frame0, a.frame1);
    const auto tensors = external_features(a.features);

    const auto result = tensors ? pipeline::interpolate(f0, f1, config, &tensors->first, &tensors->second)
                                : pipeline::interpolate(f0, f1, config);

    const fs::path out(a.out);
    io::write_image(out, result.middle);
    if (a.dump) {
        const auto dump = [&](const std::string& name) {
            return out.parent_path() / (out.stem().string() + "_" + name);
        };
        io::write_mask(dump("contour0.pgm"), result.frame0.contour);
        io::write_mask(dump("contour1.pgm"), result.frame1.contour);
        io::write_segmentation(dump("seg0.png"), dump("seg0.json"), result.frame0.segmentation);
        io::write_segmentation(dump("seg1.png"), dump("seg1.json"), result.frame1.segmentation);
        write_json(dump("match.json"), io::match_to_json(result.flows.matches));
        write_flo(dump("flow01.flo"), result.flows.forward);
        write_flo(dump("flow10.flo"), result.flows.backward);
        io::write_mask(dump("occlusion.pgm"), result.occlusion.occluded);
    }
    return 0;
}

// ---------------------------------------------------------------- segment / match / flow

struct SegmentArgs {
    std::string frame, out, json_out, contour_out, config;
};

int cmd_segment(const SegmentArgs& a) {
    const auto config = config_from(a.config);
    const auto frame = image_from(a.frame);
    const auto analysis = pipeline::analyze_frame(frame, config);
    const fs::path out(a.out);
    const fs::path json_out = a.json_out.empty() ? fs::path(out).replace_extension(".json") : fs::path(a.json_out);
    io::write_segmentation(out, json_out, analysis.segmentation);
    if (!a.contour_out.empty()) {
        io::write_mask(a.contour_out, analysis.contour);
    }
    return 0;
}

struct PairArgs {
    std::string frame0, frame1, out, backward_out, config;
    std::vector<std::string> features;
};

int cmd_match(const PairArgs& a) {
    const auto config = config_from(a.config);
    const auto [f0, f1] = frame_pair(a.frame0, a.frame1);
    const auto tensors = external_features(a.features);
    const auto r0 = pipeline::analyze_frame(f0, config, tensors ? &tensors->first : nullptr);
    const auto r1 = pipeline::analyze_frame(f1, config, tensors ? &tensors->second : nullptr);
    const auto matches = matching::match_pieces(r0.features, r1.features, r0.pieces, r1.pieces, f0.width(),
                                                f0.height(), config.matching);
    auto report = io::match_to_json(matches);
    report["segments0"] = io::pieces_to_json(r0.segmentation, r0.pieces);
    report["segments1"] = io::pieces_to_json(r1.segmentation, r1.pieces);
    write_json(a.out, report);
    return 0;
}

int cmd_flow(const PairArgs& a) {
    const auto config = config_from(a.config);
    const auto [f0, f1] = frame_pair(a.frame0, a.frame1);
    const auto tensors = external_features(a.features);
    const auto r0 = pipeline::analyze_frame(f0, config, tensors ? &tensors->first : nullptr);
    const auto r1 = pipeline::analyze_frame(f1, config, tensors ? &tensors->second : nullptr);
    const auto flows = flowgen::bidirectional_flows(f0, f1, r0.segmentation, r1.segmentation, r0.features,
                                                    r1.features, config.matching, config.solver);
    write_flo(a.out, flows.forward);
    if (!a.backward_out.empty()) {
        write_flo(a.backward_out, flows.backward);
    }
    return 0;
}

// ---------------------------------------------------------------- curate

struct CurateArgs {
    std::string manifest, out, flows_dir, config;
    double sample_rate = 1.0;
    std::uint64_t seed = 0;
    bool sgm_flow = false;
};

FlowField sgm_flow(const ImageU8& a, const ImageU8& b, const PipelineConfig& config) {
    const auto r0 = pipeline::analyze_frame(a, config);
    const auto r1 = pipeline::analyze_frame(b, config);
    return flowgen::bidirectional_flows(a, b, r0.segmentation, r1.segmentation, r0.features, r1.features,
                                        config.matching, config.solver)
        .forward;
}

std::optional<FlowField> flow_file(const std::string& dir, const std::string& id, const char* suffix) {
    if (dir.empty() || id.empty()) {
        return std::nullopt;
    }
    const fs::path path = fs::path(dir) / (id + suffix);
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    return read_flo(path);
}

/// Annotates one manifest record in place.
void curate_record(json& j, const CurateArgs& a, const PipelineConfig& config) {
    const auto record = io::record_from_json(j);
    if (record.frame0.empty() || record.middle.empty() || record.frame1.empty()) {
        throw ParameterError("record needs frame0, middle and frame1");
    }
    const auto i0 = io::read_image(record.frame0);
    const auto ih = io::read_image(record.middle);
    const auto i1 = io::read_image(record.frame1);

    auto scored = record;
    scored.ssim_01 = curation::ssim_channels(i0, i1);
    scored.ssim_0h = curation::ssim_channels(i0, ih);
    scored.ssim_h1 = curation::ssim_channels(ih, i1);
    const auto gate = curation::triplet_gate(scored, config.gate);
    j["ssim_01"] = *scored.ssim_01;
    j["ssim_0h"] = *scored.ssim_0h;
    j["ssim_h1"] = *scored.ssim_h1;
    j["gate"] = {{"keep", gate.keep}, {"reason", gate.reason}};
    bool keep = gate.keep;

    auto f0h = flow_file(a.flows_dir, record.id, "_0h.flo");
    auto fh1 = flow_file(a.flows_dir, record.id, "_h1.flo");
    auto f01 = flow_file(a.flows_dir, record.id, "_01.flo");
    if (a.sgm_flow) {
        if (!f0h) f0h = sgm_flow(i0, ih, config);
        if (!fh1) fh1 = sgm_flow(ih, i1, config);
        if (!f01) f01 = sgm_flow(i0, i1, config);
    }
    if (f0h && fh1) {
        const auto sel = curation::auto_select(*f0h, *fh1, config.auto_select_threshold, config.flow_hist_bin_width,
                                               config.flow_hist_bins);
        j["flow_similarity"] = sel.similarity;
        j["auto_select"] = sel.keep;
        keep = keep && sel.keep;
    }
    if (f01) {
        const auto features = curation::difficulty_features(*f01, config.occlusion_threshold);
        j["mean_flow"] = features.mean_mag;
        j["std_flow"] = features.std_mag;
        j["occlusion_rate"] = features.occlusion_rate;
        j["difficulty"] = std::string(curation::to_string(curation::classify_difficulty(features, config.difficulty)));
    }
    j["keep"] = keep;
}

int cmd_curate(const CurateArgs& a) {
    const auto config = config_from(a.config);
    if (!(a.sample_rate >= 0.0 && a.sample_rate <= 1.0)) {
        throw UsageError("--sample-rate must lie in [0, 1]");
    }
    std::ifstream in(a.manifest);
    if (!in) {
        throw UsageError("cannot read manifest " + a.manifest);
    }

    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Output is ordered by frame-0 path, then by manifest line.
    std::vector<std::tuple<std::string, int, std::string>> rows;
    bool any_error = false;
    std::string line;
    for (int line_no = 1; std::getline(in, line); ++line_no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
            curate_record(j, a, config);
            if (a.sample_rate < 1.0 && j.value("keep", false) && !(unit(rng) < a.sample_rate)) {
                j["keep"] = false;
                j["sampled_out"] = true;
            }
        } catch (const std::exception& e) {
            if (!j.is_object()) {
                j = json::object();
            }
            j["line"] = line_no;
            j["error"] = e.what();
            j["keep"] = false;
            any_error = true;
            std::cerr << a.manifest << ":" << line_no << ": " << e.what() << "\n";
        }
        const auto frame0 = j.contains("frame0") && j["frame0"].is_string() ? j["frame0"].get<std::string>() : "";
        rows.emplace_back(frame0, line_no, j.dump());
    }
    std::sort(rows.begin(), rows.end());
    std::string out_text;
    for (const auto& row : rows) {
        out_text += std::get<2>(row) + "\n";
    }
    io::write_text(a.out, out_text);
    return any_error ? kExitProcessing : 0;
}

// ---------------------------------------------------------------- difficulty

int cmd_difficulty(const std::string& flow_path, const std::string& config_path) {
    const auto config = config_from(config_path);
    const auto flow = load([&] { return read_flo(flow_path); });
    const auto features = curation::difficulty_features(flow, config.occlusion_threshold);
    const json report = {
        {"mean_flow", features.mean_mag},
        {"std_flow", features.std_mag},
        {"occlusion_rate", features.occlusion_rate},
        {"difficulty", std::string(curation::to_string(curation::classify_difficulty(features, config.difficulty)))},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred_dir, gt_dir, manifest, out;
};

struct Aggregate {
    int count = 0;
    int infinite_psnr = 0;
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;

    void add(const curation::Metrics& m) {
        ++count;
        ssim_sum += m.ssim;
        if (std::isinf(m.psnr)) {
            ++infinite_psnr;
        } else {
            psnr_sum += m.psnr;
        }
    }

    json to_json() const {
        const int finite = count - infinite_psnr;
        return {{"count", count},
                {"psnr_mean", finite > 0 ? json(psnr_sum / finite) : json(nullptr)},
                {"psnr_infinite", infinite_psnr},
                {"ssim_mean", count > 0 ? json(ssim_sum / count) : json(nullptr)}};
    }
};

std::set<std::string> png_ids(const fs::path& dir) {
    std::set<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            ids.insert(entry.path().stem().string());
        }
    }
    return ids;
}

int cmd_eval(const EvalArgs& a) {
    std::map<std::string, curation::TripletRecord> annotations;
    if (!a.manifest.empty()) {
        load([&] {
            std::ifstream in(a.manifest);
            if (!in) {
                throw IoError("cannot read manifest " + a.manifest);
            }
            std::string line;
            while (std::getline(in, line)) {
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                auto record = io::record_from_json(json::parse(line));
                if (!record.id.empty()) annotations[record.id] = record;
            }
            return 0;
        });
    }
    const auto gt_ids = load([&] { return png_ids(a.gt_dir); });
    const auto pred_ids = load([&] { return png_ids(a.pred_dir); });

    std::vector<std::string> ids;
    for (const auto& id : gt_ids) {
        if (annotations.empty() || annotations.contains(id)) ids.push_back(id);
    }
    const bool any_overlap = std::any_of(ids.begin(), ids.end(), [&](const auto& id) { return pred_ids.contains(id); });
    if (!any_overlap) {
        std::cerr << "eval: no prediction matches a ground-truth frame\n";
        return kExitProcessing;
    }

    json records = json::array();
    std::map<std::string, Aggregate> whole;
    std::map<std::string, Aggregate> roi;
    bool any_error = false;
    for (const auto& id : ids) {
        json rec = {{"id", id}};
        const auto it = annotations.find(id);
        const auto* ann = it != annotations.end() ? &it->second : nullptr;
        const std::string group = ann && ann->difficulty ? std::string(curation::to_string(*ann->difficulty)) : "";
        if (!group.empty()) rec["difficulty"] = group;
        if (!pred_ids.contains(id)) {
            rec["error"] = "missing prediction";
            records.push_back(rec);
            any_error = true;
            continue;
        }
        try {
            const auto pred = io::read_image(fs::path(a.pred_dir) / (id + ".png"));
            const auto gt = io::read_image(fs::path(a.gt_dir) / (id + ".png"));
            const auto m = curation::evaluate(pred, gt);
            rec["whole"] = metrics_json(m);
            std::optional<curation::Metrics> mr;
            if (ann && ann->roi) {
                mr = curation::eval_roi(pred, gt, *ann->roi);
                rec["roi"] = metrics_json(*mr);
            }
            for (const auto& g : {std::string("all"), group}) {
                if (g.empty()) continue;
                whole[g].add(m);
                if (mr) roi[g].add(*mr);
            }
        } catch (const std::exception& e) {
            rec.erase("whole");
            rec["error"] = e.what();
            any_error = true;
        }
        records.push_back(rec);
    }

    json aggregates = json::object();
    for (const auto& [group, agg] : whole) {
        aggregates[group]["whole"] = agg.to_json();
        if (roi.contains(group)) aggregates[group]["roi"] = roi.at(group).to_json();
    }
    write_json(a.out, {{"records", records}, {"aggregates", aggregates}});
    return any_error ? kExitProcessing : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cartoon frame interpolation by segment-guided matching"};
    app.require_subcommand(1);

    InterpolateArgs interp;
    auto* sub = app.add_subcommand("interpolate", "Synthesize the middle frame of a pair");
    sub->add_option("frame0", interp.frame0)->required();
    sub->add_option("frame1", interp.frame1)->required();
    sub->add_option("-o,--out", interp.out, "Output PNG")->required();
    sub->add_option("--config", interp.config, "INI config file");
    sub->add_flag("--dump-intermediates", interp.dump, "Also write contours, segmentations, matches, flows, occlusion");
    sub->add_option("--features", interp.features, "External feature containers for frame 0 and frame 1")
        ->expected(2);

    SegmentArgs seg;
    auto* seg_cmd = app.add_subcommand("segment", "Contours and color pieces of one frame");
    seg_cmd->add_option("frame", seg.frame)->required();
    seg_cmd->add_option("-o,--out", seg.out, "16-bit label PNG")->required();
    seg_cmd->add_option("--json", seg.json_out, "Piece sidecar (default: next to the PNG)");
    seg_cmd->add_option("--contour", seg.contour_out, "Also write the contour mask");
    seg_cmd->add_option("--config", seg.config, "INI config file");

    PairArgs match_args;
    auto* match_cmd = app.add_subcommand("match", "Global piece matching of a pair");
    match_cmd->add_option("frame0", match_args.frame0)->required();
    match_cmd->add_option("frame1", match_args.frame1)->required();
    match_cmd->add_option("-o,--out", match_args.out, "Match JSON")->required();
    match_cmd->add_option("--config", match_args.config, "INI config file");
    match_cmd->add_option("--features", match_args.features, "External feature containers")->expected(2);

    PairArgs flow_args;
    auto* flow_cmd = app.add_subcommand("flow", "Piece-wise flow of a pair");
    flow_cmd->add_option("frame0", flow_args.frame0)->required();
    flow_cmd->add_option("frame1", flow_args.frame1)->required();
    flow_cmd->add_option("-o,--out", flow_args.out, "Forward flow (.flo)")->required();
    flow_cmd->add_option("--backward", flow_args.backward_out, "Also write the backward flow");
    flow_cmd->add_option("--config", flow_args.config, "INI config file");
    flow_cmd->add_option("--features", flow_args.features, "External feature containers")->expected(2);

    CurateArgs curate;
    auto* curate_cmd = app.add_subcommand("curate", "Annotate a JSON-lines triplet manifest");
    curate_cmd->add_option("manifest", curate.manifest)->required();
    curate_cmd->add_option("-o,--out", curate.out, "Annotated manifest")->required();
    curate_cmd->add_option("--flows-dir", curate.flows_dir, "Directory with <id>_0h.flo, <id>_h1.flo, <id>_01.flo");
    curate_cmd->add_flag("--sgm-flow", curate.sgm_flow, "Estimate missing flows with the matching pipeline");
    curate_cmd->add_option("--sample-rate", curate.sample_rate, "Fraction of kept triplets to retain");
    curate_cmd->add_option("--seed", curate.seed, "Seed for --sample-rate");
    curate_cmd->add_option("--config", curate.config, "INI config file");

    std::string difficulty_flow;
    std::string difficulty_config;
    auto* diff_cmd = app.add_subcommand("difficulty", "Difficulty label of a flow field");
    diff_cmd->add_option("flow", difficulty_flow)->required();
    diff_cmd->add_option("--config", difficulty_config, "INI config file");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR / SSIM report of predictions against ground truth");
    eval_cmd->add_option("pred_dir", eval.pred_dir)->required();
    eval_cmd->add_option("gt_dir", eval.gt_dir)->required();
    eval_cmd->add_option("--manifest", eval.manifest, "Manifest with ids, difficulty and roi");
    eval_cmd->add_option("-o,--out", eval.out, "Report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*sub) return cmd_interpolate(interp);
        if (*seg_cmd) return cmd_segment(seg);
        if (*match_cmd) return cmd_match(match_args);
        if (*flow_cmd) return cmd_flow(flow_args);
        if (*curate_cmd) return cmd_curate(curate);
        if (*diff_cmd) return cmd_difficulty(difficulty_flow, difficulty_config);
        if (*eval_cmd) return cmd_eval(eval);
    } catch (const UsageError& e) {
        std::cerr << "sgm: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "sgm: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "sgm: " << e.what() << "\n";
        return kExitProcessing;
    }
    return kExitUsage;
}
