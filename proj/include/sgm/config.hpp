#pragma once

#include <filesystem>
#include <string>

#include "sgm/curation.hpp"
#include "sgm/flowgen.hpp"
#include "sgm/imgproc.hpp"
#include "sgm/matching.hpp"
#include "sgm/segmentation.hpp"
#include "sgm/warpsynth.hpp"

namespace sgm {

/// Every tunable of the pipeline, grouped by the module that consumes it.
struct PipelineConfig {
    imgproc::ContourParams contour;
    segmentation::SegmentParams segment;
    int bins_per_channel = 16;
    matching::MatchingParams matching;
    flowgen::SolverOptions solver;
    warpsynth::SynthesisOptions synthesis;

    curation::GateThresholds gate;
    double flow_hist_bin_width = 5.0;
    int flow_hist_bins = 40;
    double auto_select_threshold = 0.35;
    double occlusion_threshold = warpsynth::kOcclusionThreshold;
    curation::DifficultyRule difficulty;

    /// Throws ParameterError naming the first offending key.
    void validate() const;
};

/// Flat `key = value` text; lines starting with `;` are comments, an optional
/// `[section]` header is ignored. Unknown keys are errors.
PipelineConfig parse_config(const std::string& text);

/// Reads and parses a config file; IoError when it cannot be read.
PipelineConfig load_config(const std::filesystem::path& path);

/// Renders `config` in the format parse_config() reads, one key per line.
std::string dump_config(const PipelineConfig& config);

}  // namespace sgm
