#pragma once

#include <vector>

#include "sgm/config.hpp"
#include "sgm/features.hpp"
#include "sgm/flowgen.hpp"
#include "sgm/warpsynth.hpp"

namespace sgm::pipeline {

struct FrameAnalysis {
    ContourMask contour;
    SegmentationMap segmentation;
    std::vector<Piece> pieces;
    FeatureMatrix features;  ///< unnormalized
};

/// Contours, segmentation and per-piece features of one frame. Features are
/// color histograms unless an external tensor is given, in which case they are
/// super-pixel pooled from it.
FrameAnalysis analyze_frame(const ImageU8& frame, const PipelineConfig& config,
                            const FeatureTensor* external = nullptr);

struct Interpolation {
    FrameAnalysis frame0;
    FrameAnalysis frame1;
    flowgen::BidirectionalFlows flows;
    warpsynth::OcclusionMap occlusion;  ///< of the forward flow
    ImageU8 middle;
};

/// Full pipeline on an equal-size pair (1- or 3-channel, both the same).
Interpolation interpolate(const ImageU8& frame0, const ImageU8& frame1, const PipelineConfig& config,
                          const FeatureTensor* external0 = nullptr, const FeatureTensor* external1 = nullptr);

/// Synthesis step alone, on 8-bit frames and precomputed flows.
ImageU8 synthesize(const ImageU8& frame0, const ImageU8& frame1, const FlowField& f01, const FlowField& f10,
                   const PipelineConfig& config);

}  // namespace sgm::pipeline
