#include "sgm/pipeline.hpp"

namespace sgm::pipeline {

namespace {

ImageU8 as_rgb(const ImageU8& img) {
    if (img.channels() == 3) {
        return img;
    }
    ImageU8 out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = img.at(x, y);
            }
        }
    }
    return out;
}

}  // namespace

FrameAnalysis analyze_frame(const ImageU8& frame, const PipelineConfig& config, const FeatureTensor* external) {
    FrameAnalysis out;
    out.contour = imgproc::extract_contours(frame, config.contour);
    out.segmentation = segmentation::segment(out.contour, config.segment);
    out.pieces = segmentation::piece_stats(out.segmentation);
    out.features = external != nullptr
                       ? features::superpixel_pool(*external, out.segmentation)
                       : features::color_histogram_features(as_rgb(frame), out.segmentation, config.bins_per_channel);
    return out;
}

Interpolation interpolate(const ImageU8& frame0, const ImageU8& frame1, const PipelineConfig& config,
                          const FeatureTensor* external0, const FeatureTensor* external1) {
    if (!frame0.same_size(frame1) || frame0.channels() != frame1.channels()) {
        throw ParameterError("interpolate: frames differ in size or channel count");
    }
    if ((external0 == nullptr) != (external1 == nullptr)) {
        throw ParameterError("interpolate: external features must be given for both frames or neither");
    }
    config.validate();
    Interpolation out;
    out.frame0 = analyze_frame(frame0, config, external0);
    out.frame1 = analyze_frame(frame1, config, external1);
    out.flows = flowgen::bidirectional_flows(frame0, frame1, out.frame0.segmentation, out.frame1.segmentation,
                                             out.frame0.features, out.frame1.features, config.matching, config.solver);
    out.occlusion = warpsynth::occlusion_map(out.flows.forward, config.occlusion_threshold);
    out.middle = synthesize(frame0, frame1, out.flows.forward, out.flows.backward, config);
    return out;
}

ImageU8 synthesize(const ImageU8& frame0, const ImageU8& frame1, const FlowField& f01, const FlowField& f10,
                   const PipelineConfig& config) {
    return to_u8(warpsynth::synthesize_middle(to_float(frame0), to_float(frame1), f01, f10, config.synthesis));
}

}  // namespace sgm::pipeline
