#pragma once

#include <vector>

#include "sgm/flow.hpp"
#include "sgm/raster.hpp"

namespace sgm::warpsynth {

inline constexpr double kMassFloor = 1e-6;
inline constexpr double kOcclusionThreshold = 0.05;

/// Accumulated forward splat. `color` holds mass-normalized values where
/// mass > mass_floor and 0 in holes.
struct SplatResult {
    ImageF color;
    Raster<double> mass;
    double mass_floor = kMassFloor;

    bool is_hole(int x, int y) const noexcept { return !(mass.at(x, y) > mass_floor); }
};

struct OcclusionMap {
    ContourMask occluded;  ///< 1 = occluded
    double rate = 0.0;
};

/// Scatters every source pixel to the four integer neighbours of x + t * f(x)
/// with bilinear weights; targets outside the frame are dropped.
SplatResult forward_splat(const ImageF& src, const FlowField& flow, double t, double mass_floor = kMassFloor);

/// Splats a field of ones at t = 1; pixels whose mass stays below `threshold`
/// are occluded.
OcclusionMap occlusion_map(const FlowField& flow, double threshold = kOcclusionThreshold);

struct SynthesisOptions {
    double mass_floor = kMassFloor;
    /// Softmax importance on flow magnitude: each splat contribution is scaled
    /// by exp(beta * (|f| - max|f|)), so faster-moving content wins where
    /// splats collide. 0 gives plain averaging.
    double importance_beta = 1.0;
};

/// Splats I0 with f01 and I1 with f10 to t = 0.5 and blends them with their
/// accumulated weights. Pixels reached from only one side take that side;
/// pixels reached from neither fall back to (I0 + I1) / 2.
ImageF synthesize_middle(const ImageF& i0, const ImageF& i1, const FlowField& f01, const FlowField& f10,
                         const SynthesisOptions& opts = {});

}  // namespace sgm::warpsynth
