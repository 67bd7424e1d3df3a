#pragma once

#include <span>
#include <vector>

#include "sgm/features.hpp"
#include "sgm/flow.hpp"
#include "sgm/matching.hpp"
#include "sgm/raster.hpp"
#include "sgm/segmentation.hpp"

namespace sgm::flowgen {

/// Discretization and solver settings for the per-piece deformation energy
///
///   E(u, v) = sum_x psi(I1m(x + shift + (u, v)(x)) - I0m(x))
///           + alpha * sum_x (|grad u(x)|^2 + |grad v(x)|^2)
///
/// with psi(d) = sqrt(d^2 + eps^2), forward differences, and bilinear sampling
/// of I1m (zero outside the frame). Intensities are grayscale in [0, 1].
struct SolverOptions {
    double smoothness = 10.0;  ///< alpha
    double charbonnier_eps = 1e-3;
    double initial_step = 0.5;  ///< largest per-pixel displacement of one step, px
    int max_iterations = 200;
    double rel_tolerance = 1e-5;
    int domain_margin = 8;  ///< piece bbox dilation, px

    void validate() const;
};

/// Per-pixel deformation over a rectangular domain (row-major within the domain).
struct Deformation {
    Rect domain;
    std::vector<float> u;
    std::vector<float> v;
    /// Energy of the initial iterate followed by every accepted iterate.
    std::vector<double> energy_trace;

    std::size_t local_index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y - domain.y0) * domain.width() + (x - domain.x0);
    }
};

struct PieceFlow {
    int piece = 0;
    Vec2 shift;
    Deformation deformation;
};

/// P1(j) - P0(i).
Vec2 centroid_shift(const Piece& piece0, const Piece& piece1);

/// Grayscale copy of `gray` with every pixel outside piece `label` set to 0.
ImageF masked_image(const ImageF& gray, const SegmentationMap& seg, int label);

/// Energy of (u, v) over `domain`; exposed for tests and diagnostics.
double deformation_energy(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Rect& domain,
                          std::span<const float> u, std::span<const float> v, const SolverOptions& opts);

/// Minimizes the deformation energy by first-order descent from (u, v) = 0.
///
/// Each iteration takes two backtracking gradient steps: one along the
/// gradient of a common translation of the whole field, then one along the
/// per-pixel gradient. Steps are scaled so the largest per-pixel move equals
/// the current step length; a rejected step is halved until the energy drops.
/// Stops after max_iterations or when an iteration lowers the energy by less
/// than rel_tolerance (relative).
Deformation local_deformation(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Rect& domain,
                              const SolverOptions& opts = {});

/// Convenience overload solving on the piece bbox dilated by opts.domain_margin.
Deformation local_deformation(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Piece& piece,
                              const SolverOptions& opts = {});

/// Disjoint scatter of piece flows: pixels of a consistent piece i get
/// shift_i + deformation_i(x); pixels of inconsistent pieces get 0.
/// `piece_flows` must cover exactly the consistent pieces, each once.
FlowField assemble_flow(const SegmentationMap& seg0, const matching::MatchResult& matches,
                        std::span<const PieceFlow> piece_flows);

/// Centroid shift + deformation for every consistent piece of frame 0.
std::vector<PieceFlow> piece_flows(const ImageF& gray0, const SegmentationMap& seg0, std::span<const Piece> pieces0,
                                   const ImageF& gray1, const SegmentationMap& seg1, std::span<const Piece> pieces1,
                                   const matching::MatchResult& matches, const SolverOptions& opts = {});

struct BidirectionalFlows {
    matching::MatchResult matches;  ///< frame 0 -> frame 1 view
    FlowField forward;              ///< f_{0->1}
    FlowField backward;             ///< f_{1->0}
};

/// Matches pieces of both frames and builds f_{0->1} and f_{1->0}; the
/// backward flow reuses the same matching with roles reversed.
BidirectionalFlows bidirectional_flows(const ImageU8& frame0, const ImageU8& frame1, const SegmentationMap& seg0,
                                       const SegmentationMap& seg1, const FeatureMatrix& features0,
                                       const FeatureMatrix& features1, const matching::MatchingParams& match_params = {},
                                       const SolverOptions& opts = {});

}  // namespace sgm::flowgen
