#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgm/raster.hpp"

namespace sgm {

/// Per-pixel piece labels. A total map labels every pixel with an id in
/// [0, piece_count); a partial map (straight out of the ball fill) leaves
/// contour pixels at kUnlabeled.
struct SegmentationMap {
    static constexpr std::int32_t kUnlabeled = -1;

    int width = 0;
    int height = 0;
    int piece_count = 0;
    std::vector<std::int32_t> labels;

    SegmentationMap() = default;
    SegmentationMap(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, kUnlabeled) {}

    std::int32_t& at(int x, int y) noexcept { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::int32_t at(int x, int y) const noexcept { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const noexcept { return labels.size(); }

    friend bool operator==(const SegmentationMap&, const SegmentationMap&) = default;
};

struct Piece {
    int id = 0;
    std::int64_t pixel_count = 0;
    Vec2 centroid;
    Rect bbox;
};

}  // namespace sgm

namespace sgm::segmentation {

/// Multi-radius trapped-ball fill.
///
/// For each radius (largest first) the ball is rolled from the first row-major
/// pixel where it fits inside unlabeled, non-contour space; the union of all
/// ball positions reachable from there (4-connected centers) becomes a new
/// piece. Parts of the image outside the frame never block the ball. After each
/// radius pass, free pixels within that radius of a labeled piece are grown into
/// it (nearest piece, smaller label on ties) so ball-shaped corners do not turn
/// into fragments. After the final pass every non-contour pixel is labeled:
/// leftovers grow into adjacent pieces and enclosed leftovers get fresh labels.
///
/// `radii` must be strictly descending and end at 1. Contour pixels stay
/// kUnlabeled.
SegmentationMap trapped_ball_fill(const ContourMask& contour, std::span<const int> radii);

/// Gives each contour pixel the label of its nearest labeled pixel, distance
/// measured breadth-first through contour pixels with ties going to the smaller
/// label. Throws DegenerateError when the frame is entirely contour.
SegmentationMap residual_assignment(SegmentationMap partial, const ContourMask& contour);

/// Folds pieces smaller than `min_size` pixels into their largest 4-neighbor piece
/// and renumbers labels densely, keeping their relative order.
SegmentationMap merge_small_pieces(SegmentationMap seg, int min_size);

std::vector<Piece> piece_stats(const SegmentationMap& seg);

struct SegmentParams {
    std::vector<int> radii{3, 2, 1};
    int min_piece_size = 4;
};

/// trapped_ball_fill -> residual_assignment -> merge_small_pieces.
SegmentationMap segment(const ContourMask& contour, const SegmentParams& params = {});

/// Nearest-neighbour downsampling used for pooling coarse feature levels:
/// output size ceil(W / factor) x ceil(H / factor), sample at (x * factor, y * factor).
SegmentationMap downsample_nearest(const SegmentationMap& seg, int factor);

}  // namespace sgm::segmentation
