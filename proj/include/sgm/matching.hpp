#pragma once

#include <span>
#include <vector>

#include "sgm/features.hpp"
#include "sgm/matrix.hpp"
#include "sgm/segmentation.hpp"

namespace sgm::matching {

struct MatchingParams {
    double lambda_dist = 0.2;
    double lambda_size = 0.05;
    /// Distance penalty applies only when the centroid distance exceeds this
    /// fraction of the image diagonal.
    double dist_threshold_frac = 0.15;

    void validate() const;
};

struct MatchResult {
    Matrix affinity;
    Matrix dist_penalty;
    Matrix size_penalty;
    Matrix degree;
    std::vector<int> forward_map;   ///< frame-0 piece -> best frame-1 piece
    std::vector<int> backward_map;  ///< frame-1 piece -> best frame-0 piece
    std::vector<bool> consistent;   ///< per frame-0 piece: backward_map[forward_map[i]] == i

    /// The same matching seen from frame 1: matrices transposed, maps swapped.
    MatchResult reversed() const;
};

/// Histogram intersection sum_n min(F0(i,n), F1(j,n)) of normalized rows.
Matrix affinity(const FeatureMatrix& f0n, const FeatureMatrix& f1n);

/// ||P0(i) - P1(j)|| / sqrt(H^2 + W^2) when that ratio is strictly above the
/// activation fraction, otherwise 0.
Matrix distance_penalty(std::span<const Piece> pieces0, std::span<const Piece> pieces1, int width, int height,
                        const MatchingParams& params = {});

/// | |S0(i)| - |S1(j)| | / (H * W).
Matrix size_penalty(std::span<const Piece> pieces0, std::span<const Piece> pieces1, int width, int height);

/// A - lambda_dist * Ld - lambda_size * Ls.
Matrix matching_degree(const Matrix& affinity, const Matrix& dist_penalty, const Matrix& size_penalty,
                       const MatchingParams& params = {});

/// Row and column argmax maps (ties to the smallest index) plus the round-trip
/// consistency flags. Only the map/flag fields of the result are filled.
MatchResult match(const Matrix& degree);

/// Full matching: normalizes both feature matrices, builds every matrix and
/// runs match(). Pieces whose feature row (on either side of the pair) sums to
/// zero are never consistent.
MatchResult match_pieces(const FeatureMatrix& f0, const FeatureMatrix& f1, std::span<const Piece> pieces0,
                         std::span<const Piece> pieces1, int width, int height, const MatchingParams& params = {});

}  // namespace sgm::matching
