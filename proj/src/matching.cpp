#include "sgm/matching.hpp"

#include <algorithm>
#include <cmath>

namespace sgm::matching {

void MatchingParams::validate() const {
    if (!(lambda_dist >= 0.0) || !(lambda_size >= 0.0)) {
        throw ParameterError("matching: lambda weights must be non-negative");
    }
    if (!(dist_threshold_frac >= 0.0 && dist_threshold_frac <= 1.0)) {
        throw ParameterError("matching: dist_threshold_frac must be in [0, 1]");
    }
}

MatchResult MatchResult::reversed() const {
    MatchResult r;
    r.affinity = affinity.transposed();
    r.dist_penalty = dist_penalty.transposed();
    r.size_penalty = size_penalty.transposed();
    r.degree = degree.transposed();
    r.forward_map = backward_map;
    r.backward_map = forward_map;
    r.consistent.assign(r.forward_map.size(), false);
    for (std::size_t j = 0; j < r.forward_map.size(); ++j) {
        const int i = r.forward_map[j];
        // consistent[i] already folds in the zero-row rule for the pair (i, j).
        r.consistent[j] = forward_map[i] == static_cast<int>(j) && consistent[i];
    }
    return r;
}

Matrix affinity(const FeatureMatrix& f0n, const FeatureMatrix& f1n) {
    if (f0n.feature_dim() != f1n.feature_dim()) {
        throw ParameterError("affinity: feature dimensions differ");
    }
    const int n = f0n.feature_dim();
    Matrix a(f0n.piece_count(), f1n.piece_count());
    for (int i = 0; i < a.rows(); ++i) {
        const auto r0 = f0n.values.row(i);
        for (int j = 0; j < a.cols(); ++j) {
            const auto r1 = f1n.values.row(j);
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                sum += std::min(r0[k], r1[k]);
            }
            a(i, j) = sum;
        }
    }
    return a;
}

Matrix distance_penalty(std::span<const Piece> pieces0, std::span<const Piece> pieces1, int width, int height,
                        const MatchingParams& params) {
    params.validate();
    const double diagonal = std::hypot(static_cast<double>(height), static_cast<double>(width));
    Matrix out(static_cast<int>(pieces0.size()), static_cast<int>(pieces1.size()));
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) {
            const double ratio =
                std::hypot(pieces0[i].centroid.x - pieces1[j].centroid.x, pieces0[i].centroid.y - pieces1[j].centroid.y) /
                diagonal;
            out(i, j) = ratio > params.dist_threshold_frac ? ratio : 0.0;
        }
    }
    return out;
}

Matrix size_penalty(std::span<const Piece> pieces0, std::span<const Piece> pieces1, int width, int height) {
    const double area = static_cast<double>(width) * static_cast<double>(height);
    Matrix out(static_cast<int>(pieces0.size()), static_cast<int>(pieces1.size()));
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) {
            out(i, j) = std::abs(static_cast<double>(pieces0[i].pixel_count - pieces1[j].pixel_count) / area);
        }
    }
    return out;
}

Matrix matching_degree(const Matrix& affinity, const Matrix& dist_penalty, const Matrix& size_penalty,
                       const MatchingParams& params) {
    params.validate();
    if (!affinity.same_shape(dist_penalty) || !affinity.same_shape(size_penalty)) {
        throw ParameterError("matching_degree: matrix shapes differ");
    }
    Matrix c(affinity.rows(), affinity.cols());
    for (int i = 0; i < c.rows(); ++i) {
        for (int j = 0; j < c.cols(); ++j) {
            c(i, j) = affinity(i, j) - params.lambda_dist * dist_penalty(i, j) - params.lambda_size * size_penalty(i, j);
        }
    }
    return c;
}

MatchResult match(const Matrix& degree) {
    if (degree.rows() < 1 || degree.cols() < 1) {
        throw ParameterError("match: degree matrix must be at least 1x1");
    }
    MatchResult r;
    r.forward_map.assign(degree.rows(), 0);
    r.backward_map.assign(degree.cols(), 0);
    for (int i = 0; i < degree.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < degree.cols(); ++j) {
            if (degree(i, j) > degree(i, best)) {
                best = j;
            }
        }
        r.forward_map[i] = best;
    }
    for (int j = 0; j < degree.cols(); ++j) {
        int best = 0;
        for (int i = 1; i < degree.rows(); ++i) {
            if (degree(i, j) > degree(best, j)) {
                best = i;
            }
        }
        r.backward_map[j] = best;
    }
    r.consistent.assign(degree.rows(), false);
    for (int i = 0; i < degree.rows(); ++i) {
        r.consistent[i] = r.backward_map[r.forward_map[i]] == i;
    }
    return r;
}

MatchResult match_pieces(const FeatureMatrix& f0, const FeatureMatrix& f1, std::span<const Piece> pieces0,
                         std::span<const Piece> pieces1, int width, int height, const MatchingParams& params) {
    if (static_cast<std::size_t>(f0.piece_count()) != pieces0.size() ||
        static_cast<std::size_t>(f1.piece_count()) != pieces1.size()) {
        throw ParameterError("match_pieces: feature rows and piece lists disagree");
    }
    const auto f0n = features::normalize(f0);
    const auto f1n = features::normalize(f1);
    auto a = affinity(f0n, f1n);
    auto ld = distance_penalty(pieces0, pieces1, width, height, params);
    auto ls = size_penalty(pieces0, pieces1, width, height);
    auto c = matching_degree(a, ld, ls, params);
    MatchResult r = match(c);
    for (int i = 0; i < c.rows(); ++i) {
        if (f0n.zero_rows[i] || f1n.zero_rows[r.forward_map[i]]) {
            r.consistent[i] = false;
        }
    }
    r.affinity = std::move(a);
    r.dist_penalty = std::move(ld);
    r.size_penalty = std::move(ls);
    r.degree = std::move(c);
    return r;
}

}  // namespace sgm::matching
