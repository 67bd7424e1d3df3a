#pragma once

#include <array>
#include <optional>

#include "sgm/raster.hpp"

namespace sgm::imgproc {

/// 5x5 Laplacian-of-Gaussian style kernel: center +16, 4-neighbors -2,
/// diagonals and distance-2 axial taps -1. Coefficients sum to zero.
inline constexpr std::array<int, 25> kLaplacian5x5 = {
    0,  0,  -1, 0,  0,   //
    0,  -1, -2, -1, 0,   //
    -1, -2, 16, -2, -1,  //
    0,  -1, -2, -1, 0,   //
    0,  0,  -1, 0,  0,   //
};

/// Weights 0.299 / 0.587 / 0.114. One-channel input is returned unchanged.
ImageU8 to_grayscale(const ImageU8& img);
ImageF to_grayscale(const ImageF& img);

/// Edge-preserving smoothing. Window radius is ceil(2 * sigma_spatial); the range
/// distance is Euclidean across channels; borders are replicate-padded.
ImageF bilateral_filter(const ImageF& img, double sigma_spatial, double sigma_range);

/// Ink response of a grayscale image: the 5x5 Laplacian applied to darkness
/// (1 - I), negative values clipped to zero. Dark lines respond positively.
ScalarField laplacian_response(const ImageF& gray);

/// Double thresholding. Pixels >= high seed contours; pixels >= low join a contour
/// when 8-connected to a seed through pixels >= low.
ContourMask hysteresis_threshold(const ScalarField& response, float low, float high);

struct HysteresisThresholds {
    float low = 0.0f;
    float high = 0.0f;
};

/// high = percentile of the nonzero responses (nearest rank), low = high * low_ratio.
/// Returns nullopt when the response map has no nonzero entry.
std::optional<HysteresisThresholds> auto_thresholds(const ScalarField& response, double percentile = 0.9,
                                                    double low_ratio = 0.5);

struct ContourParams {
    double sigma_spatial = 3.0;
    double sigma_range = 0.1;
    double high_percentile = 0.9;
    double low_ratio = 0.5;
};

/// grayscale -> bilateral -> Laplacian ink response -> hysteresis.
ContourMask extract_contours(const ImageU8& img, const ContourParams& params = {});

}  // namespace sgm::imgproc
