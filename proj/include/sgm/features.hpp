#pragma once

#include <vector>

#include "sgm/matrix.hpp"
#include "sgm/raster.hpp"
#include "sgm/segmentation.hpp"

namespace sgm {

/// K x N per-piece features. `zero_rows[i]` is set by normalize() for rows whose
/// sum is zero; such rows carry no evidence and stay all-zero.
struct FeatureMatrix {
    Matrix values;
    std::vector<bool> zero_rows;

    int piece_count() const noexcept { return values.rows(); }
    int feature_dim() const noexcept { return values.cols(); }
};

/// One scale of an externally computed feature map, channel-major then row-major.
struct FeatureLevel {
    int channels = 0;
    int height = 0;
    int width = 0;
    int factor = 1;  ///< downsample factor relative to the frame
    std::vector<float> data;

    float at(int c, int y, int x) const noexcept {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

struct FeatureTensor {
    std::vector<FeatureLevel> levels;
};

}  // namespace sgm

namespace sgm::features {

/// Row i = three concatenated per-channel histograms of piece i's pixels;
/// bin = floor(v * bins / 256).
FeatureMatrix color_histogram_features(const ImageU8& rgb, const SegmentationMap& seg, int bins_per_channel = 16);

/// Super-pixel mean pooling over every level of `tensor`. Each level pools with
/// the segmentation downsampled (nearest) by its factor; pieces that vanish at a
/// level contribute zeros there. Rows are concatenated across levels.
FeatureMatrix superpixel_pool(const FeatureTensor& tensor, const SegmentationMap& seg);

/// Divides every row by its sum. Zero-sum rows are left as zeros and flagged.
FeatureMatrix normalize(const FeatureMatrix& features);

}  // namespace sgm::features
