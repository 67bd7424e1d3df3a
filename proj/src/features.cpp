#include "sgm/features.hpp"

#include <cmath>
#include <string>

namespace sgm::features {

FeatureMatrix color_histogram_features(const ImageU8& rgb, const SegmentationMap& seg, int bins_per_channel) {
    if (rgb.channels() != 3) {
        throw ParameterError("color_histogram_features: expected a 3-channel image");
    }
    if (!rgb.same_size(seg.width, seg.height)) {
        throw ParameterError("color_histogram_features: image and segmentation differ in size");
    }
    if (bins_per_channel < 2 || bins_per_channel > 256) {
        throw ParameterError("color_histogram_features: bins_per_channel must be in [2, 256]");
    }
    FeatureMatrix out{Matrix(seg.piece_count, 3 * bins_per_channel), std::vector<bool>(seg.piece_count, false)};
    for (int y = 0; y < seg.height; ++y) {
        for (int x = 0; x < seg.width; ++x) {
            const auto label = seg.at(x, y);
            if (label < 0 || label >= seg.piece_count) {
                throw ParameterError("color_histogram_features: segmentation must be total");
            }
            for (int c = 0; c < 3; ++c) {
                const int bin = std::min(bins_per_channel - 1, rgb.at(x, y, c) * bins_per_channel / 256);
                out.values(label, c * bins_per_channel + bin) += 1.0;
            }
        }
    }
    return out;
}

FeatureMatrix superpixel_pool(const FeatureTensor& tensor, const SegmentationMap& seg) {
    if (tensor.levels.empty()) {
        throw ParameterError("superpixel_pool: feature tensor has no levels");
    }
    int total_channels = 0;
    for (std::size_t l = 0; l < tensor.levels.size(); ++l) {
        const auto& level = tensor.levels[l];
        const std::string where = "superpixel_pool: level " + std::to_string(l);
        if (level.factor < 1 || level.channels < 1) {
            throw ParameterError(where + " needs factor >= 1 and channels >= 1");
        }
        const int expect_w = (seg.width + level.factor - 1) / level.factor;
        const int expect_h = (seg.height + level.factor - 1) / level.factor;
        if (level.width != expect_w || level.height != expect_h) {
            throw ParameterError(where + " dimensions inconsistent with the segmentation and factor");
        }
        if (level.data.size() != static_cast<std::size_t>(level.channels) * level.height * level.width) {
            throw ParameterError(where + " payload length mismatch");
        }
        total_channels += level.channels;
    }

    const int k = seg.piece_count;
    FeatureMatrix out{Matrix(k, total_channels), std::vector<bool>(k, false)};
    int col0 = 0;
    for (const auto& level : tensor.levels) {
        const auto small = segmentation::downsample_nearest(seg, level.factor);
        std::vector<std::int64_t> counts(k, 0);
        for (int y = 0; y < level.height; ++y) {
            for (int x = 0; x < level.width; ++x) {
                const auto label = small.at(x, y);
                if (label < 0 || label >= k) {
                    throw ParameterError("superpixel_pool: segmentation must be total");
                }
                ++counts[label];
                for (int c = 0; c < level.channels; ++c) {
                    out.values(label, col0 + c) += level.at(c, y, x);
                }
            }
        }
        for (int i = 0; i < k; ++i) {
            if (counts[i] == 0) {
                continue;
            }
            for (int c = 0; c < level.channels; ++c) {
                out.values(i, col0 + c) /= static_cast<double>(counts[i]);
            }
        }
        col0 += level.channels;
    }
    return out;
}

FeatureMatrix normalize(const FeatureMatrix& features) {
    FeatureMatrix out{features.values, std::vector<bool>(features.piece_count(), false)};
    for (int i = 0; i < out.values.rows(); ++i) {
        auto row = out.values.row(i);
        double sum = 0.0;
        for (const double v : row) {
            if (!(v >= 0.0)) {
                throw ParameterError("normalize: feature entries must be non-negative");
            }
            sum += v;
        }
        if (sum == 0.0) {
            out.zero_rows[i] = true;
            continue;
        }
        for (double& v : row) {
            v /= sum;
        }
    }
    return out;
}

}  // namespace sgm::features
