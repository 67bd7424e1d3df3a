#include "sgm/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace sgm::imgproc {

namespace {

// Responses at or below this are treated as zero when picking thresholds.
constexpr float kNonzeroResponse = 1e-6f;

void require_gray_or_rgb(int channels) {
    if (channels != 1 && channels != 3) {
        throw ParameterError("expected a 1- or 3-channel image");
    }
}

}  // namespace

ImageU8 to_grayscale(const ImageU8& img) {
    require_gray_or_rgb(img.channels());
    if (img.channels() == 1) {
        return img;
    }
    ImageU8 out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>(std::min<long>(255, std::lround(v)));
        }
    }
    return out;
}

ImageF to_grayscale(const ImageF& img) {
    require_gray_or_rgb(img.channels());
    if (img.channels() == 1) {
        return img;
    }
    ImageF out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

ImageF bilateral_filter(const ImageF& img, double sigma_spatial, double sigma_range) {
    if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0)) {
        throw ParameterError("bilateral_filter: sigmas must be positive");
    }
    const int radius = static_cast<int>(std::ceil(2.0 * sigma_spatial));
    const int side = 2 * radius + 1;
    const int channels = img.channels();

    std::vector<double> spatial(static_cast<std::size_t>(side) * side);
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            spatial[(dy + radius) * side + (dx + radius)] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_spatial * sigma_spatial));
        }
    }
    const double range_coeff = -1.0 / (2.0 * sigma_range * sigma_range);

    ImageF out(img.width(), img.height(), channels);
    std::vector<double> acc(channels);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            double norm = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    double dist2 = 0.0;
                    for (int c = 0; c < channels; ++c) {
                        const double d = static_cast<double>(img.clamped(x + dx, y + dy, c)) - img.at(x, y, c);
                        dist2 += d * d;
                    }
                    const double w = spatial[(dy + radius) * side + (dx + radius)] * std::exp(range_coeff * dist2);
                    norm += w;
                    for (int c = 0; c < channels; ++c) {
                        acc[c] += w * img.clamped(x + dx, y + dy, c);
                    }
                }
            }
            for (int c = 0; c < channels; ++c) {
                out.at(x, y, c) = static_cast<float>(acc[c] / norm);
            }
        }
    }
    return out;
}

ScalarField laplacian_response(const ImageF& gray) {
    if (gray.channels() != 1) {
        throw ParameterError("laplacian_response expects a grayscale image");
    }
    ScalarField out(gray.width(), gray.height(), 1);
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            // sum(K * (1 - I)) == -sum(K * I) because the kernel sums to zero.
            double acc = 0.0;
            for (int ky = 0; ky < 5; ++ky) {
                for (int kx = 0; kx < 5; ++kx) {
                    const int k = kLaplacian5x5[ky * 5 + kx];
                    if (k != 0) {
                        acc -= k * static_cast<double>(gray.clamped(x + kx - 2, y + ky - 2));
                    }
                }
            }
            out.at(x, y) = static_cast<float>(std::max(0.0, acc));
        }
    }
    return out;
}

ContourMask hysteresis_threshold(const ScalarField& response, float low, float high) {
    if (!(low >= 0.0f) || !(high >= low)) {
        throw ParameterError("hysteresis_threshold: require 0 <= low <= high");
    }
    const int w = response.width();
    const int h = response.height();
    ContourMask mask(w, h, 1, 0);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (response.at(x, y) >= high) {
                mask.at(x, y) = 1;
                queue.emplace_back(x, y);
            }
        }
    }
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (!mask.in_bounds(nx, ny) || mask.at(nx, ny) != 0) {
                    continue;
                }
                if (response.at(nx, ny) >= low) {
                    mask.at(nx, ny) = 1;
                    queue.emplace_back(nx, ny);
                }
            }
        }
    }
    return mask;
}

std::optional<HysteresisThresholds> auto_thresholds(const ScalarField& response, double percentile,
                                                    double low_ratio) {
    if (!(percentile > 0.0 && percentile <= 1.0) || !(low_ratio >= 0.0 && low_ratio <= 1.0)) {
        throw ParameterError("auto_thresholds: percentile must be in (0,1], low_ratio in [0,1]");
    }
    std::vector<float> nonzero;
    for (float v : response.data()) {
        if (v > kNonzeroResponse) {
            nonzero.push_back(v);
        }
    }
    if (nonzero.empty()) {
        return std::nullopt;
    }
    std::sort(nonzero.begin(), nonzero.end());
    const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(nonzero.size())));
    const float high = nonzero[std::clamp<std::size_t>(rank, 1, nonzero.size()) - 1];
    return HysteresisThresholds{static_cast<float>(high * low_ratio), high};
}

ContourMask extract_contours(const ImageU8& img, const ContourParams& params) {
    const ImageF gray = to_grayscale(to_float(img));
    const ImageF smooth = bilateral_filter(gray, params.sigma_spatial, params.sigma_range);
    const ScalarField response = laplacian_response(smooth);
    const auto thresholds = auto_thresholds(response, params.high_percentile, params.low_ratio);
    if (!thresholds) {
        return ContourMask(img.width(), img.height(), 1, 0);
    }
    // Keep flat-region noise out of the low band.
    const float low = std::max(thresholds->low, kNonzeroResponse);
    return hysteresis_threshold(response, std::min(low, thresholds->high), thresholds->high);
}

}  // namespace sgm::imgproc
