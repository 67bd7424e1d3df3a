#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sgm/errors.hpp"

namespace sgm {

/// Row-major, channel-interleaved raster. Used for frames, response maps and masks.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, int channels = 1, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        if (width < 0 || height < 0 || channels < 1) {
            throw ParameterError("raster dimensions must be non-negative with at least one channel");
        }
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    Raster(int width, int height, int channels, std::vector<T> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        if (width < 0 || height < 0 || channels < 1) {
            throw ParameterError("raster dimensions must be non-negative with at least one channel");
        }
        if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
            throw ParameterError("raster data length does not match width*height*channels");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    bool in_bounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::size_t index(int x, int y, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    T& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    /// Replicate-padded read.
    const T& clamped(int x, int y, int c = 0) const noexcept {
        return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1), c);
    }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool same_size(int width, int height) const noexcept { return width_ == width && height_ == height; }
    template <typename U>
    bool same_size(const Raster<U>& other) const noexcept {
        return same_size(other.width(), other.height());
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

/// 8-bit frame, 1 or 3 channels (RGB order).
using ImageU8 = Raster<std::uint8_t>;
/// Float frame with values in [0, 1].
using ImageF = Raster<float>;
/// Unbounded single-channel float map (filter responses, masses).
using ScalarField = Raster<float>;
/// Binary mask stored as 0/1 bytes; 1 marks a contour pixel.
using ContourMask = Raster<std::uint8_t>;

inline ImageF to_float(const ImageU8& img) {
    ImageF out(img.width(), img.height(), img.channels());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<float>(src[i]) / 255.0f;
    }
    return out;
}

inline ImageU8 to_u8(const ImageF& img) {
    ImageU8 out(img.width(), img.height(), img.channels());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0) * 255.0;
        dst[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Inclusive pixel rectangle.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = -1;
    int y1 = -1;

    int width() const noexcept { return x1 - x0 + 1; }
    int height() const noexcept { return y1 - y0 + 1; }
    bool empty() const noexcept { return x1 < x0 || y1 < y0; }
    bool contains(int x, int y) const noexcept { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    bool contains(const Vec2& p) const noexcept { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }

    Rect dilated(int margin, int width, int height) const noexcept {
        return {std::max(0, x0 - margin), std::max(0, y0 - margin), std::min(width - 1, x1 + margin),
                std::min(height - 1, y1 + margin)};
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace sgm
