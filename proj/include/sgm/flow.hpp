#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "sgm/errors.hpp"

namespace sgm {

/// Dense displacement field in pixels; u is horizontal, v vertical.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    FlowField() = default;
    FlowField(int w, int h, float fill_u = 0.0f, float fill_v = 0.0f)
        : width(w), height(h), u(static_cast<std::size_t>(w) * h, fill_u), v(static_cast<std::size_t>(w) * h, fill_v) {
        if (w < 0 || h < 0) {
            throw ParameterError("flow dimensions must be non-negative");
        }
    }

    std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }
    std::size_t pixel_count() const noexcept { return u.size(); }
    float magnitude(std::size_t i) const noexcept { return std::hypot(u[i], v[i]); }

    friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Middlebury .flo: "PIEH", int32 width, int32 height, interleaved float32 (u, v), all little-endian.
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

}  // namespace sgm
