#include "sgm/warpsynth.hpp"

#include <algorithm>
#include <cmath>

namespace sgm::warpsynth {

namespace {

// Exponent floor for importance weights; keeps them representable.
constexpr double kMinLogImportance = -50.0;

struct Accumulator {
    Raster<double> color;   // sum of weight * importance * value
    Raster<double> weight;  // sum of weight * importance
    Raster<double> mass;    // sum of bilinear weight
};

void require_same_size(const ImageF& src, const FlowField& flow) {
    if (!src.same_size(flow.width, flow.height)) {
        throw ParameterError("splat: image and flow differ in size");
    }
}

// Sequential row-major accumulation; the fixed order keeps results bit-identical.
Accumulator accumulate(const ImageF& src, const FlowField& flow, double t, const std::vector<double>* importance) {
    const int w = src.width();
    const int h = src.height();
    const int channels = src.channels();
    Accumulator acc{Raster<double>(w, h, channels, 0.0), Raster<double>(w, h, 1, 0.0), Raster<double>(w, h, 1, 0.0)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = flow.index(x, y);
            const double px = x + t * flow.u[i];
            const double py = y + t * flow.v[i];
            if (!std::isfinite(px) || !std::isfinite(py)) {
                throw ParameterError("splat: non-finite flow");
            }
            const double fx0 = std::floor(px);
            const double fy0 = std::floor(py);
            const double fx = px - fx0;
            const double fy = py - fy0;
            const double z = importance != nullptr ? (*importance)[i] : 1.0;
            const double weights[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            for (int n = 0; n < 4; ++n) {
                if (weights[n] == 0.0) {
                    continue;
                }
                const double tx = fx0 + (n & 1);
                const double ty = fy0 + (n >> 1);
                if (tx < 0 || ty < 0 || tx >= w || ty >= h) {
                    continue;
                }
                const int ix = static_cast<int>(tx);
                const int iy = static_cast<int>(ty);
                acc.mass.at(ix, iy) += weights[n];
                acc.weight.at(ix, iy) += weights[n] * z;
                for (int c = 0; c < channels; ++c) {
                    acc.color.at(ix, iy, c) += weights[n] * z * src.at(x, y, c);
                }
            }
        }
    }
    return acc;
}

void require_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw ParameterError("splat: t must lie in [0, 1]");
    }
}

}  // namespace

SplatResult forward_splat(const ImageF& src, const FlowField& flow, double t, double mass_floor) {
    require_t(t);
    require_same_size(src, flow);
    auto acc = accumulate(src, flow, t, nullptr);
    SplatResult out{ImageF(src.width(), src.height(), src.channels(), 0.0f), std::move(acc.mass), mass_floor};
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            if (out.is_hole(x, y)) {
                continue;
            }
            const double m = out.mass.at(x, y);
            for (int c = 0; c < src.channels(); ++c) {
                out.color.at(x, y, c) = static_cast<float>(acc.color.at(x, y, c) / m);
            }
        }
    }
    return out;
}

OcclusionMap occlusion_map(const FlowField& flow, double threshold) {
    const ImageF ones(flow.width, flow.height, 1, 1.0f);
    const auto splat = forward_splat(ones, flow, 1.0);
    OcclusionMap out{ContourMask(flow.width, flow.height, 1, 0), 0.0};
    std::size_t count = 0;
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            if (splat.mass.at(x, y) < threshold) {
                out.occluded.at(x, y) = 1;
                ++count;
            }
        }
    }
    out.rate = flow.pixel_count() > 0 ? static_cast<double>(count) / static_cast<double>(flow.pixel_count()) : 0.0;
    return out;
}

ImageF synthesize_middle(const ImageF& i0, const ImageF& i1, const FlowField& f01, const FlowField& f10,
                         const SynthesisOptions& opts) {
    if (!i0.same_size(i1) || i0.channels() != i1.channels()) {
        throw ParameterError("synthesize_middle: frames differ in size or channel count");
    }
    require_same_size(i0, f01);
    require_same_size(i1, f10);
    if (!(opts.importance_beta >= 0.0)) {
        throw ParameterError("synthesize_middle: importance_beta must be non-negative");
    }

    double max_mag = 0.0;
    for (std::size_t i = 0; i < f01.pixel_count(); ++i) {
        max_mag = std::max({max_mag, static_cast<double>(f01.magnitude(i)), static_cast<double>(f10.magnitude(i))});
    }
    const auto importance_of = [&](const FlowField& f) {
        std::vector<double> z(f.pixel_count());
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = std::exp(std::max(kMinLogImportance, opts.importance_beta * (f.magnitude(i) - max_mag)));
        }
        return z;
    };
    const auto z0 = importance_of(f01);
    const auto z1 = importance_of(f10);
    const auto a0 = accumulate(i0, f01, 0.5, &z0);
    const auto a1 = accumulate(i1, f10, 0.5, &z1);

    ImageF out(i0.width(), i0.height(), i0.channels());
    for (int y = 0; y < i0.height(); ++y) {
        for (int x = 0; x < i0.width(); ++x) {
            const bool has0 = a0.mass.at(x, y) > opts.mass_floor;
            const bool has1 = a1.mass.at(x, y) > opts.mass_floor;
            for (int c = 0; c < i0.channels(); ++c) {
                double value = 0.0;
                if (has0 && has1) {
                    value = (a0.color.at(x, y, c) + a1.color.at(x, y, c)) / (a0.weight.at(x, y) + a1.weight.at(x, y));
                } else if (has0) {
                    value = a0.color.at(x, y, c) / a0.weight.at(x, y);
                } else if (has1) {
                    value = a1.color.at(x, y, c) / a1.weight.at(x, y);
                } else {
                    value = 0.5 * (static_cast<double>(i0.at(x, y, c)) + i1.at(x, y, c));
                }
                out.at(x, y, c) = static_cast<float>(value);
            }
        }
    }
    return out;
}

}  // namespace sgm::warpsynth
