#include "sgm/segmentation.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

namespace sgm::segmentation {

namespace {

constexpr int kUnbounded = std::numeric_limits<int>::max();

struct Offset {
    int dx;
    int dy;
};

std::vector<Offset> disk_offsets(int radius) {
    std::vector<Offset> offsets;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) {
                offsets.push_back({dx, dy});
            }
        }
    }
    return offsets;
}

void require_same_size(const ContourMask& contour, int width, int height) {
    if (!contour.same_size(width, height) || contour.channels() != 1) {
        throw ParameterError("contour mask and segmentation map differ in size");
    }
}

// Multi-source breadth-first growth of existing labels into eligible, unlabeled
// pixels (4-connected). A grown pixel takes the smallest label among its
// neighbours one layer closer to the sources, so each label stays 4-connected.
void grow_labels(std::vector<std::int32_t>& labels, int width, int height, const std::vector<std::uint8_t>& eligible,
                 int max_depth) {
    const std::size_t n = labels.size();
    std::vector<int> dist(n, -1);
    std::vector<std::size_t> queue;
    queue.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= 0) {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t t = queue[head];
        if (dist[t] >= max_depth) {
            continue;
        }
        const int x = static_cast<int>(t % width);
        const int y = static_cast<int>(t / width);
        const std::pair<int, int> nbrs[4] = {{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}};
        for (const auto& [nx, ny] : nbrs) {
            if (nx < 0 || ny < 0 || nx >= width || ny >= height) {
                continue;
            }
            const std::size_t s = static_cast<std::size_t>(ny) * width + nx;
            if (!eligible[s]) {
                continue;
            }
            if (dist[s] == -1) {
                dist[s] = dist[t] + 1;
                labels[s] = labels[t];
                queue.push_back(s);
            } else if (dist[s] == dist[t] + 1 && labels[t] < labels[s]) {
                labels[s] = labels[t];
            }
        }
    }
}

std::vector<std::uint8_t> free_pixels(const std::vector<std::int32_t>& labels, const ContourMask& contour) {
    auto mask = contour.data();
    std::vector<std::uint8_t> eligible(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        eligible[i] = mask[i] == 0 && labels[i] < 0;
    }
    return eligible;
}

}  // namespace

SegmentationMap trapped_ball_fill(const ContourMask& contour, std::span<const int> radii) {
    if (radii.empty()) {
        throw ParameterError("trapped_ball_fill: empty radius schedule");
    }
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (radii[k] < 1 || (k > 0 && radii[k] >= radii[k - 1])) {
            throw ParameterError("trapped_ball_fill: radii must be positive and strictly descending");
        }
    }
    if (radii.back() != 1) {
        throw ParameterError("trapped_ball_fill: radius schedule must end at 1");
    }
    if (contour.channels() != 1) {
        throw ParameterError("trapped_ball_fill: contour mask must be single-channel");
    }

    const int w = contour.width();
    const int h = contour.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    SegmentationMap seg(w, h);
    auto& labels = seg.labels;
    auto mask = contour.data();
    const auto is_free = [&](std::size_t i) { return mask[i] == 0 && labels[i] < 0; };

    std::int32_t next_label = 0;
    std::vector<std::uint8_t> fit(n);
    std::vector<std::size_t> centers;
    std::vector<std::size_t> filled;

    for (const int radius : radii) {
        const auto offsets = disk_offsets(radius);

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                bool fits = is_free(i);
                for (std::size_t k = 0; fits && k < offsets.size(); ++k) {
                    const int nx = x + offsets[k].dx;
                    const int ny = y + offsets[k].dy;
                    if (nx >= 0 && ny >= 0 && nx < w && ny < h && !is_free(static_cast<std::size_t>(ny) * w + nx)) {
                        fits = false;
                    }
                }
                fit[i] = fits;
            }
        }

        for (std::size_t seed = 0; seed < n; ++seed) {
            if (!fit[seed]) {
                continue;
            }
            // 4-connected component of ball centers reachable from the seed.
            centers.clear();
            centers.push_back(seed);
            fit[seed] = 0;
            for (std::size_t head = 0; head < centers.size(); ++head) {
                const std::size_t c = centers[head];
                const int x = static_cast<int>(c % w);
                const int y = static_cast<int>(c / w);
                const std::pair<int, int> nbrs[4] = {{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}};
                for (const auto& [nx, ny] : nbrs) {
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const std::size_t s = static_cast<std::size_t>(ny) * w + nx;
                    if (fit[s]) {
                        fit[s] = 0;
                        centers.push_back(s);
                    }
                }
            }

            const std::int32_t label = next_label++;
            filled.clear();
            for (const std::size_t c : centers) {
                const int x = static_cast<int>(c % w);
                const int y = static_cast<int>(c / w);
                for (const auto& off : offsets) {
                    const int nx = x + off.dx;
                    const int ny = y + off.dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const std::size_t t = static_cast<std::size_t>(ny) * w + nx;
                    if (labels[t] < 0) {
                        labels[t] = label;
                        filled.push_back(t);
                    }
                }
            }
            // Any ball overlapping the new piece no longer fits.
            for (const std::size_t t : filled) {
                const int x = static_cast<int>(t % w);
                const int y = static_cast<int>(t / w);
                for (const auto& off : offsets) {
                    const int nx = x + off.dx;
                    const int ny = y + off.dy;
                    if (nx >= 0 && ny >= 0 && nx < w && ny < h) {
                        fit[static_cast<std::size_t>(ny) * w + nx] = 0;
                    }
                }
            }
        }

        grow_labels(labels, w, h, free_pixels(labels, contour), radius);
    }

    grow_labels(labels, w, h, free_pixels(labels, contour), kUnbounded);

    // Enclosed leftovers that touch no piece become pieces of their own.
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!is_free(seed)) {
            continue;
        }
        const std::int32_t label = next_label++;
        labels[seed] = label;
        std::vector<std::size_t> stack{seed};
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(c % w);
            const int y = static_cast<int>(c / w);
            const std::pair<int, int> nbrs[4] = {{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}};
            for (const auto& [nx, ny] : nbrs) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                    continue;
                }
                const std::size_t s = static_cast<std::size_t>(ny) * w + nx;
                if (is_free(s)) {
                    labels[s] = label;
                    stack.push_back(s);
                }
            }
        }
    }

    seg.piece_count = next_label;
    return seg;
}

SegmentationMap residual_assignment(SegmentationMap partial, const ContourMask& contour) {
    require_same_size(contour, partial.width, partial.height);
    auto mask = contour.data();
    bool any_labeled = false;
    for (std::size_t i = 0; i < partial.labels.size(); ++i) {
        if (mask[i] == 0 && partial.labels[i] < 0) {
            throw ParameterError("residual_assignment: non-contour pixel left unlabeled");
        }
        if (partial.labels[i] >= partial.piece_count) {
            throw ParameterError("residual_assignment: label outside [0, piece_count)");
        }
        any_labeled = any_labeled || partial.labels[i] >= 0;
    }
    if (!any_labeled) {
        throw DegenerateError("residual_assignment: frame is entirely contour");
    }
    std::vector<std::uint8_t> eligible(partial.labels.size());
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        eligible[i] = partial.labels[i] < 0;
    }
    grow_labels(partial.labels, partial.width, partial.height, eligible, kUnbounded);
    return partial;
}

SegmentationMap merge_small_pieces(SegmentationMap seg, int min_size) {
    const int w = seg.width;
    const int h = seg.height;
    const int k = seg.piece_count;
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < seg.labels.size(); ++i) {
        const auto label = seg.labels[i];
        if (label < 0 || label >= k) {
            throw ParameterError("merge_small_pieces: segmentation must be total with labels in [0, piece_count)");
        }
        members[label].push_back(i);
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int label = 0; label < k; ++label) {
            const auto size = members[label].size();
            if (size == 0 || size >= static_cast<std::size_t>(min_size)) {
                continue;
            }
            int target = -1;
            for (const std::size_t p : members[label]) {
                const int x = static_cast<int>(p % w);
                const int y = static_cast<int>(p / w);
                const std::pair<int, int> nbrs[4] = {{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}};
                for (const auto& [nx, ny] : nbrs) {
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const int other = seg.at(nx, ny);
                    if (other == label) {
                        continue;
                    }
                    if (target < 0 || members[other].size() > members[target].size() ||
                        (members[other].size() == members[target].size() && other < target)) {
                        target = other;
                    }
                }
            }
            if (target < 0) {
                continue;
            }
            for (const std::size_t p : members[label]) {
                seg.labels[p] = target;
            }
            auto& dst = members[target];
            dst.insert(dst.end(), members[label].begin(), members[label].end());
            members[label].clear();
            changed = true;
        }
    }

    std::vector<std::int32_t> remap(k, SegmentationMap::kUnlabeled);
    std::int32_t next = 0;
    for (int label = 0; label < k; ++label) {
        if (!members[label].empty()) {
            remap[label] = next++;
        }
    }
    for (auto& label : seg.labels) {
        label = remap[label];
    }
    seg.piece_count = next;
    return seg;
}

std::vector<Piece> piece_stats(const SegmentationMap& seg) {
    const int k = seg.piece_count;
    std::vector<Piece> pieces(k);
    std::vector<std::int64_t> sum_x(k, 0);
    std::vector<std::int64_t> sum_y(k, 0);
    for (int id = 0; id < k; ++id) {
        pieces[id].id = id;
        pieces[id].bbox = {seg.width, seg.height, -1, -1};
    }
    for (int y = 0; y < seg.height; ++y) {
        for (int x = 0; x < seg.width; ++x) {
            const auto label = seg.at(x, y);
            if (label < 0 || label >= k) {
                throw ParameterError("piece_stats: label outside [0, piece_count)");
            }
            auto& p = pieces[label];
            ++p.pixel_count;
            sum_x[label] += x;
            sum_y[label] += y;
            p.bbox.x0 = std::min(p.bbox.x0, x);
            p.bbox.y0 = std::min(p.bbox.y0, y);
            p.bbox.x1 = std::max(p.bbox.x1, x);
            p.bbox.y1 = std::max(p.bbox.y1, y);
        }
    }
    for (int id = 0; id < k; ++id) {
        auto& p = pieces[id];
        if (p.pixel_count == 0) {
            throw ParameterError("piece_stats: label " + std::to_string(id) + " has no pixels");
        }
        p.centroid = {static_cast<double>(sum_x[id]) / static_cast<double>(p.pixel_count),
                      static_cast<double>(sum_y[id]) / static_cast<double>(p.pixel_count)};
    }
    return pieces;
}

SegmentationMap segment(const ContourMask& contour, const SegmentParams& params) {
    auto partial = trapped_ball_fill(contour, params.radii);
    auto total = residual_assignment(std::move(partial), contour);
    return merge_small_pieces(std::move(total), params.min_piece_size);
}

SegmentationMap downsample_nearest(const SegmentationMap& seg, int factor) {
    if (factor < 1) {
        throw ParameterError("downsample_nearest: factor must be >= 1");
    }
    const int w = (seg.width + factor - 1) / factor;
    const int h = (seg.height + factor - 1) / factor;
    SegmentationMap out(w, h);
    out.piece_count = seg.piece_count;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.at(x, y) = seg.at(x * factor, y * factor);
        }
    }
    return out;
}

}  // namespace sgm::segmentation
