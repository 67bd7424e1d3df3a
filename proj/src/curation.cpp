#include "sgm/curation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgm/warpsynth.hpp"

namespace sgm::curation {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kDynamicRange = 255.0;

std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) {
        t /= sum;
    }
    return taps;
}

// Separable "valid" filtering of a plane; output is (w - n + 1) x (h - n + 1).
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& taps) {
    const int n = static_cast<int>(taps.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                acc += taps[k] * plane[static_cast<std::size_t>(y) * w + x + k];
            }
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            }
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

double ssim_plane(const ImageU8& a, const ImageU8& b, int channel) {
    const int w = a.width();
    const int h = a.height();
    int window = std::min({kSsimWindow, w, h});
    if (window % 2 == 0) {
        --window;
    }
    const auto taps = gaussian_taps(window, kSsimSigma);

    const std::size_t n = a.pixel_count();
    std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            pa[i] = a.at(x, y, channel);
            pb[i] = b.at(x, y, channel);
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
    }
    const auto mu_a = filter_valid(pa, w, h, taps);
    const auto mu_b = filter_valid(pb, w, h, taps);
    const auto e_aa = filter_valid(paa, w, h, taps);
    const auto e_bb = filter_valid(pbb, w, h, taps);
    const auto e_ab = filter_valid(pab, w, h, taps);

    const double c1 = (0.01 * kDynamicRange) * (0.01 * kDynamicRange);
    const double c2 = (0.03 * kDynamicRange) * (0.03 * kDynamicRange);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double var_a = e_aa[i] - ma * ma;
        const double var_b = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

void require_comparable(const ImageU8& a, const ImageU8& b) {
    if (!a.same_size(b) || a.channels() != b.channels()) {
        throw ParameterError("metric: images differ in size or channel count");
    }
    if (a.empty()) {
        throw ParameterError("metric: empty image");
    }
}

}  // namespace

std::string_view to_string(Difficulty d) noexcept {
    switch (d) {
        case Difficulty::Easy:
            return "Easy";
        case Difficulty::Medium:
            return "Medium";
        case Difficulty::Hard:
            return "Hard";
    }
    return "Unknown";
}

std::optional<Difficulty> parse_difficulty(std::string_view name) noexcept {
    if (name == "Easy") return Difficulty::Easy;
    if (name == "Medium") return Difficulty::Medium;
    if (name == "Hard") return Difficulty::Hard;
    return std::nullopt;
}

double ssim(const ImageU8& a, const ImageU8& b) {
    require_comparable(a, b);
    if (a.channels() != 1) {
        throw ParameterError("ssim: expected 1-channel images");
    }
    return ssim_plane(a, b, 0);
}

double ssim_channels(const ImageU8& a, const ImageU8& b) {
    require_comparable(a, b);
    double sum = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        sum += ssim_plane(a, b, c);
    }
    return sum / a.channels();
}

double psnr(const ImageU8& a, const ImageU8& b) {
    require_comparable(a, b);
    double sse = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - db[i];
        sse += d * d;
    }
    if (sse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double mse = sse / static_cast<double>(da.size());
    return 10.0 * std::log10(kDynamicRange * kDynamicRange / mse);
}

GateDecision triplet_gate(const TripletRecord& record, const GateThresholds& thresholds) {
    if (!record.ssim_01 || !record.ssim_0h || !record.ssim_h1) {
        throw ParameterError("triplet_gate: all three pairwise SSIM scores are required");
    }
    const double scores[3] = {*record.ssim_01, *record.ssim_0h, *record.ssim_h1};
    if (std::any_of(std::begin(scores), std::end(scores), [&](double s) { return s > thresholds.high; })) {
        return {false, "duplicate"};
    }
    if (std::any_of(std::begin(scores), std::end(scores), [&](double s) { return s < thresholds.low; })) {
        return {false, "scene_cut"};
    }
    return {true, "keep"};
}

std::vector<double> flow_histogram(const FlowField& flow, double bin_width, int bins) {
    if (!(bin_width > 0.0) || bins < 1) {
        throw ParameterError("flow_histogram: bin_width must be positive and bins >= 1");
    }
    std::vector<double> hist(bins, 0.0);
    if (flow.pixel_count() == 0) {
        return hist;
    }
    for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
        const double mag = flow.magnitude(i);
        const double bin = std::floor(mag / bin_width);
        hist[static_cast<std::size_t>(std::clamp(bin, 0.0, static_cast<double>(bins - 1)))] += 1.0;
    }
    for (double& h : hist) {
        h /= static_cast<double>(flow.pixel_count());
    }
    return hist;
}

double histogram_intersection(const std::vector<double>& h1, const std::vector<double>& h2) {
    if (h1.size() != h2.size()) {
        throw ParameterError("histogram_intersection: histogram lengths differ");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < h1.size(); ++i) {
        sum += std::min(h1[i], h2[i]);
    }
    return sum;
}

SelectionDecision auto_select(const FlowField& f_0h, const FlowField& f_h1, double threshold, double bin_width,
                              int bins) {
    if (f_0h.width != f_h1.width || f_0h.height != f_h1.height) {
        throw ParameterError("auto_select: flows differ in size");
    }
    const double sim = histogram_intersection(flow_histogram(f_0h, bin_width, bins), flow_histogram(f_h1, bin_width, bins));
    return {!(sim < threshold), sim};
}

DifficultyFeatures difficulty_features(const FlowField& f01, double occlusion_threshold) {
    DifficultyFeatures out;
    const std::size_t n = f01.pixel_count();
    if (n == 0) {
        return out;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += f01.magnitude(i);
    }
    out.mean_mag = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = f01.magnitude(i) - out.mean_mag;
        sq += d * d;
    }
    out.std_mag = std::sqrt(sq / static_cast<double>(n));
    out.occlusion_rate = warpsynth::occlusion_map(f01, occlusion_threshold).rate;
    return out;
}

Difficulty classify_difficulty(const DifficultyFeatures& f, const DifficultyRule& rule) {
    const int column = f.occlusion_rate < rule.occ_medium ? 0 : (f.occlusion_rate < rule.occ_hard ? 1 : 2);
    using enum Difficulty;
    if (f.mean_mag > rule.motion && f.std_mag > rule.spread) {
        constexpr Difficulty row[3] = {Medium, Hard, Hard};
        return row[column];
    }
    if (f.mean_mag > rule.motion) {
        constexpr Difficulty row[3] = {Easy, Medium, Hard};
        return row[column];
    }
    constexpr Difficulty row[3] = {Easy, Easy, Medium};
    return row[column];
}

ImageU8 crop(const ImageU8& img, const Rect& roi) {
    if (roi.empty() || roi.x0 < 0 || roi.y0 < 0 || roi.x1 >= img.width() || roi.y1 >= img.height()) {
        throw ParameterError("crop: region of interest outside the image");
    }
    ImageU8 out(roi.width(), roi.height(), img.channels());
    for (int y = 0; y < roi.height(); ++y) {
        for (int x = 0; x < roi.width(); ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                out.at(x, y, c) = img.at(roi.x0 + x, roi.y0 + y, c);
            }
        }
    }
    return out;
}

Metrics evaluate(const ImageU8& pred, const ImageU8& gt) {
    return {psnr(pred, gt), ssim_channels(pred, gt)};
}

Metrics eval_roi(const ImageU8& pred, const ImageU8& gt, const Rect& roi) {
    require_comparable(pred, gt);
    return evaluate(crop(pred, roi), crop(gt, roi));
}

}  // namespace sgm::curation
