#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgm/flow.hpp"
#include "sgm/raster.hpp"

namespace sgm::curation {

enum class Difficulty { Easy, Medium, Hard };

std::string_view to_string(Difficulty d) noexcept;
std::optional<Difficulty> parse_difficulty(std::string_view name) noexcept;

struct TripletRecord {
    std::string id;
    std::string frame0;
    std::string middle;
    std::string frame1;
    std::optional<double> ssim_01;
    std::optional<double> ssim_0h;
    std::optional<double> ssim_h1;
    std::optional<double> flow_similarity;
    std::optional<Difficulty> difficulty;
    std::optional<Rect> roi;
};

struct DifficultyFeatures {
    double mean_mag = 0.0;
    double std_mag = 0.0;
    double occlusion_rate = 0.0;
};

/// Boundaries of the difficulty table: rows split on mean > motion and
/// std > spread; columns are [0, occ_medium), [occ_medium, occ_hard), [occ_hard, inf).
struct DifficultyRule {
    double motion = 10.0;
    double spread = 10.0;
    double occ_medium = 0.05;
    double occ_hard = 0.2;
};

struct GateThresholds {
    double high = 0.95;  ///< reject near-duplicates above this
    double low = 0.75;   ///< reject scene cuts below this
};

struct GateDecision {
    bool keep = false;
    std::string reason;  ///< "keep", "duplicate" or "scene_cut"
};

struct SelectionDecision {
    bool keep = false;
    double similarity = 0.0;
};

struct Metrics {
    double psnr = 0.0;  ///< +infinity for identical inputs
    double ssim = 0.0;
};

/// Mean local SSIM of two 1-channel 8-bit images: 11x11 Gaussian window with
/// sigma 1.5 over valid positions, C1 = (0.01 L)^2, C2 = (0.03 L)^2, L = 255.
/// Images smaller than the window use the largest odd window that fits.
double ssim(const ImageU8& a, const ImageU8& b);

/// Channel-averaged SSIM for 1- or 3-channel images.
double ssim_channels(const ImageU8& a, const ImageU8& b);

/// 10 log10(255^2 / MSE) over all channels; +infinity when the images are identical.
double psnr(const ImageU8& a, const ImageU8& b);

GateDecision triplet_gate(const TripletRecord& record, const GateThresholds& thresholds = {});

/// Normalized histogram of per-pixel flow magnitude, bin = floor(mag / bin_width),
/// with the last bin open-ended.
std::vector<double> flow_histogram(const FlowField& flow, double bin_width = 5.0, int bins = 40);

double histogram_intersection(const std::vector<double>& h1, const std::vector<double>& h2);

/// Keeps the triplet unless the motion histograms of the two half-steps
/// intersect by less than `threshold`.
SelectionDecision auto_select(const FlowField& f_0h, const FlowField& f_h1, double threshold = 0.35,
                              double bin_width = 5.0, int bins = 40);

DifficultyFeatures difficulty_features(const FlowField& f01, double occlusion_threshold = 0.05);

Difficulty classify_difficulty(const DifficultyFeatures& features, const DifficultyRule& rule = {});

/// Crops both images to `roi` (inclusive rectangle) and measures PSNR / SSIM there.
Metrics eval_roi(const ImageU8& pred, const ImageU8& gt, const Rect& roi);

Metrics evaluate(const ImageU8& pred, const ImageU8& gt);

ImageU8 crop(const ImageU8& img, const Rect& roi);

}  // namespace sgm::curation
