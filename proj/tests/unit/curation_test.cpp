#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sgm/curation.hpp"

namespace sgm::curation {
namespace {

ImageU8 textured(int w, int h, int channels = 1) {
    ImageU8 img(w, h, channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = static_cast<std::uint8_t>(127.5 + 100 * std::sin(0.4 * x + c) * std::cos(0.3 * y) +
                                                            20 * std::sin(1.7 * x * y));
    return img;
}

ImageU8 noise(int w, int h, int channels, std::mt19937& rng) {
    ImageU8 img(w, h, channels);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng());
    return img;
}

// Mean SSIM evaluated window by window with explicit 2-D Gaussian weights.
double ssim_oracle(const ImageU8& a, const ImageU8& b) {
    int n = std::min({11, a.width(), a.height()});
    if (n % 2 == 0) --n;
    std::vector<double> w(static_cast<std::size_t>(n) * n);
    double wsum = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double di = i - n / 2;
            const double dj = j - n / 2;
            w[i * n + j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
            wsum += w[i * n + j];
        }
    for (double& x : w) x /= wsum;
    const double c1 = std::pow(0.01 * 255, 2);
    const double c2 = std::pow(0.03 * 255, 2);
    double total = 0;
    int windows = 0;
    for (int y0 = 0; y0 + n <= a.height(); ++y0)
        for (int x0 = 0; x0 + n <= a.width(); ++x0) {
            double ma = 0;
            double mb = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    ma += w[i * n + j] * a.at(x0 + j, y0 + i);
                    mb += w[i * n + j] * b.at(x0 + j, y0 + i);
                }
            double va = 0;
            double vb = 0;
            double cov = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double da = a.at(x0 + j, y0 + i) - ma;
                    const double db = b.at(x0 + j, y0 + i) - mb;
                    va += w[i * n + j] * da * da;
                    vb += w[i * n + j] * db * db;
                    cov += w[i * n + j] * da * db;
                }
            total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    return total / windows;
}

TripletRecord scored(double s01, double s0h, double sh1) {
    TripletRecord r;
    r.ssim_01 = s01;
    r.ssim_0h = s0h;
    r.ssim_h1 = sh1;
    return r;
}

FlowField flow_with_magnitudes(const std::vector<float>& mags) {
    FlowField f(static_cast<int>(mags.size()), 1);
    for (std::size_t i = 0; i < mags.size(); ++i) {
        f.u[i] = 0.6f * mags[i];
        f.v[i] = 0.8f * mags[i];
    }
    return f;
}

TEST(Ssim, IdenticalImagesScoreOne) {
    std::mt19937 rng(1);
    const auto img = noise(40, 30, 1, rng);
    EXPECT_NEAR(ssim(img, img), 1.0, 1e-9);
    EXPECT_NEAR(ssim(textured(64, 64), textured(64, 64)), 1.0, 1e-9);
}

TEST(Ssim, NegativeScoresLow) {
    const auto img = textured(64, 64);
    ImageU8 neg(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) neg.at(x, y) = static_cast<std::uint8_t>(255 - img.at(x, y));
    EXPECT_LT(ssim(img, neg), 0.5);
}

TEST(Ssim, ConstantsReduceToLuminanceTerm) {
    const ImageU8 a(32, 32, 1, 100);
    const ImageU8 b(32, 32, 1, 110);
    const double c1 = std::pow(0.01 * 255, 2);
    EXPECT_NEAR(ssim(a, b), (2 * 100.0 * 110.0 + c1) / (100.0 * 100.0 + 110.0 * 110.0 + c1), 1e-9);
}

TEST(Ssim, MatchesWindowOracle) {
    std::mt19937 rng(2);
    for (const auto [w, h] : {std::pair{20, 16}, std::pair{11, 11}, std::pair{9, 14}, std::pair{6, 5}}) {
        const auto a = noise(w, h, 1, rng);
        auto b = a;
        std::uniform_int_distribution<int> d(-30, 30);
        for (auto& v : b.data()) v = static_cast<std::uint8_t>(std::clamp(v + d(rng), 0, 255));
        EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9) << w << "x" << h;
    }
}

TEST(Ssim, Symmetric) {
    std::mt19937 rng(3);
    const auto a = noise(30, 25, 1, rng);
    const auto b = textured(30, 25);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
}

TEST(Ssim, ChannelAverage) {
    const auto rgb = textured(24, 24, 3);
    std::mt19937 rng(4);
    const auto other = noise(24, 24, 3, rng);
    double expected = 0;
    for (int c = 0; c < 3; ++c) {
        ImageU8 pa(24, 24);
        ImageU8 pb(24, 24);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                pa.at(x, y) = rgb.at(x, y, c);
                pb.at(x, y) = other.at(x, y, c);
            }
        expected += ssim(pa, pb) / 3;
    }
    EXPECT_NEAR(ssim_channels(rgb, other), expected, 1e-12);
}

TEST(Ssim, RejectsMismatch) {
    EXPECT_THROW(ssim(ImageU8(8, 8), ImageU8(8, 9)), ParameterError);
    EXPECT_THROW(ssim(ImageU8(8, 8, 3), ImageU8(8, 8, 3)), ParameterError);
}

TEST(Psnr, UnitOffset) {
    const ImageU8 a(16, 16, 3, 100);
    const ImageU8 b(16, 16, 3, 101);
    EXPECT_NEAR(psnr(a, b), 48.1308, 1e-3);
    EXPECT_DOUBLE_EQ(psnr(a, b), 20 * std::log10(255.0));
}

TEST(Psnr, FullRangeErrorIsZeroDecibels) {
    EXPECT_DOUBLE_EQ(psnr(ImageU8(5, 5, 1, 0), ImageU8(5, 5, 1, 255)), 0.0);
}

TEST(Psnr, IdenticalIsInfinite) {
    const auto img = textured(10, 10);
    EXPECT_EQ(psnr(img, img), std::numeric_limits<double>::infinity());
}

TEST(Gate, Examples) {
    EXPECT_EQ(triplet_gate(scored(0.85, 0.85, 0.85)).reason, "keep");
    EXPECT_TRUE(triplet_gate(scored(0.85, 0.85, 0.85)).keep);
    const auto dup = triplet_gate(scored(0.85, 0.96, 0.85));
    EXPECT_FALSE(dup.keep);
    EXPECT_EQ(dup.reason, "duplicate");
    const auto cut = triplet_gate(scored(0.50, 0.85, 0.85));
    EXPECT_FALSE(cut.keep);
    EXPECT_EQ(cut.reason, "scene_cut");
}

TEST(Gate, FlipsExactlyAtTheThresholds) {
    EXPECT_TRUE(triplet_gate(scored(0.95, 0.95, 0.95)).keep);
    EXPECT_FALSE(triplet_gate(scored(std::nextafter(0.95, 1.0), 0.9, 0.9)).keep);
    EXPECT_TRUE(triplet_gate(scored(0.75, 0.75, 0.75)).keep);
    EXPECT_FALSE(triplet_gate(scored(0.9, 0.9, std::nextafter(0.75, 0.0))).keep);
}

TEST(Gate, MissingScoreIsAnError) {
    auto r = scored(0.8, 0.8, 0.8);
    r.ssim_0h.reset();
    EXPECT_THROW(triplet_gate(r), ParameterError);
}

TEST(FlowHistogram, Examples) {
    const auto zero = flow_histogram(FlowField(4, 4));
    ASSERT_EQ(zero.size(), 40u);
    EXPECT_EQ(zero[0], 1.0);
    for (std::size_t i = 1; i < zero.size(); ++i) EXPECT_EQ(zero[i], 0.0);

    const auto seven = flow_histogram(flow_with_magnitudes({7, 7, 7}));
    EXPECT_EQ(seven[1], 1.0);

    const auto mixed = flow_histogram(flow_with_magnitudes({2, 12, 2, 12}));
    EXPECT_EQ(mixed[0], 0.5);
    EXPECT_EQ(mixed[1], 0.0);
    EXPECT_EQ(mixed[2], 0.5);
}

TEST(FlowHistogram, LastBinIsOpenEnded) {
    // Bin 39 starts at 195 px and absorbs everything above.
    const auto h = flow_histogram(flow_with_magnitudes({194, 196, 200, 5000}));
    EXPECT_DOUBLE_EQ(h[38], 0.25);
    EXPECT_DOUBLE_EQ(h[39], 0.75);
}

TEST(FlowHistogram, SumsToOne) {
    std::mt19937 rng(5);
    std::exponential_distribution<double> e(0.05);
    std::vector<float> mags(500);
    for (float& m : mags) m = static_cast<float>(e(rng));
    double sum = 0;
    for (double v : flow_histogram(flow_with_magnitudes(mags))) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(HistogramIntersection, Examples) {
    EXPECT_DOUBLE_EQ(histogram_intersection({0.6, 0.4}, {0.3, 0.7}), 0.7);
    EXPECT_EQ(histogram_intersection({1, 0}, {0, 1}), 0.0);
    EXPECT_EQ(histogram_intersection({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}), 1.0);
    EXPECT_THROW(histogram_intersection({1}, {0.5, 0.5}), ParameterError);
}

TEST(HistogramIntersection, SymmetricAndMonotoneUnderCommonMass) {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(6);
        std::vector<double> b(6);
        for (int i = 0; i < 6; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
        }
        EXPECT_EQ(histogram_intersection(a, b), histogram_intersection(b, a));
        const double before = histogram_intersection(a, b);
        const int bin = trial % 6;
        a[bin] += 0.3;
        b[bin] += 0.3;
        EXPECT_GE(histogram_intersection(a, b), before);
    }
}

TEST(AutoSelect, Examples) {
    const auto f = flow_with_magnitudes({1, 6, 13, 40});
    const auto same = auto_select(f, f);
    EXPECT_TRUE(same.keep);
    EXPECT_EQ(same.similarity, 1.0);
    const auto disjoint = auto_select(FlowField(4, 1), flow_with_magnitudes({30, 30, 30, 30}));
    EXPECT_FALSE(disjoint.keep);
    EXPECT_EQ(disjoint.similarity, 0.0);
}

TEST(AutoSelect, BoundaryKeeps) {
    // 7 of 20 pixels share bin 0 in both flows: similarity 0.35 exactly.
    std::vector<float> a(20, 0.0f);
    std::vector<float> b(20, 0.0f);
    for (int i = 7; i < 20; ++i) {
        a[i] = 7.0f;
        b[i] = 12.0f;
    }
    const auto d = auto_select(flow_with_magnitudes(a), flow_with_magnitudes(b));
    EXPECT_EQ(d.similarity, 0.35);
    EXPECT_TRUE(d.keep);
    for (int i = 6; i < 7; ++i) b[i] = 12.0f;
    EXPECT_FALSE(auto_select(flow_with_magnitudes(a), flow_with_magnitudes(b)).keep);
}

TEST(AutoSelect, RejectsSizeMismatch) {
    EXPECT_THROW(auto_select(FlowField(3, 3), FlowField(3, 4)), ParameterError);
}

TEST(Difficulty, Examples) {
    EXPECT_EQ(classify_difficulty({5, 2, 0.01}), Difficulty::Easy);
    EXPECT_EQ(classify_difficulty({15, 15, 0.10}), Difficulty::Hard);
    EXPECT_EQ(classify_difficulty({15, 5, 0.25}), Difficulty::Hard);
}

TEST(Difficulty, AllNineCells) {
    using enum Difficulty;
    struct Row {
        double mean;
        double std;
        Difficulty cells[3];
    };
    const Row rows[] = {{20, 20, {Medium, Hard, Hard}}, {20, 10, {Easy, Medium, Hard}}, {10, 50, {Easy, Easy, Medium}}};
    const double probes[3][3] = {{0.0, 0.02, 0.0499}, {0.05, 0.1, 0.1999}, {0.2, 0.5, 1.0}};
    for (const auto& row : rows)
        for (int col = 0; col < 3; ++col)
            for (double occ : probes[col])
                EXPECT_EQ(classify_difficulty({row.mean, row.std, occ}), row.cells[col])
                    << row.mean << " " << row.std << " " << occ;
}

TEST(Difficulty, RowBoundaries) {
    EXPECT_EQ(classify_difficulty({10.0, 99, 0.0}), Difficulty::Easy);
    EXPECT_EQ(classify_difficulty({std::nextafter(10.0, 11.0), 10.0, 0.05}), Difficulty::Medium);
    EXPECT_EQ(classify_difficulty({std::nextafter(10.0, 11.0), std::nextafter(10.0, 11.0), 0.0}), Difficulty::Medium);
}

TEST(Difficulty, MonotoneInOcclusion) {
    for (const auto [mean, std] : {std::pair{5.0, 1.0}, std::pair{12.0, 3.0}, std::pair{30.0, 30.0}}) {
        Difficulty prev = Difficulty::Easy;
        for (int k = 0; k <= 100; ++k) {
            const auto d = classify_difficulty({mean, std, k / 100.0});
            EXPECT_GE(static_cast<int>(d), static_cast<int>(prev));
            prev = d;
        }
    }
}

TEST(Difficulty, NamesRoundTrip) {
    for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard})
        EXPECT_EQ(parse_difficulty(to_string(d)), d);
    EXPECT_FALSE(parse_difficulty("Impossible").has_value());
}

TEST(DifficultyFeatures, UniformTranslation) {
    const auto f = difficulty_features(FlowField(100, 10, 12.0f, 0.0f));
    EXPECT_DOUBLE_EQ(f.mean_mag, 12.0);
    EXPECT_DOUBLE_EQ(f.std_mag, 0.0);
    EXPECT_DOUBLE_EQ(f.occlusion_rate, 0.12);
    EXPECT_EQ(classify_difficulty(f), Difficulty::Medium);
}

TEST(DifficultyFeatures, PopulationStandardDeviation) {
    const auto f = difficulty_features(flow_with_magnitudes({0, 0, 10, 10}));
    EXPECT_NEAR(f.mean_mag, 5.0, 1e-6);
    EXPECT_NEAR(f.std_mag, 5.0, 1e-6);
}

TEST(EvalRoi, FullImageEqualsWholeMetrics) {
    std::mt19937 rng(7);
    const auto a = noise(20, 20, 3, rng);
    const auto b = textured(20, 20, 3);
    const auto whole = evaluate(a, b);
    const auto roi = eval_roi(a, b, Rect{0, 0, 19, 19});
    EXPECT_EQ(whole.psnr, roi.psnr);
    EXPECT_EQ(whole.ssim, roi.ssim);
}

TEST(EvalRoi, GarbageOutsideIsIgnored) {
    const auto gt = textured(40, 40, 3);
    auto pred = gt;
    std::mt19937 rng(8);
    const Rect roi{10, 5, 29, 24};
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            if (!roi.contains(x, y))
                for (int c = 0; c < 3; ++c) pred.at(x, y, c) = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(eval_roi(pred, gt, roi).psnr, std::numeric_limits<double>::infinity());
    EXPECT_NEAR(eval_roi(pred, gt, roi).ssim, 1.0, 1e-9);
    EXPECT_LT(evaluate(pred, gt).psnr, 30.0);
}

TEST(EvalRoi, MatchesCropOracle) {
    std::mt19937 rng(9);
    const auto a = noise(64, 48, 1, rng);
    const auto b = textured(64, 48);
    const Rect roi{17, 9, 48, 40};
    ImageU8 ca(32, 32);
    ImageU8 cb(32, 32);
    double sse = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            ca.at(x, y) = a.at(roi.x0 + x, roi.y0 + y);
            cb.at(x, y) = b.at(roi.x0 + x, roi.y0 + y);
            sse += std::pow(double(ca.at(x, y)) - cb.at(x, y), 2);
        }
    const auto m = eval_roi(a, b, roi);
    EXPECT_NEAR(m.psnr, 10 * std::log10(255.0 * 255.0 / (sse / 1024)), 1e-9);
    EXPECT_NEAR(m.ssim, ssim_oracle(ca, cb), 1e-9);
}

TEST(EvalRoi, RejectsOutOfBounds) {
    const ImageU8 img(10, 10);
    EXPECT_THROW(eval_roi(img, img, Rect{5, 5, 10, 9}), ParameterError);
    EXPECT_THROW(eval_roi(img, img, Rect{-1, 0, 3, 3}), ParameterError);
    EXPECT_THROW(eval_roi(img, img, Rect{4, 4, 3, 3}), ParameterError);
}

}  // namespace
}  // namespace sgm::curation
