#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sgm/imgproc.hpp"

namespace sgm::imgproc {
namespace {

ImageF constant(int w, int h, float v) {
    return ImageF(w, h, 1, v);
}

// Direct 5x5 convolution of darkness with replicate padding, clipped at zero.
ScalarField brute_force_response(const ImageF& gray) {
    ScalarField out(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            double acc = 0.0;
            for (int j = -2; j <= 2; ++j) {
                for (int i = -2; i <= 2; ++i) {
                    const int sx = std::clamp(x + i, 0, gray.width() - 1);
                    const int sy = std::clamp(y + j, 0, gray.height() - 1);
                    acc += kLaplacian5x5[(j + 2) * 5 + (i + 2)] * (1.0 - gray.at(sx, sy));
                }
            }
            out.at(x, y) = static_cast<float>(std::max(0.0, acc));
        }
    }
    return out;
}

TEST(Grayscale, EqualChannelsKeepTheirValue) {
    ImageU8 img(3, 1, 3);
    const std::uint8_t values[3] = {0, 128, 255};
    for (int x = 0; x < 3; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, 0, c) = values[x];
    }
    const auto g = to_grayscale(img);
    ASSERT_EQ(g.channels(), 1);
    for (int x = 0; x < 3; ++x) EXPECT_EQ(g.at(x, 0), values[x]);
}

TEST(Grayscale, PureRedRoundsToLumaWeight) {
    ImageU8 img(1, 1, 3);
    img.at(0, 0, 0) = 255;
    EXPECT_EQ(to_grayscale(img).at(0, 0), static_cast<std::uint8_t>(std::lround(0.299 * 255)));
    EXPECT_EQ(to_grayscale(img).at(0, 0), 76);
}

TEST(Grayscale, SingleChannelPassesThrough) {
    ImageU8 img(2, 2, 1, 7);
    EXPECT_EQ(to_grayscale(img), img);
}

TEST(Grayscale, RejectsTwoChannels) {
    EXPECT_THROW(to_grayscale(ImageU8(2, 2, 2)), ParameterError);
}

TEST(Bilateral, ConstantImageUnchanged) {
    const auto img = constant(9, 7, 0.37f);
    const auto out = bilateral_filter(img, 3.0, 0.1);
    for (float v : out.data()) EXPECT_NEAR(v, 0.37f, 1e-6);
}

TEST(Bilateral, RejectsNonPositiveSigma) {
    const auto img = constant(4, 4, 0.5f);
    EXPECT_THROW(bilateral_filter(img, 0.0, 0.1), ParameterError);
    EXPECT_THROW(bilateral_filter(img, 1.0, -0.1), ParameterError);
}

TEST(Bilateral, BrightPixelSurvivesAndMatchesDirectWeights) {
    auto img = constant(5, 5, 0.2f);
    img.at(2, 2) = 1.0f;
    const double ss = 1.0;
    const double sr = 0.05;
    const auto out = bilateral_filter(img, ss, sr);

    // Window radius ceil(2 * 1) = 2 covers the whole 5x5 patch from the centre.
    double num = 0.0;
    double den = 0.0;
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            const double d2 = (x - 2) * (x - 2) + (y - 2) * (y - 2);
            const double r = img.at(x, y) - 1.0;
            const double w = std::exp(-d2 / (2 * ss * ss)) * std::exp(-r * r / (2 * sr * sr));
            num += w * img.at(x, y);
            den += w;
        }
    }
    EXPECT_NEAR(out.at(2, 2), num / den, 1e-6);
    EXPECT_NEAR(out.at(2, 2), 1.0, 1.0 / 255.0);
}

TEST(Bilateral, StepEdgeStaysPut) {
    ImageF img(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.at(x, y) = x < 8 ? 0.1f : 0.9f;
    const auto out = bilateral_filter(img, 3.0, 0.1);
    for (int y = 0; y < 16; ++y) {
        int best = 0;
        float best_grad = -1.0f;
        for (int x = 0; x + 1 < 16; ++x) {
            const float g = std::abs(out.at(x + 1, y) - out.at(x, y));
            if (g > best_grad) {
                best_grad = g;
                best = x;
            }
        }
        EXPECT_EQ(best, 7) << "row " << y;
    }
}

TEST(Bilateral, OutputWithinInputRange) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(0.2f, 0.8f);
    ImageF img(12, 10, 3);
    for (float& v : img.data()) v = u(rng);
    const auto out = bilateral_filter(img, 1.5, 0.2);
    const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
    for (float v : out.data()) {
        EXPECT_GE(v, *lo - 1e-6f);
        EXPECT_LE(v, *hi + 1e-6f);
    }
}

TEST(Laplacian, KernelSumsToZeroWithPositiveCentre) {
    EXPECT_EQ(std::accumulate(kLaplacian5x5.begin(), kLaplacian5x5.end(), 0), 0);
    EXPECT_GT(kLaplacian5x5[12], 0);
}

TEST(Laplacian, ConstantImagesGiveZero) {
    for (float v : {0.0f, 0.25f, 1.0f}) {
        const auto r = laplacian_response(constant(7, 6, v));
        for (float x : r.data()) EXPECT_EQ(x, 0.0f);
    }
}

TEST(Laplacian, DarkImpulseImprintsClippedKernel) {
    auto img = constant(9, 9, 1.0f);
    img.at(4, 4) = 0.0f;
    const auto r = laplacian_response(img);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 9; ++x) {
            const int dx = x - 4;
            const int dy = y - 4;
            const int k = (std::abs(dx) <= 2 && std::abs(dy) <= 2) ? kLaplacian5x5[(dy + 2) * 5 + dx + 2] : 0;
            EXPECT_FLOAT_EQ(r.at(x, y), static_cast<float>(std::max(0, k))) << x << "," << y;
        }
    }
}

TEST(Laplacian, BrightImpulseImprintsNegatedRing) {
    auto img = constant(9, 9, 0.0f);
    img.at(4, 4) = 1.0f;
    const auto r = laplacian_response(img);
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            const int k = kLaplacian5x5[(dy + 2) * 5 + dx + 2];
            EXPECT_FLOAT_EQ(r.at(4 + dx, 4 + dy), static_cast<float>(std::max(0, -k)));
        }
    }
}

TEST(Laplacian, BlackLinePeaksOnTheLine) {
    auto img = constant(9, 9, 1.0f);
    for (int y = 0; y < 9; ++y) img.at(4, y) = 0.0f;
    const auto r = laplacian_response(img);
    const auto oracle = brute_force_response(img);
    EXPECT_EQ(r, oracle);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 9; ++x) {
            if (x != 4) EXPECT_LT(r.at(x, y), r.at(4, y));
        }
    }
}

TEST(Laplacian, MatchesBruteForceOnRandomImages) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int trial = 0; trial < 5; ++trial) {
        ImageF img(11, 8, 1);
        for (float& v : img.data()) v = u(rng);
        const auto r = laplacian_response(img);
        const auto o = brute_force_response(img);
        for (std::size_t i = 0; i < r.data().size(); ++i) EXPECT_NEAR(r.data()[i], o.data()[i], 1e-5);
    }
}

TEST(Hysteresis, AllBelowLowIsEmpty) {
    const ScalarField r(5, 5, 1, 0.1f);
    const auto m = hysteresis_threshold(r, 0.2f, 0.5f);
    for (auto v : m.data()) EXPECT_EQ(v, 0);
}

TEST(Hysteresis, AllAboveHighIsFull) {
    const ScalarField r(5, 5, 1, 0.9f);
    const auto m = hysteresis_threshold(r, 0.2f, 0.5f);
    for (auto v : m.data()) EXPECT_EQ(v, 1);
}

TEST(Hysteresis, ChainFollowsConnectivity) {
    const float low = 2.0f;
    const float high = 5.0f;
    ScalarField r(4, 1);
    r.at(0, 0) = high + 1;
    r.at(1, 0) = low + 1;
    r.at(2, 0) = low + 1;
    r.at(3, 0) = low - 1;
    const auto m = hysteresis_threshold(r, low, high);
    EXPECT_EQ(m.at(0, 0), 1);
    EXPECT_EQ(m.at(1, 0), 1);
    EXPECT_EQ(m.at(2, 0), 1);
    EXPECT_EQ(m.at(3, 0), 0);
}

TEST(Hysteresis, DiagonalNeighboursConnect) {
    ScalarField r(3, 3, 1, 0.0f);
    r.at(0, 0) = 10.0f;
    r.at(1, 1) = 3.0f;
    r.at(2, 2) = 3.0f;
    const auto m = hysteresis_threshold(r, 2.0f, 5.0f);
    EXPECT_EQ(m.at(2, 2), 1);
}

TEST(Hysteresis, IsolatedWeakPixelDropped) {
    ScalarField r(5, 1, 1, 0.0f);
    r.at(0, 0) = 10.0f;
    r.at(3, 0) = 3.0f;
    const auto m = hysteresis_threshold(r, 2.0f, 5.0f);
    EXPECT_EQ(m.at(3, 0), 0);
}

TEST(Hysteresis, RejectsLowAboveHigh) {
    EXPECT_THROW(hysteresis_threshold(ScalarField(2, 2), 0.6f, 0.5f), ParameterError);
}

TEST(Hysteresis, RaisingThresholdsNeverAddsPixels) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int trial = 0; trial < 20; ++trial) {
        ScalarField r(16, 16);
        for (float& v : r.data()) v = u(rng);
        const float low = 0.3f + 0.2f * u(rng);
        const float high = low + 0.3f * u(rng);
        const auto base = hysteresis_threshold(r, low, high);
        const auto raised_low = hysteresis_threshold(r, std::min(high, low + 0.1f), high);
        const auto raised_high = hysteresis_threshold(r, low, high + 0.1f);
        for (std::size_t i = 0; i < base.data().size(); ++i) {
            EXPECT_LE(raised_low.data()[i], base.data()[i]);
            EXPECT_LE(raised_high.data()[i], base.data()[i]);
        }
    }
}

TEST(AutoThresholds, NearestRankPercentile) {
    ScalarField r(10, 1);
    for (int x = 0; x < 10; ++x) r.at(x, 0) = static_cast<float>(x + 1);
    const auto t = auto_thresholds(r, 0.9, 0.5);
    ASSERT_TRUE(t.has_value());
    EXPECT_FLOAT_EQ(t->high, 9.0f);
    EXPECT_FLOAT_EQ(t->low, 4.5f);
}

TEST(AutoThresholds, IgnoresZeros) {
    ScalarField r(10, 1, 1, 0.0f);
    r.at(3, 0) = 2.0f;
    const auto t = auto_thresholds(r);
    ASSERT_TRUE(t.has_value());
    EXPECT_FLOAT_EQ(t->high, 2.0f);
}

TEST(AutoThresholds, NoneForZeroResponse) {
    EXPECT_FALSE(auto_thresholds(ScalarField(4, 4)).has_value());
}

TEST(Contours, BlankFrameHasNoContour) {
    const auto mask = extract_contours(ImageU8(20, 20, 3, 200));
    for (auto v : mask.data()) EXPECT_EQ(v, 0);
}

TEST(Contours, OutlinedSquareIsClosedAndDeterministic) {
    ImageU8 img(40, 40, 3, 255);
    for (int y = 10; y < 30; ++y)
        for (int x = 10; x < 30; ++x) {
            const bool edge = x < 12 || x >= 28 || y < 12 || y >= 28;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = edge ? 20 : 180;
        }
    const auto a = extract_contours(img);
    const auto b = extract_contours(img);
    EXPECT_EQ(a, b);
    // A 4-connected walk through non-contour pixels from the centre never escapes the square.
    std::vector<std::pair<int, int>> stack{{20, 20}};
    ContourMask seen(40, 40, 1, 0);
    seen.at(20, 20) = 1;
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        EXPECT_TRUE(x >= 10 && x < 30 && y >= 10 && y < 30) << x << "," << y;
        const int nbr[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& d : nbr) {
            const int nx = x + d[0];
            const int ny = y + d[1];
            if (a.in_bounds(nx, ny) && !seen.at(nx, ny) && !a.at(nx, ny)) {
                seen.at(nx, ny) = 1;
                stack.emplace_back(nx, ny);
            }
        }
    }
    EXPECT_EQ(a.at(0, 0), 0);
    EXPECT_EQ(a.at(20, 20), 0);
}

}  // namespace
}  // namespace sgm::imgproc
