#include "sgm/flowgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgm/imgproc.hpp"

namespace sgm::flowgen {

namespace {

// Backtracking gives up on a direction once the step falls below this.
constexpr double kMinStep = 1e-4;

struct Sample {
    double value;
    double gx;
    double gy;
};

inline double pixel_or_zero(const ImageF& img, int x, int y) {
    return img.in_bounds(x, y) ? static_cast<double>(img.at(x, y)) : 0.0;
}

// Bilinear sample with its analytic spatial derivative; zero outside the frame.
Sample sample_bilinear(const ImageF& img, double px, double py) {
    const double fx0 = std::floor(px);
    const double fy0 = std::floor(py);
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double fx = px - fx0;
    const double fy = py - fy0;
    const double a = pixel_or_zero(img, x0, y0);
    const double b = pixel_or_zero(img, x0 + 1, y0);
    const double c = pixel_or_zero(img, x0, y0 + 1);
    const double d = pixel_or_zero(img, x0 + 1, y0 + 1);
    return {(1 - fx) * (1 - fy) * a + fx * (1 - fy) * b + (1 - fx) * fy * c + fx * fy * d,
            (1 - fy) * (b - a) + fy * (d - c), (1 - fx) * (c - a) + fx * (d - b)};
}

class DeformationProblem {
public:
    DeformationProblem(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Rect& domain, const SolverOptions& opts)
        : i0m_(i0m), i1m_(i1m), shift_(shift), domain_(domain), opts_(opts) {}

    std::size_t size() const { return static_cast<std::size_t>(domain_.width()) * domain_.height(); }

    double energy(std::span<const float> u, std::span<const float> v) const {
        return evaluate(u, v, nullptr, nullptr);
    }

    double energy_and_gradient(std::span<const float> u, std::span<const float> v, std::vector<double>& gu,
                               std::vector<double>& gv) const {
        gu.assign(size(), 0.0);
        gv.assign(size(), 0.0);
        return evaluate(u, v, &gu, &gv);
    }

private:
    double evaluate(std::span<const float> u, std::span<const float> v, std::vector<double>* gu,
                    std::vector<double>* gv) const {
        const int dw = domain_.width();
        const int dh = domain_.height();
        const double eps2 = opts_.charbonnier_eps * opts_.charbonnier_eps;
        const double alpha = opts_.smoothness;
        double data = 0.0;
        double smooth = 0.0;
        for (int ly = 0; ly < dh; ++ly) {
            const int y = domain_.y0 + ly;
            for (int lx = 0; lx < dw; ++lx) {
                const int x = domain_.x0 + lx;
                const std::size_t k = static_cast<std::size_t>(ly) * dw + lx;
                const Sample s = sample_bilinear(i1m_, x + shift_.x + u[k], y + shift_.y + v[k]);
                const double r = s.value - i0m_.at(x, y);
                const double psi = std::sqrt(r * r + eps2);
                data += psi;
                if (gu != nullptr) {
                    const double dpsi = r / psi;
                    (*gu)[k] += dpsi * s.gx;
                    (*gv)[k] += dpsi * s.gy;
                }
                if (lx + 1 < dw) {
                    smooth += pair_term(u, v, k, k + 1, gu, gv, alpha);
                }
                if (ly + 1 < dh) {
                    smooth += pair_term(u, v, k, k + dw, gu, gv, alpha);
                }
            }
        }
        return data + alpha * smooth;
    }

    static double pair_term(std::span<const float> u, std::span<const float> v, std::size_t k, std::size_t n,
                            std::vector<double>* gu, std::vector<double>* gv, double alpha) {
        const double du = static_cast<double>(u[n]) - u[k];
        const double dv = static_cast<double>(v[n]) - v[k];
        if (gu != nullptr) {
            (*gu)[n] += 2 * alpha * du;
            (*gu)[k] -= 2 * alpha * du;
            (*gv)[n] += 2 * alpha * dv;
            (*gv)[k] -= 2 * alpha * dv;
        }
        return du * du + dv * dv;
    }

    const ImageF& i0m_;
    const ImageF& i1m_;
    Vec2 shift_;
    Rect domain_;
    const SolverOptions& opts_;
};

void require_finite(double energy) {
    if (!std::isfinite(energy)) {
        throw NumericalError("local_deformation: non-finite energy");
    }
}

// One backtracking step along `dir_u/dir_v` (already scaled to unit max-norm).
// Returns the accepted step length or 0 when no step lowered the energy.
double backtrack(const DeformationProblem& problem, std::vector<float>& u, std::vector<float>& v,
                 const std::vector<double>& dir_u, const std::vector<double>& dir_v, double step, double& energy,
                 std::vector<float>& cand_u, std::vector<float>& cand_v) {
    for (; step >= kMinStep; step *= 0.5) {
        for (std::size_t k = 0; k < u.size(); ++k) {
            cand_u[k] = static_cast<float>(u[k] + step * dir_u[k]);
            cand_v[k] = static_cast<float>(v[k] + step * dir_v[k]);
        }
        const double e = problem.energy(cand_u, cand_v);
        require_finite(e);
        if (e < energy) {
            u.swap(cand_u);
            v.swap(cand_v);
            energy = e;
            return step;
        }
    }
    return 0.0;
}

}  // namespace

void SolverOptions::validate() const {
    if (!(smoothness >= 0.0) || !(charbonnier_eps > 0.0) || !(initial_step > 0.0) || max_iterations < 0 ||
        !(rel_tolerance >= 0.0) || domain_margin < 0) {
        throw ParameterError("flowgen: invalid solver options");
    }
}

Vec2 centroid_shift(const Piece& piece0, const Piece& piece1) {
    return {piece1.centroid.x - piece0.centroid.x, piece1.centroid.y - piece0.centroid.y};
}

ImageF masked_image(const ImageF& gray, const SegmentationMap& seg, int label) {
    if (gray.channels() != 1 || !gray.same_size(seg.width, seg.height)) {
        throw ParameterError("masked_image: expected a grayscale image matching the segmentation");
    }
    ImageF out(gray.width(), gray.height(), 1, 0.0f);
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            if (seg.at(x, y) == label) {
                out.at(x, y) = gray.at(x, y);
            }
        }
    }
    return out;
}

double deformation_energy(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Rect& domain,
                          std::span<const float> u, std::span<const float> v, const SolverOptions& opts) {
    const DeformationProblem problem(i0m, i1m, shift, domain, opts);
    if (u.size() != problem.size() || v.size() != problem.size()) {
        throw ParameterError("deformation_energy: field size does not match the domain");
    }
    return problem.energy(u, v);
}

Deformation local_deformation(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Rect& domain,
                              const SolverOptions& opts) {
    opts.validate();
    if (i0m.channels() != 1 || i1m.channels() != 1 || !i0m.same_size(i1m)) {
        throw ParameterError("local_deformation: expected two grayscale images of equal size");
    }
    if (domain.empty() || domain.x0 < 0 || domain.y0 < 0 || domain.x1 >= i0m.width() || domain.y1 >= i0m.height()) {
        throw ParameterError("local_deformation: domain empty or outside the frame");
    }
    if (!std::isfinite(shift.x) || !std::isfinite(shift.y)) {
        throw ParameterError("local_deformation: non-finite shift");
    }

    const DeformationProblem problem(i0m, i1m, shift, domain, opts);
    const std::size_t n = problem.size();
    Deformation out;
    out.domain = domain;
    out.u.assign(n, 0.0f);
    out.v.assign(n, 0.0f);

    std::vector<double> gu;
    std::vector<double> gv;
    std::vector<double> dir_u(n);
    std::vector<double> dir_v(n);
    std::vector<float> cand_u(n);
    std::vector<float> cand_v(n);

    double energy = problem.energy(out.u, out.v);
    require_finite(energy);
    out.energy_trace.push_back(energy);

    double rigid_step = opts.initial_step;
    double pixel_step = opts.initial_step;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const double start = energy;

        // Common translation of the whole field.
        problem.energy_and_gradient(out.u, out.v, gu, gv);
        double sum_u = 0.0;
        double sum_v = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            sum_u += gu[k];
            sum_v += gv[k];
        }
        const double rigid_norm = std::max(std::abs(sum_u), std::abs(sum_v));
        if (rigid_norm > 0.0) {
            std::fill(dir_u.begin(), dir_u.end(), -sum_u / rigid_norm);
            std::fill(dir_v.begin(), dir_v.end(), -sum_v / rigid_norm);
            const double taken = backtrack(problem, out.u, out.v, dir_u, dir_v, rigid_step, energy, cand_u, cand_v);
            rigid_step = taken > 0.0 ? std::min(opts.initial_step, 2.0 * taken) : opts.initial_step;
            if (taken > 0.0) {
                problem.energy_and_gradient(out.u, out.v, gu, gv);
            }
        }

        // Per-pixel step.
        double pixel_norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            pixel_norm = std::max({pixel_norm, std::abs(gu[k]), std::abs(gv[k])});
        }
        if (pixel_norm > 0.0) {
            for (std::size_t k = 0; k < n; ++k) {
                dir_u[k] = -gu[k] / pixel_norm;
                dir_v[k] = -gv[k] / pixel_norm;
            }
            const double taken = backtrack(problem, out.u, out.v, dir_u, dir_v, pixel_step, energy, cand_u, cand_v);
            pixel_step = taken > 0.0 ? std::min(opts.initial_step, 2.0 * taken) : opts.initial_step;
        }

        if (energy < start) {
            out.energy_trace.push_back(energy);
        }
        if (start - energy <= opts.rel_tolerance * start) {
            break;
        }
    }
    return out;
}

Deformation local_deformation(const ImageF& i0m, const ImageF& i1m, Vec2 shift, const Piece& piece,
                              const SolverOptions& opts) {
    if (piece.pixel_count < 1 || piece.bbox.empty()) {
        throw ParameterError("local_deformation: empty piece");
    }
    const Rect domain = piece.bbox.dilated(opts.domain_margin, i0m.width(), i0m.height());
    return local_deformation(i0m, i1m, shift, domain, opts);
}

FlowField assemble_flow(const SegmentationMap& seg0, const matching::MatchResult& matches,
                        std::span<const PieceFlow> piece_flows) {
    const int k = seg0.piece_count;
    if (matches.consistent.size() != static_cast<std::size_t>(k)) {
        throw ParameterError("assemble_flow: match result does not describe this segmentation");
    }
    std::vector<int> flow_of_piece(k, -1);
    for (std::size_t idx = 0; idx < piece_flows.size(); ++idx) {
        const int piece = piece_flows[idx].piece;
        if (piece < 0 || piece >= k) {
            throw ParameterError("assemble_flow: piece id out of range");
        }
        if (flow_of_piece[piece] != -1) {
            throw InternalError("assemble_flow: piece " + std::to_string(piece) + " covered twice");
        }
        if (!matches.consistent[piece]) {
            throw InternalError("assemble_flow: flow supplied for inconsistent piece " + std::to_string(piece));
        }
        flow_of_piece[piece] = static_cast<int>(idx);
    }
    for (int piece = 0; piece < k; ++piece) {
        if (matches.consistent[piece] && flow_of_piece[piece] < 0) {
            throw InternalError("assemble_flow: consistent piece " + std::to_string(piece) + " has no flow");
        }
    }

    FlowField flow(seg0.width, seg0.height);
    for (int y = 0; y < seg0.height; ++y) {
        for (int x = 0; x < seg0.width; ++x) {
            const int label = seg0.at(x, y);
            if (label < 0 || label >= k) {
                throw ParameterError("assemble_flow: segmentation must be total");
            }
            if (flow_of_piece[label] < 0) {
                continue;
            }
            const auto& pf = piece_flows[flow_of_piece[label]];
            const auto& def = pf.deformation;
            if (!def.domain.contains(x, y)) {
                throw InternalError("assemble_flow: deformation domain does not cover its piece");
            }
            const std::size_t li = def.local_index(x, y);
            const std::size_t gi = flow.index(x, y);
            flow.u[gi] = static_cast<float>(pf.shift.x + def.u[li]);
            flow.v[gi] = static_cast<float>(pf.shift.y + def.v[li]);
        }
    }
    return flow;
}

std::vector<PieceFlow> piece_flows(const ImageF& gray0, const SegmentationMap& seg0, std::span<const Piece> pieces0,
                                   const ImageF& gray1, const SegmentationMap& seg1, std::span<const Piece> pieces1,
                                   const matching::MatchResult& matches, const SolverOptions& opts) {
    std::vector<PieceFlow> flows;
    for (std::size_t i = 0; i < pieces0.size(); ++i) {
        if (!matches.consistent[i]) {
            continue;
        }
        const int j = matches.forward_map[i];
        const Vec2 shift = centroid_shift(pieces0[i], pieces1[j]);
        const ImageF i0m = masked_image(gray0, seg0, static_cast<int>(i));
        const ImageF i1m = masked_image(gray1, seg1, j);
        flows.push_back({static_cast<int>(i), shift, local_deformation(i0m, i1m, shift, pieces0[i], opts)});
    }
    return flows;
}

BidirectionalFlows bidirectional_flows(const ImageU8& frame0, const ImageU8& frame1, const SegmentationMap& seg0,
                                       const SegmentationMap& seg1, const FeatureMatrix& features0,
                                       const FeatureMatrix& features1, const matching::MatchingParams& match_params,
                                       const SolverOptions& opts) {
    if (!frame0.same_size(frame1) || !frame0.same_size(seg0.width, seg0.height) ||
        !frame1.same_size(seg1.width, seg1.height)) {
        throw ParameterError("bidirectional_flows: frames and segmentations must share dimensions");
    }
    const auto pieces0 = segmentation::piece_stats(seg0);
    const auto pieces1 = segmentation::piece_stats(seg1);
    const ImageF gray0 = imgproc::to_grayscale(to_float(frame0));
    const ImageF gray1 = imgproc::to_grayscale(to_float(frame1));

    BidirectionalFlows out;
    out.matches = matching::match_pieces(features0, features1, pieces0, pieces1, frame0.width(), frame0.height(),
                                         match_params);
    const auto reversed = out.matches.reversed();

    const auto forward = piece_flows(gray0, seg0, pieces0, gray1, seg1, pieces1, out.matches, opts);
    out.forward = assemble_flow(seg0, out.matches, forward);
    const auto backward = piece_flows(gray1, seg1, pieces1, gray0, seg0, pieces0, reversed, opts);
    out.backward = assemble_flow(seg1, reversed, backward);
    return out;
}

}  // namespace sgm::flowgen
