#include "sgm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace sgm {

namespace {

namespace pt = boost::property_tree;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view key, std::string text) {
    boost::algorithm::trim(text);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParameterError("config: '" + std::string(key) + "' expects a number, got '" + text + "'");
    }
    return v;
}

int parse_int(std::string_view key, std::string text) {
    boost::algorithm::trim(text);
    int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParameterError("config: '" + std::string(key) + "' expects an integer, got '" + text + "'");
    }
    return v;
}

std::vector<int> parse_int_list(std::string_view key, const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_int(key, item));
    }
    if (out.empty()) {
        throw ParameterError("config: '" + std::string(key) + "' expects a comma-separated list");
    }
    return out;
}

struct Key {
    std::string_view name;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename Member>
Key real_key(std::string_view name, Member member) {
    return {name, [=](PipelineConfig& c, const std::string& s) { std::invoke(member, c) = parse_double(name, s); },
            [=](const PipelineConfig& c) { return format_double(std::invoke(member, c)); }};
}

template <typename Member>
Key int_key(std::string_view name, Member member) {
    return {name, [=](PipelineConfig& c, const std::string& s) { std::invoke(member, c) = parse_int(name, s); },
            [=](const PipelineConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

const std::vector<Key>& keys() {
    using C = PipelineConfig;
    static const std::vector<Key> table = {
        real_key("bilateral_sigma_spatial", [](auto& c) -> auto& { return c.contour.sigma_spatial; }),
        real_key("bilateral_sigma_range", [](auto& c) -> auto& { return c.contour.sigma_range; }),
        real_key("hysteresis_percentile", [](auto& c) -> auto& { return c.contour.high_percentile; }),
        real_key("hysteresis_low_ratio", [](auto& c) -> auto& { return c.contour.low_ratio; }),
        Key{"trapped_ball_radii",
            [](C& c, const std::string& s) { c.segment.radii = parse_int_list("trapped_ball_radii", s); },
            [](const C& c) {
                std::string out;
                for (std::size_t i = 0; i < c.segment.radii.size(); ++i) {
                    out += (i ? "," : "") + std::to_string(c.segment.radii[i]);
                }
                return out;
            }},
        int_key("min_piece_size", [](auto& c) -> auto& { return c.segment.min_piece_size; }),
        int_key("bins_per_channel", [](auto& c) -> auto& { return c.bins_per_channel; }),
        real_key("lambda_dist", [](auto& c) -> auto& { return c.matching.lambda_dist; }),
        real_key("lambda_size", [](auto& c) -> auto& { return c.matching.lambda_size; }),
        real_key("dist_threshold_frac", [](auto& c) -> auto& { return c.matching.dist_threshold_frac; }),
        real_key("smoothness_alpha", [](auto& c) -> auto& { return c.solver.smoothness; }),
        real_key("charbonnier_eps", [](auto& c) -> auto& { return c.solver.charbonnier_eps; }),
        real_key("solver_initial_step", [](auto& c) -> auto& { return c.solver.initial_step; }),
        int_key("solver_max_iterations", [](auto& c) -> auto& { return c.solver.max_iterations; }),
        real_key("solver_rel_tolerance", [](auto& c) -> auto& { return c.solver.rel_tolerance; }),
        int_key("deformation_margin", [](auto& c) -> auto& { return c.solver.domain_margin; }),
        real_key("splat_mass_floor", [](auto& c) -> auto& { return c.synthesis.mass_floor; }),
        real_key("splat_importance_beta", [](auto& c) -> auto& { return c.synthesis.importance_beta; }),
        real_key("ssim_high", [](auto& c) -> auto& { return c.gate.high; }),
        real_key("ssim_low", [](auto& c) -> auto& { return c.gate.low; }),
        real_key("flow_hist_bin_width", [](auto& c) -> auto& { return c.flow_hist_bin_width; }),
        int_key("flow_hist_bins", [](auto& c) -> auto& { return c.flow_hist_bins; }),
        real_key("auto_select_threshold", [](auto& c) -> auto& { return c.auto_select_threshold; }),
        real_key("occlusion_threshold", [](auto& c) -> auto& { return c.occlusion_threshold; }),
        real_key("difficulty_motion", [](auto& c) -> auto& { return c.difficulty.motion; }),
        real_key("difficulty_spread", [](auto& c) -> auto& { return c.difficulty.spread; }),
        real_key("difficulty_occ_medium", [](auto& c) -> auto& { return c.difficulty.occ_medium; }),
        real_key("difficulty_occ_hard", [](auto& c) -> auto& { return c.difficulty.occ_hard; }),
    };
    return table;
}

const Key* find_key(std::string_view name) {
    for (const auto& k : keys()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

void require(bool ok, const char* key, const char* what) {
    if (!ok) {
        throw ParameterError(std::string("config: '") + key + "' " + what);
    }
}

}  // namespace

void PipelineConfig::validate() const {
    require(contour.sigma_spatial > 0.0, "bilateral_sigma_spatial", "must be positive");
    require(contour.sigma_range > 0.0, "bilateral_sigma_range", "must be positive");
    require(contour.high_percentile > 0.0 && contour.high_percentile <= 1.0, "hysteresis_percentile",
            "must lie in (0, 1]");
    require(contour.low_ratio > 0.0 && contour.low_ratio <= 1.0, "hysteresis_low_ratio", "must lie in (0, 1]");
    bool descending = !segment.radii.empty() && segment.radii.back() == 1;
    for (std::size_t i = 1; i < segment.radii.size(); ++i) {
        descending = descending && segment.radii[i] < segment.radii[i - 1];
    }
    require(descending, "trapped_ball_radii", "must be strictly descending and end at 1");
    require(segment.min_piece_size >= 1, "min_piece_size", "must be at least 1");
    require(bins_per_channel >= 2 && bins_per_channel <= 256, "bins_per_channel", "must lie in [2, 256]");
    matching.validate();
    solver.validate();
    require(synthesis.mass_floor >= 0.0, "splat_mass_floor", "must be non-negative");
    require(synthesis.importance_beta >= 0.0, "splat_importance_beta", "must be non-negative");
    require(gate.low >= 0.0 && gate.low <= 1.0, "ssim_low", "must lie in [0, 1]");
    require(gate.high >= gate.low && gate.high <= 1.0, "ssim_high", "must lie in [ssim_low, 1]");
    require(flow_hist_bin_width > 0.0, "flow_hist_bin_width", "must be positive");
    require(flow_hist_bins >= 1, "flow_hist_bins", "must be at least 1");
    require(auto_select_threshold >= 0.0 && auto_select_threshold <= 1.0, "auto_select_threshold",
            "must lie in [0, 1]");
    require(occlusion_threshold > 0.0, "occlusion_threshold", "must be positive");
    require(difficulty.motion >= 0.0, "difficulty_motion", "must be non-negative");
    require(difficulty.spread >= 0.0, "difficulty_spread", "must be non-negative");
    require(difficulty.occ_medium >= 0.0, "difficulty_occ_medium", "must be non-negative");
    require(difficulty.occ_hard >= difficulty.occ_medium, "difficulty_occ_hard",
            "must be at least difficulty_occ_medium");
}

PipelineConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParameterError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }
    PipelineConfig config;
    const auto apply = [&](const std::string& name, const pt::ptree& node) {
        const Key* key = find_key(name);
        if (key == nullptr) {
            throw ParameterError("config: unknown key '" + name + "'");
        }
        key->set(config, node.data());
    };
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            apply(name, node);
            continue;
        }
        for (const auto& [inner, leaf] : node) {
            apply(inner, leaf);
        }
    }
    config.validate();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string dump_config(const PipelineConfig& config) {
    std::string out;
    for (const auto& k : keys()) {
        out += std::string(k.name) + " = " + k.get(config) + "\n";
    }
    return out;
}

}  // namespace sgm
