#include "sgm/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace sgm::io {

namespace {

static_assert(std::endian::native == std::endian::little, "feature container I/O assumes a little-endian host");

constexpr std::array<char, 8> kFeatureMagic = {'S', 'G', 'M', 'F', 'E', 'A', 'T', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 1u << 20;

cv::Mat to_mat(const ImageU8& img) {
    const int type = img.channels() == 1 ? CV_8UC1 : CV_8UC3;
    cv::Mat mat(img.height(), img.width(), type);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width(); ++x) {
            if (img.channels() == 1) {
                row[x] = img.at(x, y);
            } else {
                // imgcodecs expects BGR.
                row[3 * x + 0] = img.at(x, y, 2);
                row[3 * x + 1] = img.at(x, y, 1);
                row[3 * x + 2] = img.at(x, y, 0);
            }
        }
    }
    return mat;
}

void write_mat(const fs::path& path, const cv::Mat& mat) {
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception& e) {
        throw IoError("cannot encode " + path.string() + ": " + e.what());
    }
    if (!ok) {
        throw IoError("cannot write " + path.string());
    }
}

void write_container(const fs::path& path, const json& header, const std::vector<float>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const std::string text = header.dump();
    const auto length = static_cast<std::uint32_t>(text.size());
    out.write(kFeatureMagic.data(), kFeatureMagic.size());
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

std::pair<json, std::vector<float>> read_container(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::array<char, 8> magic{};
    std::uint32_t length = 0;
    in.read(magic.data(), magic.size());
    in.read(reinterpret_cast<char*>(&length), sizeof length);
    if (!in || magic != kFeatureMagic || length > kMaxHeaderBytes) {
        throw IoError(path.string() + ": not a feature container");
    }
    std::string text(length, '\0');
    in.read(text.data(), length);
    if (!in) {
        throw IoError(path.string() + ": truncated header");
    }
    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": bad header: " + e.what());
    }
    std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (rest.size() % sizeof(float) != 0) {
        throw IoError(path.string() + ": payload is not a whole number of float32 values");
    }
    std::vector<float> payload(rest.size() / sizeof(float));
    std::memcpy(payload.data(), rest.data(), rest.size());
    return {std::move(header), std::move(payload)};
}

int header_int(const json& obj, const char* key, const fs::path& path) {
    if (!obj.contains(key) || !obj.at(key).is_number_integer()) {
        throw IoError(path.string() + ": header field '" + key + "' missing or not an integer");
    }
    return obj.at(key).get<int>();
}

}  // namespace

ImageU8 read_image(const fs::path& path) {
    cv::Mat mat;
    try {
        mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw IoError("cannot decode " + path.string() + ": " + e.what());
    }
    if (mat.empty()) {
        throw IoError("cannot read image " + path.string());
    }
    if (mat.depth() != CV_8U) {
        throw IoError(path.string() + ": only 8-bit images are supported");
    }
    const int src_channels = mat.channels();
    if (src_channels != 1 && src_channels != 3 && src_channels != 4) {
        throw IoError(path.string() + ": unsupported channel count");
    }
    const int channels = src_channels == 1 ? 1 : 3;
    ImageU8 img(mat.cols, mat.rows, channels);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < mat.cols; ++x) {
            if (channels == 1) {
                img.at(x, y) = row[x];
            } else {
                img.at(x, y, 0) = row[src_channels * x + 2];
                img.at(x, y, 1) = row[src_channels * x + 1];
                img.at(x, y, 2) = row[src_channels * x + 0];
            }
        }
    }
    return img;
}

void write_image(const fs::path& path, const ImageU8& img) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw ParameterError("write_image: expected 1 or 3 channels");
    }
    write_mat(path, to_mat(img));
}

void write_mask(const fs::path& path, const ContourMask& mask) {
    cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            mat.at<std::uint8_t>(y, x) = mask.at(x, y) != 0 ? 255 : 0;
        }
    }
    write_mat(path, mat);
}

json pieces_to_json(const SegmentationMap& seg, const std::vector<Piece>& pieces) {
    json records = json::array();
    for (const auto& p : pieces) {
        records.push_back({{"id", p.id},
                           {"pixel_count", p.pixel_count},
                           {"centroid", {p.centroid.x, p.centroid.y}},
                           {"bbox", {p.bbox.x0, p.bbox.y0, p.bbox.x1, p.bbox.y1}}});
    }
    return {{"width", seg.width}, {"height", seg.height}, {"piece_count", seg.piece_count}, {"pieces", records}};
}

void write_segmentation(const fs::path& png_path, const fs::path& json_path, const SegmentationMap& seg) {
    if (seg.piece_count > 65536) {
        throw ParameterError("write_segmentation: more pieces than a 16-bit PNG can label");
    }
    cv::Mat mat(seg.height, seg.width, CV_16UC1);
    for (int y = 0; y < seg.height; ++y) {
        for (int x = 0; x < seg.width; ++x) {
            const auto label = seg.at(x, y);
            if (label < 0) {
                throw ParameterError("write_segmentation: segmentation must be total");
            }
            mat.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(label);
        }
    }
    write_mat(png_path, mat);
    write_text(json_path, pieces_to_json(seg, segmentation::piece_stats(seg)).dump(2) + "\n");
}

SegmentationMap read_segmentation(const fs::path& png_path) {
    const cv::Mat mat = cv::imread(png_path.string(), cv::IMREAD_UNCHANGED);
    if (mat.empty() || mat.type() != CV_16UC1) {
        throw IoError(png_path.string() + ": expected a 16-bit single-channel label PNG");
    }
    SegmentationMap seg(mat.cols, mat.rows);
    int max_label = -1;
    for (int y = 0; y < mat.rows; ++y) {
        for (int x = 0; x < mat.cols; ++x) {
            seg.at(x, y) = mat.at<std::uint16_t>(y, x);
            max_label = std::max(max_label, seg.at(x, y));
        }
    }
    seg.piece_count = max_label + 1;
    return seg;
}

void write_feature_tensor(const fs::path& path, const FeatureTensor& tensor) {
    json levels = json::array();
    std::vector<float> payload;
    for (const auto& level : tensor.levels) {
        levels.push_back({{"channels", level.channels},
                          {"height", level.height},
                          {"width", level.width},
                          {"factor", level.factor}});
        payload.insert(payload.end(), level.data.begin(), level.data.end());
    }
    write_container(path, {{"kind", "tensor"}, {"levels", levels}}, payload);
}

FeatureTensor read_feature_tensor(const fs::path& path) {
    auto [header, payload] = read_container(path);
    if (header.value("kind", "") != "tensor" || !header.contains("levels") || !header["levels"].is_array()) {
        throw IoError(path.string() + ": container does not hold a feature tensor");
    }
    FeatureTensor tensor;
    std::size_t offset = 0;
    for (const auto& entry : header["levels"]) {
        FeatureLevel level;
        level.channels = header_int(entry, "channels", path);
        level.height = header_int(entry, "height", path);
        level.width = header_int(entry, "width", path);
        level.factor = header_int(entry, "factor", path);
        if (level.channels < 1 || level.height < 0 || level.width < 0 || level.factor < 1) {
            throw IoError(path.string() + ": invalid level dimensions");
        }
        const std::size_t count = static_cast<std::size_t>(level.channels) * level.height * level.width;
        if (offset + count > payload.size()) {
            throw IoError(path.string() + ": payload shorter than the header declares");
        }
        level.data.assign(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                          payload.begin() + static_cast<std::ptrdiff_t>(offset + count));
        offset += count;
        tensor.levels.push_back(std::move(level));
    }
    if (offset != payload.size()) {
        throw IoError(path.string() + ": payload longer than the header declares");
    }
    return tensor;
}

void write_feature_matrix(const fs::path& path, const FeatureMatrix& features) {
    std::vector<float> payload;
    payload.reserve(features.values.values().size());
    for (const double v : features.values.values()) {
        payload.push_back(static_cast<float>(v));
    }
    write_container(path, {{"kind", "matrix"}, {"rows", features.piece_count()}, {"cols", features.feature_dim()}},
                    payload);
}

FeatureMatrix read_feature_matrix(const fs::path& path) {
    auto [header, payload] = read_container(path);
    if (header.value("kind", "") != "matrix") {
        throw IoError(path.string() + ": container does not hold a feature matrix");
    }
    const int rows = header_int(header, "rows", path);
    const int cols = header_int(header, "cols", path);
    if (rows < 0 || cols < 0 || payload.size() != static_cast<std::size_t>(rows) * cols) {
        throw IoError(path.string() + ": matrix payload does not match its header");
    }
    FeatureMatrix out{Matrix(rows, cols), std::vector<bool>(rows, false)};
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out.values(r, c) = payload[static_cast<std::size_t>(r) * cols + c];
        }
    }
    return out;
}

void write_feature_csv(const fs::path& path, const FeatureMatrix& features) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (int r = 0; r < features.piece_count(); ++r) {
        const auto row = features.values.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "," : "") << row[c];
        }
        out << '\n';
    }
    write_text(path, out.str());
}

json match_to_json(const matching::MatchResult& m) {
    json records = json::array();
    for (std::size_t i = 0; i < m.forward_map.size(); ++i) {
        const int j = m.forward_map[i];
        const int ii = static_cast<int>(i);
        records.push_back({{"i", ii},
                           {"j", j},
                           {"degree", m.degree.rows() > ii ? m.degree(ii, j) : 0.0},
                           {"affinity", m.affinity.rows() > ii ? m.affinity(ii, j) : 0.0},
                           {"consistent", static_cast<bool>(m.consistent[i])}});
    }
    return {{"pieces0", m.forward_map.size()}, {"pieces1", m.backward_map.size()}, {"matches", records}};
}

json record_to_json(const curation::TripletRecord& r) {
    json j = {{"frame0", r.frame0}, {"middle", r.middle}, {"frame1", r.frame1}};
    if (!r.id.empty()) j["id"] = r.id;
    if (r.ssim_01) j["ssim_01"] = *r.ssim_01;
    if (r.ssim_0h) j["ssim_0h"] = *r.ssim_0h;
    if (r.ssim_h1) j["ssim_h1"] = *r.ssim_h1;
    if (r.flow_similarity) j["flow_similarity"] = *r.flow_similarity;
    if (r.difficulty) j["difficulty"] = std::string(curation::to_string(*r.difficulty));
    if (r.roi) j["roi"] = {{"x", r.roi->x0}, {"y", r.roi->y0}, {"w", r.roi->width()}, {"h", r.roi->height()}};
    return j;
}

curation::TripletRecord record_from_json(const json& j) {
    if (!j.is_object()) {
        throw ParameterError("manifest record must be a JSON object");
    }
    curation::TripletRecord r;
    try {
        r.id = j.value("id", "");
        r.frame0 = j.value("frame0", "");
        r.middle = j.value("middle", "");
        r.frame1 = j.value("frame1", "");
        const auto opt_number = [&](const char* key) -> std::optional<double> {
            if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
            return j.at(key).get<double>();
        };
        r.ssim_01 = opt_number("ssim_01");
        r.ssim_0h = opt_number("ssim_0h");
        r.ssim_h1 = opt_number("ssim_h1");
        r.flow_similarity = opt_number("flow_similarity");
        if (j.contains("difficulty") && !j.at("difficulty").is_null()) {
            r.difficulty = curation::parse_difficulty(j.at("difficulty").get<std::string>());
            if (!r.difficulty) {
                throw ParameterError("unknown difficulty label");
            }
        }
        if (j.contains("roi") && !j.at("roi").is_null()) {
            const auto& roi = j.at("roi");
            const int x = roi.at("x").get<int>();
            const int y = roi.at("y").get<int>();
            const int w = roi.at("w").get<int>();
            const int h = roi.at("h").get<int>();
            if (w < 1 || h < 1) {
                throw ParameterError("roi must have positive width and height");
            }
            r.roi = Rect{x, y, x + w - 1, y + h - 1};
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed manifest record: ") + e.what());
    }
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

}  // namespace sgm::io
