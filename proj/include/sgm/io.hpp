#pragma once

#include <filesystem>

#include "json.hpp"

#include "sgm/curation.hpp"
#include "sgm/features.hpp"
#include "sgm/matching.hpp"
#include "sgm/raster.hpp"
#include "sgm/segmentation.hpp"

namespace sgm::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Reads PNG / PPM / PGM (anything imgcodecs decodes) into an 8-bit RGB or gray image.
/// Alpha is dropped.
ImageU8 read_image(const fs::path& path);

/// Encoding follows the extension (.png, .ppm, .pgm).
void write_image(const fs::path& path, const ImageU8& img);

/// 8-bit mask image, 255 where the mask is set.
void write_mask(const fs::path& path, const ContourMask& mask);

/// Labels as a 16-bit grayscale PNG plus a JSON sidecar with per-piece records.
void write_segmentation(const fs::path& png_path, const fs::path& json_path, const SegmentationMap& seg);
SegmentationMap read_segmentation(const fs::path& png_path);

json pieces_to_json(const SegmentationMap& seg, const std::vector<Piece>& pieces);

/// Feature container: 8-byte magic "SGMFEAT1", little-endian uint32 header
/// length, a JSON header, then little-endian float32 payload. Tensors store
/// levels one after another, each channel-major then row-major; matrices store
/// rows in order.
void write_feature_tensor(const fs::path& path, const FeatureTensor& tensor);
FeatureTensor read_feature_tensor(const fs::path& path);
void write_feature_matrix(const fs::path& path, const FeatureMatrix& features);
FeatureMatrix read_feature_matrix(const fs::path& path);
void write_feature_csv(const fs::path& path, const FeatureMatrix& features);

/// One record per frame-0 piece: {i, j, degree, affinity, consistent}.
json match_to_json(const matching::MatchResult& matches);

json record_to_json(const curation::TripletRecord& record);
curation::TripletRecord record_from_json(const json& j);

void write_text(const fs::path& path, const std::string& text);

}  // namespace sgm::io
