#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sgm/flow.hpp"

namespace sgm {

namespace {

static_assert(std::endian::native == std::endian::little, "flo I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic = {'P', 'I', 'E', 'H'};
constexpr std::int32_t kMaxDim = 1 << 16;

}  // namespace

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const std::int32_t w = flow.width;
    const std::int32_t h = flow.height;
    out.write(kMagic.data(), kMagic.size());
    out.write(reinterpret_cast<const char*>(&w), sizeof w);
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    std::vector<float> interleaved(flow.pixel_count() * 2);
    for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
        interleaved[2 * i] = flow.u[i];
        interleaved[2 * i + 1] = flow.v[i];
    }
    out.write(reinterpret_cast<const char*>(interleaved.data()),
              static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

FlowField read_flo(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::array<char, 4> magic{};
    std::int32_t w = 0;
    std::int32_t h = 0;
    in.read(magic.data(), magic.size());
    in.read(reinterpret_cast<char*>(&w), sizeof w);
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!in || magic != kMagic) {
        throw IoError(path.string() + ": not a .flo file");
    }
    if (w < 0 || h < 0 || w > kMaxDim || h > kMaxDim) {
        throw IoError(path.string() + ": implausible flow dimensions");
    }
    FlowField flow(w, h);
    std::vector<float> interleaved(flow.pixel_count() * 2);
    in.read(reinterpret_cast<char*>(interleaved.data()),
            static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
    if (!in) {
        throw IoError(path.string() + ": truncated flow payload");
    }
    for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
        flow.u[i] = interleaved[2 * i];
        flow.v[i] = interleaved[2 * i + 1];
    }
    return flow;
}

}  // namespace sgm
