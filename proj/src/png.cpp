#include "geoclust/png.hpp"

#include <zlib.h>

#include "geoclust/common.hpp"

namespace geoclust {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size())));
    put_u32_be(out, crc);
}

}  // namespace

std::vector<std::uint8_t> encode_indexed_png(std::size_t width, std::size_t height,
                                             const std::vector<std::uint8_t>& indices,
                                             const Palette& palette) {
    if (width == 0 || height == 0) throw DataError("png dimensions must be >= 1");
    if (indices.size() != width * height) throw DataError("png index count mismatch");
    if (palette.empty() || palette.size() > 256)
        throw DataError("png palette must have 1..256 entries");

    std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(3);  // colour type: indexed
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    put_chunk(png, "IHDR", ihdr);

    std::vector<std::uint8_t> plte;
    for (const auto& rgb : palette) {
        plte.push_back(rgb[0]);
        plte.push_back(rgb[1]);
        plte.push_back(rgb[2]);
    }
    put_chunk(png, "PLTE", plte);

    // filter byte 0 in front of every scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t r = 0; r < height; ++r) {
        raw.push_back(0);
        raw.insert(raw.end(), indices.begin() + static_cast<std::ptrdiff_t>(r * width),
                   indices.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
    }
    uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (::compress2(compressed.data(), &bound, raw.data(),
                    static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw NumericError("zlib compression failed");
    compressed.resize(bound);
    put_chunk(png, "IDAT", compressed);

    put_chunk(png, "IEND", {});
    return png;
}

}  // namespace geoclust
