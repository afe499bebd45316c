#pragma once

#include <cstdint>
#include <vector>

#include "geoclust/labels.hpp"

namespace geoclust {

// Minimal 8-bit indexed-colour PNG encoder (IHDR + PLTE + IDAT + IEND,
// filter 0 scanlines, zlib-deflated). Output is byte-stable for fixed input.
std::vector<std::uint8_t> encode_indexed_png(std::size_t width, std::size_t height,
                                             const std::vector<std::uint8_t>& indices,
                                             const Palette& palette);

}  // namespace geoclust
