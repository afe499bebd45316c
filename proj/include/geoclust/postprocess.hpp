#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "geoclust/labels.hpp"

namespace geoclust {

// 12 maximally-distinct fixed colours used when no palette is supplied.
const Palette& default_palette();

// Replaces each non-sentinel pixel with the modal label of the in-bounds,
// non-sentinel pixels in the kernel window around it, reading only the
// input grid. Ties keep the centre's own label when it is among the tied
// modes, otherwise the lowest tied label. Sentinel pixels pass through and
// border windows shrink instead of padding.
LabelGrid majority_filter(const LabelGrid& grid, std::size_t kernel = 7);

// Indexed-colour PNG, one pixel per cell; the sentinel renders black.
std::vector<std::uint8_t> render_map(const LabelGrid& grid,
                                     const std::optional<Palette>& palette = std::nullopt);

void write_bytes(const std::vector<std::uint8_t>& bytes,
                 const std::filesystem::path& path);

}  // namespace geoclust
