#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "geoclust/common.hpp"

namespace geoclust {

using Rgb = std::array<std::uint8_t, 3>;
using Palette = std::vector<Rgb>;

// Integer cluster/class map over the grid. 65535 marks pixels without a
// valid observation; those pass through every stage untouched.
struct LabelGrid {
    static constexpr std::uint16_t kNoData = 65535;

    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint16_t> labels;  // row-major
    std::optional<Palette> palette;
    std::optional<std::array<double, 6>> geotransform;

    std::uint16_t at(std::size_t r, std::size_t c) const {
        return labels[r * cols + c];
    }
    std::uint16_t& at(std::size_t r, std::size_t c) {
        return labels[r * cols + c];
    }

    void validate() const;
};

// Directory with header.json (rows, cols, dtype "u16le", optional palette,
// optional geotransform) + labels.bin (u16 little-endian, row-major).
LabelGrid read_label_grid(const std::filesystem::path& dir);
void write_label_grid(const LabelGrid& grid, const std::filesystem::path& dir);

}  // namespace geoclust
