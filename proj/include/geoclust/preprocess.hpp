#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "geoclust/common.hpp"
#include "geoclust/labels.hpp"
#include "geoclust/raster.hpp"

namespace geoclust {

// Flattened table of valid pixels: one row per pixel, one column per band,
// plus the map back to grid positions. Spatial structure is deliberately
// dropped; every learner downstream treats pixels as independent spectra.
struct PixelMatrix {
    Matrix values;  // n_pixels x n_bands
    std::vector<std::pair<std::uint32_t, std::uint32_t>> index_map;

    std::size_t n_pixels() const { return values.rows; }
    std::size_t n_bands() const { return values.cols; }
};

// Per-band affine map to [0,1]: (v - min) / (max - min).
struct ScalingParams {
    std::vector<double> mins;
    std::vector<double> maxs;

    std::size_t n_bands() const { return mins.size(); }
};

// Valid pixels in row-major scan order. Errors if the grid is all nodata.
PixelMatrix build_pixel_matrix(const RasterGrid& grid);

// Column-wise min-max helpers; constant columns map to all-zero rather than
// injecting a fake mid-level signal.
ScalingParams fit_minmax(const Matrix& m);
void apply_minmax(Matrix& m, const ScalingParams& params);
void invert_minmax(Matrix& m, const ScalingParams& params);

std::pair<PixelMatrix, ScalingParams> minmax_scale(const PixelMatrix& matrix);

// Scatters labels back onto the grid; every position not in index_map gets
// the 65535 sentinel.
LabelGrid labels_to_grid(const std::vector<std::uint32_t>& labels,
                         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& index_map,
                         std::size_t rows, std::size_t cols);

}  // namespace geoclust
