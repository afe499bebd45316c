#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoclust/common.hpp"

namespace geoclust {

// Multiband raster held as 64-bit reals, band-sequential (all of band 0
// row-major, then band 1, ...). On disk the values are 32-bit IEEE-754
// little-endian; conversion happens only in read_raster / write_raster.
//
// geotransform follows the usual 6-term affine convention:
//   x = gt[0] + col*gt[1] + row*gt[2]
//   y = gt[3] + col*gt[4] + row*gt[5]
struct RasterGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t bands = 0;
    std::vector<double> values;
    std::optional<double> nodata_value;
    std::optional<std::array<double, 6>> geotransform;
    std::optional<std::vector<std::string>> band_names;

    std::size_t band_stride() const { return rows * cols; }

    double value(std::size_t r, std::size_t c, std::size_t b) const {
        return values[b * band_stride() + r * cols + c];
    }
    double& value(std::size_t r, std::size_t c, std::size_t b) {
        return values[b * band_stride() + r * cols + c];
    }

    bool is_nodata(double v) const {
        return nodata_value.has_value() && v == *nodata_value;
    }

    // A pixel is invalid when any of its bands is nodata; clustering must
    // see complete spectra.
    bool pixel_is_nodata(std::size_t r, std::size_t c) const {
        if (!nodata_value) return false;
        for (std::size_t b = 0; b < bands; ++b)
            if (value(r, c, b) == *nodata_value) return true;
        return false;
    }

    // Throws DataError / NumericError if the grid invariants are violated.
    void validate() const;
};

// Raster dataset = directory with header.json + bands.bin (see README).
RasterGrid read_raster(const std::filesystem::path& dir);
void write_raster(const RasterGrid& grid, const std::filesystem::path& dir);

// Nearest-neighbour resampling with the pixel-centre index rule:
//   src_row = floor((r + 0.5) * rows / target_rows)
// Selection only, never interpolation, so nodata propagates unchanged.
RasterGrid resample_nearest(const RasterGrid& grid, std::size_t target_rows,
                            std::size_t target_cols);

// Resamples every grid to the finest resolution present, then concatenates
// along the band axis in list order. A pixel is nodata in the output iff it
// is nodata in any source band.
RasterGrid stack_bands(const std::vector<RasterGrid>& grids);

// Exact sub-window of every band; geotransform origin shifted accordingly.
RasterGrid crop(const RasterGrid& grid, std::size_t row0, std::size_t col0,
                std::size_t rows, std::size_t cols);

}  // namespace geoclust
