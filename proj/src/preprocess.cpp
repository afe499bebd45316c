#include "geoclust/preprocess.hpp"

#include <cmath>
#include <limits>

namespace geoclust {

PixelMatrix build_pixel_matrix(const RasterGrid& grid) {
    grid.validate();

    std::size_t n_valid = 0;
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c)
            if (!grid.pixel_is_nodata(r, c)) ++n_valid;
    if (n_valid == 0) throw DataError("grid has no valid (non-nodata) pixels");

    PixelMatrix pm;
    pm.values = Matrix(n_valid, grid.bands);
    pm.index_map.reserve(n_valid);
    std::size_t i = 0;
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            if (grid.pixel_is_nodata(r, c)) continue;
            for (std::size_t b = 0; b < grid.bands; ++b)
                pm.values.at(i, b) = grid.value(r, c, b);
            pm.index_map.emplace_back(static_cast<std::uint32_t>(r),
                                      static_cast<std::uint32_t>(c));
            ++i;
        }
    }
    return pm;
}

ScalingParams fit_minmax(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) throw DataError("cannot fit scaling on empty matrix");
    ScalingParams p;
    p.mins.assign(m.cols, std::numeric_limits<double>::infinity());
    p.maxs.assign(m.cols, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            double v = row[j];
            if (!std::isfinite(v)) throw NumericError("non-finite value in scaling input");
            if (v < p.mins[j]) p.mins[j] = v;
            if (v > p.maxs[j]) p.maxs[j] = v;
        }
    }
    return p;
}

void apply_minmax(Matrix& m, const ScalingParams& params) {
    if (m.cols != params.n_bands())
        throw DataError("scaling params band count mismatch");
    for (std::size_t j = 0; j < m.cols; ++j) {
        double lo = params.mins[j];
        double range = params.maxs[j] - lo;
        for (std::size_t i = 0; i < m.rows; ++i) {
            double& v = m.at(i, j);
            v = range > 0.0 ? (v - lo) / range : 0.0;
        }
    }
}

void invert_minmax(Matrix& m, const ScalingParams& params) {
    if (m.cols != params.n_bands())
        throw DataError("scaling params band count mismatch");
    for (std::size_t j = 0; j < m.cols; ++j) {
        double lo = params.mins[j];
        double range = params.maxs[j] - lo;
        for (std::size_t i = 0; i < m.rows; ++i) {
            double& v = m.at(i, j);
            v = range > 0.0 ? v * range + lo : lo;
        }
    }
}

std::pair<PixelMatrix, ScalingParams> minmax_scale(const PixelMatrix& matrix) {
    if (matrix.n_pixels() == 0) throw DataError("cannot scale empty pixel matrix");
    ScalingParams params = fit_minmax(matrix.values);
    PixelMatrix scaled = matrix;
    apply_minmax(scaled.values, params);
    return {std::move(scaled), std::move(params)};
}

LabelGrid labels_to_grid(const std::vector<std::uint32_t>& labels,
                         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& index_map,
                         std::size_t rows, std::size_t cols) {
    if (labels.size() != index_map.size())
        throw DataError("labels and index_map length mismatch");

    LabelGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.labels.assign(rows * cols, LabelGrid::kNoData);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [r, c] = index_map[i];
        if (r >= rows || c >= cols)
            throw DataError("index_map entry out of grid bounds");
        if (labels[i] >= LabelGrid::kNoData)
            throw DataError("label value collides with nodata sentinel");
        grid.at(r, c) = static_cast<std::uint16_t>(labels[i]);
    }
    return grid;
}

}  // namespace geoclust
