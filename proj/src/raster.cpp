#include "geoclust/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace geoclust {

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

float f32_from_le(const std::uint8_t* p) {
    std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                      static_cast<std::uint32_t>(p[1]) << 8 |
                      static_cast<std::uint32_t>(p[2]) << 16 |
                      static_cast<std::uint32_t>(p[3]) << 24;
    return std::bit_cast<float>(u);
}

void f32_to_le(float v, std::uint8_t* p) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    p[0] = static_cast<std::uint8_t>(u & 0xff);
    p[1] = static_cast<std::uint8_t>((u >> 8) & 0xff);
    p[2] = static_cast<std::uint8_t>((u >> 16) & 0xff);
    p[3] = static_cast<std::uint8_t>((u >> 24) & 0xff);
}

}  // namespace

void RasterGrid::validate() const {
    if (rows < 1 || cols < 1 || bands < 1)
        throw DataError("raster dimensions must all be >= 1");
    if (values.size() != rows * cols * bands)
        throw DataError("raster value count does not match rows*cols*bands");
    for (double v : values) {
        if (!std::isfinite(v) && !is_nodata(v))
            throw NumericError("non-finite raster value outside nodata");
    }
    if (band_names && band_names->size() != bands)
        throw DataError("band_names length does not match band count");
}

RasterGrid read_raster(const std::filesystem::path& dir) {
    const auto header_path = dir / "header.json";
    const auto bands_path = dir / "bands.bin";
    if (!std::filesystem::exists(header_path))
        throw DataError("missing " + header_path.string());
    if (!std::filesystem::exists(bands_path))
        throw DataError("missing " + bands_path.string());

    nlohmann::json header;
    try {
        std::ifstream in(header_path);
        header = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed header.json: " + std::string(e.what()));
    }

    RasterGrid grid;
    try {
        grid.rows = header.at("rows").get<std::size_t>();
        grid.cols = header.at("cols").get<std::size_t>();
        grid.bands = header.at("bands").get<std::size_t>();
        if (header.at("dtype").get<std::string>() != "f32le")
            throw DataError("unsupported dtype, expected \"f32le\"");
        if (header.contains("nodata_value"))
            grid.nodata_value = header["nodata_value"].get<double>();
        if (header.contains("geotransform")) {
            auto gt = header["geotransform"].get<std::vector<double>>();
            if (gt.size() != 6) throw DataError("geotransform must have 6 entries");
            std::array<double, 6> a;
            std::copy(gt.begin(), gt.end(), a.begin());
            grid.geotransform = a;
        }
        if (header.contains("band_names"))
            grid.band_names = header["band_names"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed header.json: " + std::string(e.what()));
    }
    if (grid.rows < 1 || grid.cols < 1 || grid.bands < 1)
        throw DataError("header dimensions must all be >= 1");

    const auto bytes = read_file_bytes(bands_path);
    const std::size_t expected = grid.rows * grid.cols * grid.bands * 4;
    if (bytes.size() != expected)
        throw DataError("payload size mismatch: bands.bin has " +
                        std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(expected));

    grid.values.resize(grid.rows * grid.cols * grid.bands);
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        grid.values[i] = static_cast<double>(f32_from_le(bytes.data() + 4 * i));

    grid.validate();
    return grid;
}

void write_raster(const RasterGrid& grid, const std::filesystem::path& dir) {
    grid.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    nlohmann::json header;
    header["rows"] = grid.rows;
    header["cols"] = grid.cols;
    header["bands"] = grid.bands;
    header["dtype"] = "f32le";
    if (grid.band_names) header["band_names"] = *grid.band_names;
    if (grid.nodata_value) header["nodata_value"] = *grid.nodata_value;
    if (grid.geotransform)
        header["geotransform"] = std::vector<double>(grid.geotransform->begin(),
                                                     grid.geotransform->end());

    std::ofstream hout(dir / "header.json", std::ios::binary);
    if (!hout) throw DataError("cannot write " + (dir / "header.json").string());
    hout << header.dump(2) << "\n";
    hout.close();
    if (!hout) throw DataError("failed writing " + (dir / "header.json").string());

    std::vector<std::uint8_t> bytes(grid.values.size() * 4);
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        f32_to_le(static_cast<float>(grid.values[i]), bytes.data() + 4 * i);
    std::ofstream bout(dir / "bands.bin", std::ios::binary);
    if (!bout) throw DataError("cannot write " + (dir / "bands.bin").string());
    bout.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    bout.close();
    if (!bout) throw DataError("failed writing " + (dir / "bands.bin").string());
}

RasterGrid resample_nearest(const RasterGrid& grid, std::size_t target_rows,
                            std::size_t target_cols) {
    if (target_rows < 1 || target_cols < 1)
        throw DataError("resample targets must be >= 1");

    RasterGrid out;
    out.rows = target_rows;
    out.cols = target_cols;
    out.bands = grid.bands;
    out.nodata_value = grid.nodata_value;
    out.band_names = grid.band_names;
    out.values.resize(target_rows * target_cols * grid.bands);

    // Precompute the pixel-centre source indices once per axis.
    std::vector<std::size_t> src_row(target_rows), src_col(target_cols);
    for (std::size_t r = 0; r < target_rows; ++r) {
        auto s = static_cast<std::size_t>(std::floor(
            (static_cast<double>(r) + 0.5) * static_cast<double>(grid.rows) /
            static_cast<double>(target_rows)));
        src_row[r] = s >= grid.rows ? grid.rows - 1 : s;
    }
    for (std::size_t c = 0; c < target_cols; ++c) {
        auto s = static_cast<std::size_t>(std::floor(
            (static_cast<double>(c) + 0.5) * static_cast<double>(grid.cols) /
            static_cast<double>(target_cols)));
        src_col[c] = s >= grid.cols ? grid.cols - 1 : s;
    }

    for (std::size_t b = 0; b < grid.bands; ++b)
        for (std::size_t r = 0; r < target_rows; ++r)
            for (std::size_t c = 0; c < target_cols; ++c)
                out.value(r, c, b) = grid.value(src_row[r], src_col[c], b);

    if (grid.geotransform) {
        auto gt = *grid.geotransform;
        double col_ratio = static_cast<double>(grid.cols) / static_cast<double>(target_cols);
        double row_ratio = static_cast<double>(grid.rows) / static_cast<double>(target_rows);
        gt[1] *= col_ratio;
        gt[2] *= row_ratio;
        gt[4] *= col_ratio;
        gt[5] *= row_ratio;
        out.geotransform = gt;
    }
    return out;
}

RasterGrid stack_bands(const std::vector<RasterGrid>& grids) {
    if (grids.empty()) throw DataError("stack_bands: empty grid list");

    std::optional<std::pair<double, double>> origin;
    for (const auto& g : grids) {
        if (!g.geotransform) continue;
        std::pair<double, double> o{(*g.geotransform)[0], (*g.geotransform)[3]};
        if (!origin) {
            origin = o;
        } else if (origin->first != o.first || origin->second != o.second) {
            throw DataError("stack_bands: incompatible geotransform origins");
        }
    }

    std::size_t target_rows = 0, target_cols = 0;
    for (const auto& g : grids) {
        target_rows = std::max(target_rows, g.rows);
        target_cols = std::max(target_cols, g.cols);
    }

    std::vector<RasterGrid> resampled;
    resampled.reserve(grids.size());
    for (const auto& g : grids) {
        if (g.rows == target_rows && g.cols == target_cols)
            resampled.push_back(g);
        else
            resampled.push_back(resample_nearest(g, target_rows, target_cols));
    }

    RasterGrid out;
    out.rows = target_rows;
    out.cols = target_cols;
    out.bands = 0;
    for (const auto& g : resampled) out.bands += g.bands;
    out.values.resize(target_rows * target_cols * out.bands);

    for (const auto& g : resampled) {
        if (g.nodata_value) {
            out.nodata_value = *g.nodata_value;
            break;
        }
    }
    for (const auto& g : resampled) {
        if (g.geotransform) {
            out.geotransform = g.geotransform;
            break;
        }
    }
    bool all_named = true;
    for (const auto& g : resampled) all_named = all_named && g.band_names.has_value();
    if (all_named) {
        std::vector<std::string> names;
        for (const auto& g : resampled)
            names.insert(names.end(), g.band_names->begin(), g.band_names->end());
        out.band_names = std::move(names);
    }

    std::size_t band_off = 0;
    for (const auto& g : resampled) {
        for (std::size_t b = 0; b < g.bands; ++b)
            std::memcpy(out.values.data() + (band_off + b) * out.band_stride(),
                        g.values.data() + b * g.band_stride(),
                        g.band_stride() * sizeof(double));
        band_off += g.bands;
    }

    // Mark a pixel invalid across all output bands when any source band was
    // nodata there, so downstream consumers see a single consistent mask.
    if (out.nodata_value) {
        const double nd = *out.nodata_value;
        for (std::size_t r = 0; r < out.rows; ++r) {
            for (std::size_t c = 0; c < out.cols; ++c) {
                bool invalid = false;
                for (const auto& g : resampled) {
                    if (g.nodata_value) {
                        for (std::size_t b = 0; b < g.bands && !invalid; ++b)
                            invalid = g.value(r, c, b) == *g.nodata_value;
                    }
                    if (invalid) break;
                }
                if (invalid)
                    for (std::size_t b = 0; b < out.bands; ++b)
                        out.value(r, c, b) = nd;
            }
        }
    }
    return out;
}

RasterGrid crop(const RasterGrid& grid, std::size_t row0, std::size_t col0,
                std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1) throw DataError("crop window must be >= 1x1");
    if (row0 + rows > grid.rows || col0 + cols > grid.cols)
        throw DataError("crop window out of bounds");

    RasterGrid out;
    out.rows = rows;
    out.cols = cols;
    out.bands = grid.bands;
    out.nodata_value = grid.nodata_value;
    out.band_names = grid.band_names;
    out.values.resize(rows * cols * grid.bands);
    for (std::size_t b = 0; b < grid.bands; ++b)
        for (std::size_t r = 0; r < rows; ++r)
            std::memcpy(out.values.data() + b * out.band_stride() + r * cols,
                        grid.values.data() + b * grid.band_stride() +
                            (row0 + r) * grid.cols + col0,
                        cols * sizeof(double));

    if (grid.geotransform) {
        auto gt = *grid.geotransform;
        double c0 = static_cast<double>(col0), r0 = static_cast<double>(row0);
        gt[0] = gt[0] + c0 * gt[1] + r0 * gt[2];
        gt[3] = gt[3] + c0 * gt[4] + r0 * gt[5];
        out.geotransform = gt;
    }
    return out;
}

}  // namespace geoclust
