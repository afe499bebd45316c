#include "geoclust/postprocess.hpp"

#include <fstream>

#include "geoclust/common.hpp"
#include "geoclust/parallel.hpp"
#include "geoclust/png.hpp"

namespace geoclust {

const Palette& default_palette() {
    static const Palette palette = {
        {230, 25, 75},   // red
        {60, 180, 75},   // green
        {255, 225, 25},  // yellow
        {0, 130, 200},   // blue
        {245, 130, 48},  // orange
        {145, 30, 180},  // purple
        {70, 240, 240},  // cyan
        {240, 50, 230},  // magenta
        {210, 245, 60},  // lime
        {250, 190, 212}, // pink
        {0, 128, 128},   // teal
        {154, 99, 36},   // brown
    };
    return palette;
}

LabelGrid majority_filter(const LabelGrid& grid, std::size_t kernel) {
    grid.validate();
    if (kernel % 2 == 0 || kernel < 3)
        throw ConfigError("filter kernel must be odd and >= 3");
    const std::size_t half = kernel / 2;
    const std::size_t rows = grid.rows, cols = grid.cols;

    LabelGrid out = grid;
    parallel_chunks(rows, 64, [&](std::size_t, std::size_t r_begin, std::size_t r_end) {
        std::vector<std::size_t> counts;
        for (std::size_t r = r_begin; r < r_end; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                std::uint16_t center = grid.at(r, c);
                if (center == LabelGrid::kNoData) continue;

                std::size_t r0 = r >= half ? r - half : 0;
                std::size_t r1 = std::min(r + half, rows - 1);
                std::size_t c0 = c >= half ? c - half : 0;
                std::size_t c1 = std::min(c + half, cols - 1);

                counts.clear();
                for (std::size_t rr = r0; rr <= r1; ++rr) {
                    for (std::size_t cc = c0; cc <= c1; ++cc) {
                        std::uint16_t l = grid.at(rr, cc);
                        if (l == LabelGrid::kNoData) continue;
                        if (l >= counts.size()) counts.resize(l + 1, 0);
                        counts[l] += 1;
                    }
                }

                std::size_t best = 0;
                for (std::size_t l = 0; l < counts.size(); ++l)
                    if (counts[l] > best) best = counts[l];
                // lowest label holding the top count; keep the centre if it
                // is part of the tie
                std::uint16_t winner = center;
                if (counts[center] != best) {
                    for (std::size_t l = 0; l < counts.size(); ++l) {
                        if (counts[l] == best) {
                            winner = static_cast<std::uint16_t>(l);
                            break;
                        }
                    }
                }
                out.at(r, c) = winner;
            }
        }
    });
    return out;
}

std::vector<std::uint8_t> render_map(const LabelGrid& grid,
                                     const std::optional<Palette>& palette) {
    grid.validate();
    const Palette& colors = palette    ? *palette
                            : grid.palette ? *grid.palette
                                           : default_palette();
    if (colors.empty() || colors.size() > 255)
        throw DataError("palette must have 1..255 entries");

    for (std::uint16_t l : grid.labels)
        if (l != LabelGrid::kNoData && l >= colors.size())
            throw DataError("label " + std::to_string(l) + " exceeds palette size " +
                            std::to_string(colors.size()));

    // palette entries keep their label index; one extra black slot renders
    // the sentinel
    Palette full = colors;
    full.push_back({0, 0, 0});
    const std::uint8_t sentinel_index = static_cast<std::uint8_t>(colors.size());

    std::vector<std::uint8_t> indices(grid.rows * grid.cols);
    for (std::size_t i = 0; i < grid.labels.size(); ++i)
        indices[i] = grid.labels[i] == LabelGrid::kNoData
                         ? sentinel_index
                         : static_cast<std::uint8_t>(grid.labels[i]);

    return encode_indexed_png(grid.cols, grid.rows, indices, full);
}

void write_bytes(const std::vector<std::uint8_t>& bytes,
                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace geoclust
