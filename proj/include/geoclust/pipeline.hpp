#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"

#include "geoclust/common.hpp"
#include "geoclust/labels.hpp"
#include "geoclust/preprocess.hpp"
#include "geoclust/dimred.hpp"

namespace geoclust {

// One pipeline run: ingest -> scale -> reduce -> (elbow) -> k-means ->
// label grid -> optional majority filter -> render -> metrics, with every
// intermediate artifact persisted under `out`.
struct PipelineConfig {
    std::filesystem::path input;
    std::string method = "pca";  // pca | ae | sae
    double variance_target = 0.90;
    std::optional<std::size_t> latent_dim;  // ae width; defaults to the PCA m
    std::optional<std::pair<std::size_t, std::size_t>> hidden_dims;  // sae (h1,h2)
    std::size_t epochs = 10;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::optional<std::size_t> fixed_k;  // empty -> auto via elbow + kneedle
    std::size_t k_min = 2;
    std::size_t k_max = 12;
    std::size_t filter_kernel = 7;  // 0 -> filtering off
    std::optional<std::filesystem::path> truth;  // ground-truth CSV
    std::filesystem::path out;

    void validate() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

struct PipelineResult {
    std::size_t chosen_k = 0;
    std::size_t latent_dim = 0;
    std::filesystem::path out;
};

PipelineResult run_pipeline(const PipelineConfig& config);

// Deterministic palette of any size: the 12 fixed colours, then
// golden-angle hues.
Palette make_palette(std::size_t n);

// Latent features written back onto the grid as an f32le raster, one band
// per latent component; pixels outside index_map get nodata.
RasterGrid latent_to_raster(const LatentMatrix& latent,
                            const std::vector<std::pair<std::uint32_t, std::uint32_t>>& index_map,
                            std::size_t rows, std::size_t cols);

// Inverse of latent_to_raster for staged runs on persisted artifacts; the
// producer tag is recovered from the band name prefix.
std::pair<LatentMatrix, PixelMatrix> latent_from_raster(const RasterGrid& grid);

}  // namespace geoclust
