#pragma once

#include <cstdint>

#include "geoclust/common.hpp"
#include "geoclust/labels.hpp"
#include "geoclust/metrics.hpp"
#include "geoclust/raster.hpp"

namespace geoclust {

// Seeded synthetic multiband scene: Voronoi regions from random sites
// partition the grid into class units; each pixel is its class mean
// spectrum plus iid Gaussian noise, clamped to [0,1].
struct SyntheticSceneSpec {
    std::size_t rows = 128;
    std::size_t cols = 128;
    std::size_t n_bands = 8;
    std::size_t n_classes = 6;
    Matrix class_spectra;        // n_classes x n_bands in [0,1]
    double noise_sigma = 0.02;
    std::size_t voronoi_sites = 0;  // 0 -> 4 * n_classes
    std::uint64_t seed = 0;
};

struct SyntheticScene {
    RasterGrid scene;
    LabelGrid truth;
};

// Seeded spectra with a minimum pairwise separation, for when the caller
// does not supply its own.
Matrix default_class_spectra(std::size_t n_classes, std::size_t n_bands,
                             std::uint64_t seed);

SyntheticScene generate_synthetic(const SyntheticSceneSpec& spec);

// Uniformly sampled truth points over the truth grid (ground-truth CSV
// analogue of field samples).
GroundTruthSet sample_ground_truth(const LabelGrid& truth, std::size_t n_points,
                                   std::uint64_t seed);

}  // namespace geoclust
