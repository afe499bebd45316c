#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geoclust/common.hpp"
#include "geoclust/nn.hpp"
#include "geoclust/preprocess.hpp"

namespace geoclust {

enum class Producer { pca, canonical_ae, stacked_ae };

std::string producer_name(Producer p);
Producer producer_from_name(const std::string& name);

// Reduced feature table handed to clustering; width m never exceeds the
// input band count.
struct LatentMatrix {
    Matrix values;  // n_pixels x m
    Producer producer = Producer::pca;

    std::size_t latent_dim() const { return values.cols; }
};

struct PCAModel {
    std::vector<double> means;            // n_bands
    Matrix components;                    // m x n_bands, orthonormal rows
    std::vector<double> explained_variance_ratio;  // m, non-increasing

    std::size_t latent_dim() const { return components.rows; }
    std::size_t n_bands() const { return components.cols; }
};

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // row i = eigenvector for values[i]
};

// Cyclic Jacobi eigensolver for small symmetric matrices; rotations are
// applied until the off-diagonal norm falls below tol relative to the
// Frobenius norm. Exact enough for covariance matrices of <= ~16 bands.
SymmetricEigen jacobi_eigen_symmetric(Matrix a, double tol = 1e-12);

// Eigendecomposition of the sample covariance (divisor n-1). m is the
// smallest count whose cumulative explained variance ratio reaches
// variance_target; component signs are fixed so each row's
// largest-magnitude entry is positive.
PCAModel pca_fit(const PixelMatrix& matrix, double variance_target = 0.90);

LatentMatrix pca_transform(const PCAModel& model, const PixelMatrix& matrix);

// latent @ components + means; exact inverse when m == n_bands.
Matrix pca_inverse_transform(const PCAModel& model, const Matrix& latent);

struct CanonicalResult {
    LatentMatrix latent;
    DenseNetwork network;        // n -> latent_dim (relu) -> n (sigmoid)
    std::vector<double> losses;  // per epoch
};

// Single-hidden-layer autoencoder; the latent features are the trained
// hidden-layer activations over all pixels.
CanonicalResult canonical_reduce(const PixelMatrix& matrix, std::size_t latent_dim,
                                 const TrainConfig& config);

struct StackedResult {
    LatentMatrix latent;
    DenseNetwork stage1;          // n -> h1 -> n
    DenseNetwork stage2;          // h1 -> h2 -> h1
    ScalingParams hidden_scaling; // min-max applied to stage-1 hidden output
    std::vector<double> stage1_losses;
    std::vector<double> stage2_losses;
};

// Greedy layer-wise stack of two autoencoders. Stage 2 trains on stage 1's
// hidden activations, min-max rescaled to [0,1] because relu outputs are
// unbounded and the sigmoid reconstruction needs a bounded target. There is
// no end-to-end fine-tuning pass.
StackedResult stacked_reduce(const PixelMatrix& matrix, std::size_t h1,
                             std::size_t h2, const TrainConfig& config);

// Reconstructs input spectra back through both decoders (for loss audits).
Matrix stacked_reconstruct(const StackedResult& model, const Matrix& data);

// pca.json (means, ratios, m) + components.bin (m x n_bands, f64le).
void save_pca(const PCAModel& model, const std::filesystem::path& dir);
PCAModel load_pca(const std::filesystem::path& dir);

}  // namespace geoclust
