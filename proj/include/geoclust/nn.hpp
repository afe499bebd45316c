#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "geoclust/common.hpp"
#include "geoclust/preprocess.hpp"

namespace geoclust {

enum class Activation { relu, sigmoid, identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
    Matrix weights;               // out_dim x in_dim, row-major
    std::vector<double> biases;   // out_dim
    Activation activation = Activation::identity;

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }
};

struct DenseNetwork {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }

    // Checks dimension chaining and parameter finiteness.
    void validate() const;
};

// Gradients shaped exactly like the network parameters.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
    std::uint64_t t = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_network(const DenseNetwork& net, double learning_rate = 1e-3);
};

struct TrainConfig {
    std::size_t epochs = 10;       // the canonical setup trains for ten epochs
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

// Forward pass over a batch; returns the full activation chain,
// activations[0] == batch and activations[i] == output of layer i-1.
// The chain is what backward() and latent extraction both consume.
std::vector<Matrix> forward(const DenseNetwork& net, const Matrix& batch);

// Mean over all b*d elements of the squared difference.
double mse_loss(const Matrix& pred, const Matrix& target);

// Exact analytic gradients of mse_loss w.r.t. every weight and bias, given
// the activation chain produced by forward() on this network.
Gradients backward(const DenseNetwork& net, const std::vector<Matrix>& activations,
                   const Matrix& target);

// Standard Adam update with bias correction; increments state.t.
void adam_step(DenseNetwork& net, const Gradients& grads, AdamState& state);

// Glorot-uniform init (+/- sqrt(6/(fan_in+fan_out))), biases zero, relu on
// hidden layers and sigmoid on the output layer.
DenseNetwork init_autoencoder(const std::vector<std::size_t>& layer_dims,
                              std::uint64_t seed);

// Mini-batch Adam on MSE reconstruction for exactly config.epochs epochs.
// Per-epoch shuffling comes from the seeded generator and the last partial
// batch is kept. Returns the trained network and per-epoch mean losses.
std::pair<DenseNetwork, std::vector<double>> train_autoencoder(
    const Matrix& data, const std::vector<std::size_t>& layer_dims,
    const TrainConfig& config);

std::pair<DenseNetwork, std::vector<double>> train_autoencoder(
    const PixelMatrix& matrix, const std::vector<std::size_t>& layer_dims,
    const TrainConfig& config);

// Directory with model.json + weights.bin (all weights then all biases,
// layer order, f64 little-endian, row-major).
void save_network(const DenseNetwork& net, const std::filesystem::path& dir,
                  const TrainConfig& config);
DenseNetwork load_network(const std::filesystem::path& dir);

}  // namespace geoclust
