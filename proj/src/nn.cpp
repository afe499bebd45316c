#include "geoclust/nn.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::identity: return "identity";
    }
    throw ConfigError("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation name: " + name);
}

void DenseNetwork::validate() const {
    if (layers.empty()) throw ConfigError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weights.rows == 0 || l.weights.cols == 0)
            throw ConfigError("layer has zero dimension");
        if (l.biases.size() != l.out_dim())
            throw ConfigError("bias length does not match out_dim");
        if (i > 0 && layers[i - 1].out_dim() != l.in_dim())
            throw ConfigError("layer dimensions do not chain");
        for (double w : l.weights.data)
            if (!std::isfinite(w)) throw NumericError("non-finite weight");
        for (double b : l.biases)
            if (!std::isfinite(b)) throw NumericError("non-finite bias");
    }
}

namespace {

inline double activate(double x, Activation a) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::identity: return x;
    }
    return x;
}

// Derivative expressed through the post-activation value y = act(x).
inline double activate_grad_from_output(double y, Activation a) {
    switch (a) {
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

std::vector<Matrix> forward(const DenseNetwork& net, const Matrix& batch) {
    if (batch.cols != net.in_dim())
        throw DataError("batch width does not match network input dim");

    std::vector<Matrix> activations;
    activations.reserve(net.layers.size() + 1);
    activations.push_back(batch);
    for (const auto& layer : net.layers) {
        const Matrix& in = activations.back();
        Matrix out(in.rows, layer.out_dim());
        for (std::size_t i = 0; i < in.rows; ++i) {
            const double* x = in.row(i);
            double* y = out.row(i);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                const double* w = layer.weights.row(o);
                double acc = layer.biases[o];
                for (std::size_t k = 0; k < layer.in_dim(); ++k) acc += w[k] * x[k];
                y[o] = activate(acc, layer.activation);
            }
        }
        activations.push_back(std::move(out));
    }
    return activations;
}

double mse_loss(const Matrix& pred, const Matrix& target) {
    if (!pred.same_shape(target)) throw DataError("mse_loss shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        double d = pred.data[i] - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

Gradients backward(const DenseNetwork& net, const std::vector<Matrix>& activations,
                   const Matrix& target) {
    if (activations.size() != net.layers.size() + 1)
        throw DataError("activation chain does not match network depth");
    const Matrix& pred = activations.back();
    if (!pred.same_shape(target)) throw DataError("backward target shape mismatch");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (activations[l].cols != net.layers[l].in_dim() ||
            activations[l + 1].cols != net.layers[l].out_dim() ||
            activations[l].rows != pred.rows)
            throw DataError("stale or mismatched activations");
    }

    const std::size_t batch = pred.rows;
    const double scale = 2.0 / static_cast<double>(pred.data.size());

    Gradients grads;
    grads.weights.resize(net.layers.size());
    grads.biases.resize(net.layers.size());

    // delta starts as dL/d(output activation), then walks backwards.
    Matrix delta(batch, pred.cols);
    for (std::size_t i = 0; i < pred.data.size(); ++i)
        delta.data[i] = scale * (pred.data[i] - target.data[i]);

    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const DenseLayer& layer = net.layers[li];
        const Matrix& out_act = activations[li + 1];
        const Matrix& in_act = activations[li];

        // through the activation function
        for (std::size_t i = 0; i < delta.data.size(); ++i)
            delta.data[i] *= activate_grad_from_output(out_act.data[i], layer.activation);

        Matrix dw(layer.out_dim(), layer.in_dim());
        std::vector<double> db(layer.out_dim(), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* d = delta.row(b);
            const double* x = in_act.row(b);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                double dv = d[o];
                db[o] += dv;
                double* dwr = dw.row(o);
                for (std::size_t k = 0; k < layer.in_dim(); ++k) dwr[k] += dv * x[k];
            }
        }

        if (li > 0) {
            Matrix prev(batch, layer.in_dim());
            for (std::size_t b = 0; b < batch; ++b) {
                const double* d = delta.row(b);
                double* p = prev.row(b);
                for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                    const double* w = layer.weights.row(o);
                    double dv = d[o];
                    for (std::size_t k = 0; k < layer.in_dim(); ++k) p[k] += dv * w[k];
                }
            }
            delta = std::move(prev);
        }

        grads.weights[li] = std::move(dw);
        grads.biases[li] = std::move(db);
    }
    return grads;
}

AdamState AdamState::for_network(const DenseNetwork& net, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (const auto& layer : net.layers) {
        s.m_weights.emplace_back(layer.out_dim(), layer.in_dim());
        s.v_weights.emplace_back(layer.out_dim(), layer.in_dim());
        s.m_biases.emplace_back(layer.out_dim(), 0.0);
        s.v_biases.emplace_back(layer.out_dim(), 0.0);
    }
    return s;
}

namespace {

void adam_update(double* params, double* m, double* v, const double* g,
                 std::size_t n, const AdamState& s, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i])) throw NumericError("non-finite gradient in adam_step");
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        params[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
    }
}

}  // namespace

void adam_step(DenseNetwork& net, const Gradients& grads, AdamState& state) {
    if (grads.weights.size() != net.layers.size())
        throw DataError("gradient shape does not match network");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& layer = net.layers[li];
        if (!grads.weights[li].same_shape(layer.weights) ||
            grads.biases[li].size() != layer.biases.size())
            throw DataError("gradient shape does not match layer " + std::to_string(li));
        adam_update(layer.weights.data.data(), state.m_weights[li].data.data(),
                    state.v_weights[li].data.data(), grads.weights[li].data.data(),
                    layer.weights.data.size(), state, bc1, bc2);
        adam_update(layer.biases.data(), state.m_biases[li].data(),
                    state.v_biases[li].data(), grads.biases[li].data(),
                    layer.biases.size(), state, bc1, bc2);
    }
}

DenseNetwork init_autoencoder(const std::vector<std::size_t>& layer_dims,
                              std::uint64_t seed) {
    if (layer_dims.size() < 2) throw ConfigError("need at least input and output dims");
    for (std::size_t d : layer_dims)
        if (d == 0) throw ConfigError("zero layer dimension");

    SplitMix64 rng(derive_seed(seed, "init"));
    DenseNetwork net;
    for (std::size_t li = 0; li + 1 < layer_dims.size(); ++li) {
        DenseLayer layer;
        std::size_t in = layer_dims[li], out = layer_dims[li + 1];
        layer.weights = Matrix(out, in);
        double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
        layer.biases.assign(out, 0.0);
        bool last = li + 2 == layer_dims.size();
        layer.activation = last ? Activation::sigmoid : Activation::relu;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::pair<DenseNetwork, std::vector<double>> train_autoencoder(
    const Matrix& data, const std::vector<std::size_t>& layer_dims,
    const TrainConfig& config) {
    if (data.rows == 0) throw DataError("cannot train on empty matrix");
    if (layer_dims.size() < 2 || layer_dims.front() != data.cols ||
        layer_dims.back() != data.cols)
        throw ConfigError("layer dims must start and end with the band count");
    if (config.epochs < 1 || config.batch_size < 1)
        throw ConfigError("epochs and batch_size must be >= 1");
    for (double v : data.data) {
        if (!(v >= 0.0 && v <= 1.0))
            throw DataError("autoencoder input must be scaled to [0,1]");
    }

    DenseNetwork net = init_autoencoder(layer_dims, config.seed);
    AdamState adam = AdamState::for_network(net, config.learning_rate);
    SplitMix64 shuffle_rng(derive_seed(config.seed, "shuffle"));

    const std::size_t n = data.rows;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> epoch_losses;
    epoch_losses.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;  // element-weighted so partial batches count fairly
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            std::size_t end = std::min(start + config.batch_size, n);
            Matrix batch(end - start, data.cols);
            for (std::size_t i = start; i < end; ++i) {
                const double* src = data.row(order[i]);
                std::copy(src, src + data.cols, batch.row(i - start));
            }
            auto activations = forward(net, batch);
            loss_sum += mse_loss(activations.back(), batch) *
                        static_cast<double>(batch.data.size());
            Gradients grads = backward(net, activations, batch);
            adam_step(net, grads, adam);
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(n * data.cols));
    }
    return {std::move(net), std::move(epoch_losses)};
}

std::pair<DenseNetwork, std::vector<double>> train_autoencoder(
    const PixelMatrix& matrix, const std::vector<std::size_t>& layer_dims,
    const TrainConfig& config) {
    return train_autoencoder(matrix.values, layer_dims, config);
}

void save_network(const DenseNetwork& net, const std::filesystem::path& dir,
                  const TrainConfig& config) {
    net.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    std::vector<std::size_t> dims{net.in_dim()};
    std::vector<std::string> acts;
    for (const auto& l : net.layers) {
        dims.push_back(l.out_dim());
        acts.push_back(activation_name(l.activation));
    }
    nlohmann::json j;
    j["layer_dims"] = dims;
    j["activations"] = acts;
    j["seed"] = config.seed;
    j["config"] = {{"epochs", config.epochs},
                   {"batch_size", config.batch_size},
                   {"learning_rate", config.learning_rate}};
    std::ofstream jout(dir / "model.json", std::ios::binary);
    if (!jout) throw DataError("cannot write " + (dir / "model.json").string());
    jout << j.dump(2) << "\n";

    std::vector<double> flat;
    for (const auto& l : net.layers)
        flat.insert(flat.end(), l.weights.data.begin(), l.weights.data.end());
    for (const auto& l : net.layers)
        flat.insert(flat.end(), l.biases.begin(), l.biases.end());

    std::vector<std::uint8_t> bytes(flat.size() * 8);
    for (std::size_t i = 0; i < flat.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(flat[i]);
        for (int k = 0; k < 8; ++k)
            bytes[8 * i + k] = static_cast<std::uint8_t>((u >> (8 * k)) & 0xff);
    }
    std::ofstream bout(dir / "weights.bin", std::ios::binary);
    if (!bout) throw DataError("cannot write " + (dir / "weights.bin").string());
    bout.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

DenseNetwork load_network(const std::filesystem::path& dir) {
    std::ifstream jin(dir / "model.json");
    if (!jin) throw DataError("missing " + (dir / "model.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jin);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed model.json: " + std::string(e.what()));
    }
    auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    auto acts = j.at("activations").get<std::vector<std::string>>();
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw DataError("model.json dims/activations mismatch");

    std::ifstream bin(dir / "weights.bin", std::ios::binary);
    if (!bin) throw DataError("missing " + (dir / "weights.bin").string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)),
                                    std::istreambuf_iterator<char>());
    std::size_t n_params = 0;
    for (std::size_t li = 0; li + 1 < dims.size(); ++li)
        n_params += dims[li] * dims[li + 1] + dims[li + 1];
    if (bytes.size() != n_params * 8)
        throw DataError("weights.bin size mismatch");

    std::vector<double> flat(n_params);
    for (std::size_t i = 0; i < n_params; ++i) {
        std::uint64_t u = 0;
        for (int k = 0; k < 8; ++k)
            u |= static_cast<std::uint64_t>(bytes[8 * i + k]) << (8 * k);
        flat[i] = std::bit_cast<double>(u);
    }

    DenseNetwork net;
    std::size_t off = 0;
    for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
        DenseLayer layer;
        layer.weights = Matrix(dims[li + 1], dims[li]);
        std::copy(flat.begin() + off, flat.begin() + off + layer.weights.data.size(),
                  layer.weights.data.begin());
        off += layer.weights.data.size();
        layer.activation = activation_from_name(acts[li]);
        net.layers.push_back(std::move(layer));
    }
    for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
        auto& layer = net.layers[li];
        layer.biases.assign(flat.begin() + off, flat.begin() + off + dims[li + 1]);
        off += dims[li + 1];
    }
    net.validate();
    return net;
}

}  // namespace geoclust
