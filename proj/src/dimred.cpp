#include "geoclust/dimred.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

std::string producer_name(Producer p) {
    switch (p) {
        case Producer::pca: return "pca";
        case Producer::canonical_ae: return "canonical_ae";
        case Producer::stacked_ae: return "stacked_ae";
    }
    throw ConfigError("unknown producer");
}

Producer producer_from_name(const std::string& name) {
    if (name == "pca") return Producer::pca;
    if (name == "canonical_ae") return Producer::canonical_ae;
    if (name == "stacked_ae") return Producer::stacked_ae;
    throw ConfigError("unknown producer name: " + name);
}

SymmetricEigen jacobi_eigen_symmetric(Matrix a, double tol) {
    if (a.rows != a.cols || a.rows == 0)
        throw DataError("jacobi solver needs a square matrix");
    const std::size_t n = a.rows;

    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    double fro = 0.0;
    for (double x : a.data) fro += x * x;
    fro = std::sqrt(fro);
    const double stop = tol * (fro > 0.0 ? fro : 1.0);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a.at(p, q) * a.at(p, q);
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (apq == 0.0) continue;
                double tau = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a.at(i, i) > a.at(j, j);
    });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a.at(order[i], order[i]);
        for (std::size_t k = 0; k < n; ++k) out.vectors.at(i, k) = v.at(k, order[i]);
    }
    return out;
}

PCAModel pca_fit(const PixelMatrix& matrix, double variance_target) {
    const std::size_t n = matrix.n_pixels();
    const std::size_t d = matrix.n_bands();
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        throw ConfigError("variance_target must be in (0,1]");
    if (n <= d) throw DataError("pca_fit needs more pixels than bands");

    std::vector<double> means(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = matrix.values.row(i);
        for (std::size_t j = 0; j < d; ++j) means[j] += row[j];
    }
    for (double& m : means) m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = matrix.values.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            double da = row[a] - means[a];
            for (std::size_t b = a; b < d; ++b)
                cov.at(a, b) += da * (row[b] - means[b]);
        }
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov.at(a, b) /= static_cast<double>(n - 1);
            cov.at(b, a) = cov.at(a, b);
        }

    double total = 0.0;
    for (std::size_t a = 0; a < d; ++a) total += cov.at(a, a);
    if (!(total > 0.0)) throw NumericError("zero total variance: all-constant data");

    SymmetricEigen eig = jacobi_eigen_symmetric(cov);

    std::vector<double> ratios(d);
    for (std::size_t i = 0; i < d; ++i)
        ratios[i] = std::max(eig.values[i], 0.0) / total;

    // smallest m whose cumulative ratio reaches the target; the tiny relative
    // slack keeps variance_target=1.0 reachable on rank-deficient data
    std::size_t m = d;
    double cum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        cum += ratios[i];
        if (cum >= variance_target * (1.0 - 1e-12)) {
            m = i + 1;
            break;
        }
    }

    PCAModel model;
    model.means = std::move(means);
    model.components = Matrix(m, d);
    model.explained_variance_ratio.assign(ratios.begin(), ratios.begin() + m);
    for (std::size_t i = 0; i < m; ++i) {
        // sign convention: largest-magnitude entry positive
        std::size_t arg = 0;
        for (std::size_t k = 1; k < d; ++k)
            if (std::abs(eig.vectors.at(i, k)) > std::abs(eig.vectors.at(i, arg)))
                arg = k;
        double sign = eig.vectors.at(i, arg) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < d; ++k)
            model.components.at(i, k) = sign * eig.vectors.at(i, k);
    }
    return model;
}

LatentMatrix pca_transform(const PCAModel& model, const PixelMatrix& matrix) {
    if (matrix.n_bands() != model.n_bands())
        throw DataError("pca_transform band count mismatch");
    const std::size_t n = matrix.n_pixels();
    const std::size_t m = model.latent_dim();

    LatentMatrix latent;
    latent.producer = Producer::pca;
    latent.values = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = matrix.values.row(i);
        double* z = latent.values.row(i);
        for (std::size_t c = 0; c < m; ++c) {
            const double* comp = model.components.row(c);
            double acc = 0.0;
            for (std::size_t k = 0; k < model.n_bands(); ++k)
                acc += comp[k] * (row[k] - model.means[k]);
            z[c] = acc;
        }
    }
    return latent;
}

Matrix pca_inverse_transform(const PCAModel& model, const Matrix& latent) {
    if (latent.cols != model.latent_dim())
        throw DataError("latent width does not match model");
    Matrix out(latent.rows, model.n_bands());
    for (std::size_t i = 0; i < latent.rows; ++i) {
        const double* z = latent.row(i);
        double* x = out.row(i);
        for (std::size_t k = 0; k < model.n_bands(); ++k) x[k] = model.means[k];
        for (std::size_t c = 0; c < model.latent_dim(); ++c) {
            const double* comp = model.components.row(c);
            for (std::size_t k = 0; k < model.n_bands(); ++k) x[k] += z[c] * comp[k];
        }
    }
    return out;
}

namespace {

// Hidden-layer activations of a single-hidden-layer autoencoder.
Matrix encode_hidden(const DenseNetwork& net, const Matrix& data) {
    DenseNetwork encoder;
    encoder.layers.push_back(net.layers.front());
    return forward(encoder, data).back();
}

}  // namespace

CanonicalResult canonical_reduce(const PixelMatrix& matrix, std::size_t latent_dim,
                                 const TrainConfig& config) {
    const std::size_t n_bands = matrix.n_bands();
    if (latent_dim < 1 || latent_dim > n_bands)
        throw ConfigError("latent_dim must be in [1, n_bands]");

    auto [net, losses] =
        train_autoencoder(matrix, {n_bands, latent_dim, n_bands}, config);

    CanonicalResult result;
    result.latent.producer = Producer::canonical_ae;
    result.latent.values = encode_hidden(net, matrix.values);
    result.network = std::move(net);
    result.losses = std::move(losses);
    return result;
}

StackedResult stacked_reduce(const PixelMatrix& matrix, std::size_t h1,
                             std::size_t h2, const TrainConfig& config) {
    const std::size_t n_bands = matrix.n_bands();
    if (!(n_bands >= h1 && h1 >= h2 && h2 >= 1))
        throw ConfigError("stacked dims must satisfy n_bands >= h1 >= h2 >= 1");

    TrainConfig cfg1 = config;
    cfg1.seed = derive_seed(config.seed, "sae_stage1");
    auto [ae1, losses1] = train_autoencoder(matrix, {n_bands, h1, n_bands}, cfg1);

    // Stage-2 input is the stage-1 hidden output, computed once and reused
    // for training and latent extraction alike. The rescale to [0,1] uses a
    // single min-max over the whole matrix: a per-column rescale would blow
    // near-dead relu columns up to full range and feed stage 2 noise.
    Matrix hidden = encode_hidden(ae1, matrix.values);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : hidden.data) {
        if (!std::isfinite(v)) throw NumericError("non-finite hidden activation");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    ScalingParams scaling;
    scaling.mins.assign(h1, lo);
    scaling.maxs.assign(h1, hi);
    apply_minmax(hidden, scaling);

    TrainConfig cfg2 = config;
    cfg2.seed = derive_seed(config.seed, "sae_stage2");
    auto [ae2, losses2] = train_autoencoder(hidden, {h1, h2, h1}, cfg2);

    StackedResult result;
    result.latent.producer = Producer::stacked_ae;
    result.latent.values = encode_hidden(ae2, hidden);
    result.stage1 = std::move(ae1);
    result.stage2 = std::move(ae2);
    result.hidden_scaling = std::move(scaling);
    result.stage1_losses = std::move(losses1);
    result.stage2_losses = std::move(losses2);
    return result;
}

Matrix stacked_reconstruct(const StackedResult& model, const Matrix& data) {
    Matrix hidden = encode_hidden(model.stage1, data);
    apply_minmax(hidden, model.hidden_scaling);
    Matrix hidden_rec = forward(model.stage2, hidden).back();
    invert_minmax(hidden_rec, model.hidden_scaling);

    DenseNetwork decoder1;
    decoder1.layers.push_back(model.stage1.layers.back());
    return forward(decoder1, hidden_rec).back();
}

void save_pca(const PCAModel& model, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    nlohmann::json j;
    j["means"] = model.means;
    j["explained_variance_ratio"] = model.explained_variance_ratio;
    j["m"] = model.latent_dim();
    j["n_bands"] = model.n_bands();
    std::ofstream jout(dir / "pca.json", std::ios::binary);
    if (!jout) throw DataError("cannot write " + (dir / "pca.json").string());
    jout << j.dump(2) << "\n";

    std::vector<std::uint8_t> bytes(model.components.data.size() * 8);
    for (std::size_t i = 0; i < model.components.data.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(model.components.data[i]);
        for (int k = 0; k < 8; ++k)
            bytes[8 * i + k] = static_cast<std::uint8_t>((u >> (8 * k)) & 0xff);
    }
    std::ofstream bout(dir / "components.bin", std::ios::binary);
    if (!bout) throw DataError("cannot write " + (dir / "components.bin").string());
    bout.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

PCAModel load_pca(const std::filesystem::path& dir) {
    std::ifstream jin(dir / "pca.json");
    if (!jin) throw DataError("missing " + (dir / "pca.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jin);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed pca.json: " + std::string(e.what()));
    }
    PCAModel model;
    model.means = j.at("means").get<std::vector<double>>();
    model.explained_variance_ratio =
        j.at("explained_variance_ratio").get<std::vector<double>>();
    std::size_t m = j.at("m").get<std::size_t>();
    std::size_t d = j.at("n_bands").get<std::size_t>();
    if (d != model.means.size() || m != model.explained_variance_ratio.size())
        throw DataError("pca.json shape mismatch");

    std::ifstream bin(dir / "components.bin", std::ios::binary);
    if (!bin) throw DataError("missing " + (dir / "components.bin").string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() != m * d * 8) throw DataError("components.bin size mismatch");
    model.components = Matrix(m, d);
    for (std::size_t i = 0; i < m * d; ++i) {
        std::uint64_t u = 0;
        for (int k = 0; k < 8; ++k)
            u |= static_cast<std::uint64_t>(bytes[8 * i + k]) << (8 * k);
        model.components.data[i] = std::bit_cast<double>(u);
    }
    return model;
}

}  // namespace geoclust
