#include "geoclust/cluster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "geoclust/parallel.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

namespace {

constexpr std::size_t kChunk = 4096;  // fixed so reductions are order-stable

inline double sq_dist(const double* a, const double* b, std::size_t m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double d = a[j] - b[j];
        acc += d * d;
    }
    return acc;
}

// Per-chunk partial results for the assignment step, merged in chunk order.
struct AssignPartial {
    Matrix sums;                      // k x m
    std::vector<std::size_t> counts;  // k
    double inertia = 0.0;
};

struct AssignResult {
    double inertia = 0.0;
    Matrix sums;
    std::vector<std::size_t> counts;
};

AssignResult assign_points(const Matrix& x, const Matrix& centroids,
                           std::vector<std::uint32_t>& labels) {
    const std::size_t n = x.rows, m = x.cols, k = centroids.rows;
    const std::size_t nchunks = chunk_count(n, kChunk);
    std::vector<AssignPartial> partials(nchunks);

    parallel_chunks(n, kChunk, [&](std::size_t ci, std::size_t begin, std::size_t end) {
        AssignPartial p;
        p.sums = Matrix(k, m);
        p.counts.assign(k, 0);
        for (std::size_t i = begin; i < end; ++i) {
            const double* xi = x.row(i);
            std::size_t best = 0;
            double best_d = sq_dist(xi, centroids.row(0), m);
            for (std::size_t c = 1; c < k; ++c) {
                double d = sq_dist(xi, centroids.row(c), m);
                if (d < best_d) {  // strict: ties keep the lowest index
                    best_d = d;
                    best = c;
                }
            }
            labels[i] = static_cast<std::uint32_t>(best);
            p.inertia += best_d;
            p.counts[best] += 1;
            double* srow = p.sums.row(best);
            for (std::size_t j = 0; j < m; ++j) srow[j] += xi[j];
        }
        partials[ci] = std::move(p);
    });

    AssignResult out;
    out.sums = Matrix(k, m);
    out.counts.assign(k, 0);
    for (const auto& p : partials) {
        out.inertia += p.inertia;
        for (std::size_t i = 0; i < p.sums.data.size(); ++i)
            out.sums.data[i] += p.sums.data[i];
        for (std::size_t c = 0; c < k; ++c) out.counts[c] += p.counts[c];
    }
    return out;
}

Matrix kmeanspp_init(const Matrix& x, std::size_t k, SplitMix64& rng) {
    const std::size_t n = x.rows, m = x.cols;
    Matrix centroids(k, m);

    std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy(x.row(first), x.row(first) + m, centroids.row(0));

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row(i), centroids.row(0), m);

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        std::size_t pick;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            // all remaining mass at chosen centroids; any point will do
            pick = static_cast<std::size_t>(rng.below(n));
        }
        std::copy(x.row(pick), x.row(pick) + m, centroids.row(c));
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], sq_dist(x.row(i), centroids.row(c), m));
    }
    return centroids;
}

ClusterModel lloyd_run(const Matrix& x, std::size_t k, std::uint64_t seed,
                       const KMeansOptions& options) {
    const std::size_t n = x.rows, m = x.cols;
    SplitMix64 rng(seed);

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.labels.assign(n, 0);
    model.centroids = kmeanspp_init(x, k, rng);

    double prev_inertia = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
        model.iterations_run = iter;
        AssignResult res = assign_points(x, model.centroids, model.labels);

        // Lloyd's loop must never increase the objective; the slack only
        // absorbs last-bit rounding in the reductions.
        if (res.inertia > prev_inertia * (1.0 + 1e-10) + 1e-12)
            throw NumericError("k-means inertia increased across an iteration");
        model.inertia_history.push_back(res.inertia);
        prev_inertia = res.inertia;

        // Repair empty clusters by stealing the point farthest from its
        // current centroid, lowest cluster index first. Donors must come
        // from clusters with at least two members or the repair would just
        // move the hole elsewhere.
        for (std::size_t c = 0; c < k; ++c) {
            if (res.counts[c] > 0) continue;
            std::size_t donor = n;
            double worst = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (res.counts[model.labels[i]] < 2) continue;
                double d = sq_dist(x.row(i), model.centroids.row(model.labels[i]), m);
                if (d > worst) {
                    worst = d;
                    donor = i;
                }
            }
            if (donor == n)
                throw NumericError("cannot repair empty cluster");
            std::size_t old = model.labels[donor];
            const double* xd = x.row(donor);
            for (std::size_t j = 0; j < m; ++j) {
                res.sums.at(old, j) -= xd[j];
                res.sums.at(c, j) += xd[j];
            }
            res.counts[old] -= 1;
            res.counts[c] += 1;
            model.labels[donor] = static_cast<std::uint32_t>(c);
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double moved = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double nc = res.sums.at(c, j) / static_cast<double>(res.counts[c]);
                double d = nc - model.centroids.at(c, j);
                moved += d * d;
                model.centroids.at(c, j) = nc;
            }
            shift = std::max(shift, std::sqrt(moved));
        }
        if (shift < options.tol) break;
    }

    // Final consistency pass so labels and inertia match the returned
    // centroids exactly.
    AssignResult final_res = assign_points(x, model.centroids, model.labels);
    if (final_res.inertia > prev_inertia * (1.0 + 1e-10) + 1e-12)
        throw NumericError("k-means inertia increased across an iteration");
    model.inertia_history.push_back(final_res.inertia);
    model.inertia = final_res.inertia;
    return model;
}

}  // namespace

ClusterModel kmeans_fit(const LatentMatrix& features, std::size_t k,
                        std::uint64_t seed, const KMeansOptions& options) {
    const Matrix& x = features.values;
    if (k < 1) throw ConfigError("k must be >= 1");
    if (x.rows < k) throw DataError("k exceeds the number of pixels");
    for (double v : x.data)
        if (!std::isfinite(v)) throw NumericError("non-finite feature value");

    ClusterModel best;
    bool have = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1); ++r) {
        ClusterModel run = lloyd_run(x, k, derive_seed(seed, r), options);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }
    best.seed = seed;
    return best;
}

ElbowCurve elbow_sweep(const LatentMatrix& features, std::size_t k_min,
                       std::size_t k_max, std::uint64_t seed,
                       const KMeansOptions& options) {
    if (k_min < 1) throw ConfigError("k_min must be >= 1");
    if (k_max < k_min + 2)
        throw ConfigError("k_max must be >= k_min + 2 (knee detection needs 3 points)");
    if (features.values.rows < k_max) throw DataError("k_max exceeds the number of pixels");

    ElbowCurve curve;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        ClusterModel model = kmeans_fit(features, k, seed, options);
        curve.k_values.push_back(k);
        curve.wcss.push_back(model.inertia);
    }
    return curve;
}

std::size_t kneedle_detect(const ElbowCurve& curve) {
    const std::size_t n = curve.k_values.size();
    if (n != curve.wcss.size()) throw DataError("elbow curve shape mismatch");
    if (n < 3) throw DataError("knee detection needs at least 3 points");
    for (std::size_t i = 1; i < n; ++i)
        if (curve.k_values[i] <= curve.k_values[i - 1])
            throw DataError("k values must be strictly increasing");

    double w_min = curve.wcss[0], w_max = curve.wcss[0];
    for (double w : curve.wcss) {
        w_min = std::min(w_min, w);
        w_max = std::max(w_max, w);
    }
    if (w_max == w_min) throw NumericError("flat WCSS curve, no elbow");

    const double k_lo = static_cast<double>(curve.k_values.front());
    const double k_hi = static_cast<double>(curve.k_values.back());

    double best_gap = -std::numeric_limits<double>::infinity();
    std::size_t best_k = curve.k_values.front();
    for (std::size_t i = 0; i < n; ++i) {
        double xn = (static_cast<double>(curve.k_values[i]) - k_lo) / (k_hi - k_lo);
        double yn = (curve.wcss[i] - w_min) / (w_max - w_min);
        double gap = (1.0 - xn) - yn;  // height of the chord above the curve
        if (gap > best_gap) {
            best_gap = gap;
            best_k = curve.k_values[i];
        }
    }
    // the 1e-12 floor keeps exactly-linear curves (gap = rounding noise)
    // on the no-elbow path
    if (best_gap <= 1e-12)
        throw NumericError("no elbow: WCSS curve never drops below its chord");
    return best_k;
}

void write_elbow_csv(const ElbowCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "k,wcss\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", curve.wcss[i]);
        out << curve.k_values[i] << "," << buf << "\n";
    }
}

ElbowCurve read_elbow_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "k,wcss")
        throw DataError("elbow csv must start with header 'k,wcss'");
    ElbowCurve curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("malformed elbow csv row");
        curve.k_values.push_back(std::stoull(line.substr(0, comma)));
        curve.wcss.push_back(std::stod(line.substr(comma + 1)));
    }
    return curve;
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    nlohmann::json j;
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["inertia"] = model.inertia;
    j["iterations"] = model.iterations_run;
    std::ofstream jout(dir / "clusters.json", std::ios::binary);
    if (!jout) throw DataError("cannot write " + (dir / "clusters.json").string());
    jout << j.dump(2) << "\n";

    std::vector<std::uint8_t> bytes(model.centroids.data.size() * 8);
    for (std::size_t i = 0; i < model.centroids.data.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(model.centroids.data[i]);
        for (int k = 0; k < 8; ++k)
            bytes[8 * i + k] = static_cast<std::uint8_t>((u >> (8 * k)) & 0xff);
    }
    std::ofstream bout(dir / "centroids.bin", std::ios::binary);
    if (!bout) throw DataError("cannot write " + (dir / "centroids.bin").string());
    bout.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

ClusterModel load_cluster_model(const std::filesystem::path& dir) {
    std::ifstream jin(dir / "clusters.json");
    if (!jin) throw DataError("missing " + (dir / "clusters.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jin);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed clusters.json: " + std::string(e.what()));
    }
    ClusterModel model;
    model.k = j.at("k").get<std::size_t>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.inertia = j.at("inertia").get<double>();
    model.iterations_run = j.at("iterations").get<std::size_t>();

    std::ifstream bin(dir / "centroids.bin", std::ios::binary);
    if (!bin) throw DataError("missing " + (dir / "centroids.bin").string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)),
                                    std::istreambuf_iterator<char>());
    if (model.k == 0 || bytes.size() % (8 * model.k) != 0)
        throw DataError("centroids.bin size mismatch");
    std::size_t m = bytes.size() / (8 * model.k);
    model.centroids = Matrix(model.k, m);
    for (std::size_t i = 0; i < model.centroids.data.size(); ++i) {
        std::uint64_t u = 0;
        for (int k = 0; k < 8; ++k)
            u |= static_cast<std::uint64_t>(bytes[8 * i + k]) << (8 * k);
        model.centroids.data[i] = std::bit_cast<double>(u);
    }
    return model;
}

}  // namespace geoclust
