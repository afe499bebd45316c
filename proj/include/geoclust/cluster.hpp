#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "geoclust/common.hpp"
#include "geoclust/dimred.hpp"

namespace geoclust {

struct ClusterModel {
    std::size_t k = 0;
    Matrix centroids;  // k x m
    std::vector<std::uint32_t> labels;
    double inertia = 0.0;  // WCSS
    std::size_t iterations_run = 0;
    std::uint64_t seed = 0;
    // Inertia measured after each assignment step of the winning restart;
    // Lloyd's loop guarantees this is non-increasing.
    std::vector<double> inertia_history;
};

struct ElbowCurve {
    std::vector<std::size_t> k_values;  // strictly increasing
    std::vector<double> wcss;
};

struct KMeansOptions {
    std::size_t max_iter = 300;
    double tol = 1e-6;       // max centroid shift that counts as converged
    std::size_t restarts = 10;
};

// k-means++ seeding, Lloyd iterations, empty clusters repaired by stealing
// the point farthest from its centroid, best inertia over independent
// restarts (seeds derived deterministically from `seed`). Nearest-centroid
// ties break toward the lowest centroid index.
ClusterModel kmeans_fit(const LatentMatrix& features, std::size_t k,
                        std::uint64_t seed, const KMeansOptions& options = {});

// Best WCSS per k over [k_min, k_max]; all k values share the same restart
// seed pool so the curve is smooth enough for knee detection.
ElbowCurve elbow_sweep(const LatentMatrix& features, std::size_t k_min,
                       std::size_t k_max, std::uint64_t seed,
                       const KMeansOptions& options = {});

// Kneedle on a decreasing convex curve: normalize both axes to [0,1],
// measure each point's vertical gap below the first-to-last chord and
// return the k with the maximum gap. Throws NumericError when the curve
// never rises above the chord (no elbow).
std::size_t kneedle_detect(const ElbowCurve& curve);

void write_elbow_csv(const ElbowCurve& curve, const std::filesystem::path& path);
ElbowCurve read_elbow_csv(const std::filesystem::path& path);

// clusters.json (k, seed, inertia, iterations) + centroids.bin (k x m f64le).
void save_cluster_model(const ClusterModel& model, const std::filesystem::path& dir);
ClusterModel load_cluster_model(const std::filesystem::path& dir);

}  // namespace geoclust
