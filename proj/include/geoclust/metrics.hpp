#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoclust/common.hpp"
#include "geoclust/dimred.hpp"
#include "geoclust/labels.hpp"

namespace geoclust {

// Field-sample ground truth: grid positions with a known class id.
struct GroundTruthSet {
    struct Point {
        std::size_t row = 0;
        std::size_t col = 0;
        std::uint32_t class_id = 0;
    };
    std::vector<Point> points;
    std::optional<std::vector<std::string>> class_names;
};

// CSV with header row,col,class_id (0-based grid coordinates).
GroundTruthSet read_ground_truth_csv(const std::filesystem::path& path);
void write_ground_truth_csv(const GroundTruthSet& truth,
                            const std::filesystem::path& path);

// Variance ratio criterion: [trace(B)/(k-1)] / [trace(W)/(n-k)]. Returns
// +infinity when the within-scatter is exactly zero (perfectly separated
// degenerate data).
double calinski_harabasz(const Matrix& features, const std::vector<std::uint32_t>& labels);

// Mean over clusters of the worst (s_i+s_j)/d_ij ratio, s = mean Euclidean
// distance to own centroid, d = centroid distance. Lower is better.
double davies_bouldin(const Matrix& features, const std::vector<std::uint32_t>& labels);

struct AccuracyResult {
    double accuracy = 0.0;
    std::map<std::uint32_t, std::uint32_t> cluster_to_class;  // plurality vote
    std::size_t points_used = 0;
    std::size_t points_excluded = 0;  // truth points on nodata pixels
};

// Maps every cluster appearing under a truth point to its plurality class
// (ties to the lowest class id), then scores matched points / usable points.
AccuracyResult overall_accuracy(const LabelGrid& grid, const GroundTruthSet& truth);

// Mean silhouette over a seeded uniform subsample without replacement
// (the full data when n <= sample_size). Sampled singleton clusters
// contribute 0.
double silhouette_subsample(const Matrix& features,
                            const std::vector<std::uint32_t>& labels,
                            std::size_t sample_size = 10000,
                            std::uint64_t seed = 0);

// Chance-corrected partition agreement; 1 for identical partitions up to
// renaming.
double adjusted_rand_index(const std::vector<std::uint32_t>& labels_a,
                           const std::vector<std::uint32_t>& labels_b);

struct EvaluationReport {
    double calinski_harabasz = 0.0;
    double davies_bouldin = 0.0;
    std::optional<double> overall_accuracy;
    std::optional<std::map<std::uint32_t, std::uint32_t>> cluster_to_class;
    std::optional<std::size_t> truth_points_used;
    std::optional<std::size_t> truth_points_excluded;
    std::size_t k = 0;
    Producer producer = Producer::pca;
};

EvaluationReport evaluate_clustering(const Matrix& features,
                                     const std::vector<std::uint32_t>& labels,
                                     Producer producer,
                                     const LabelGrid* grid = nullptr,
                                     const GroundTruthSet* truth = nullptr);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

}  // namespace geoclust
