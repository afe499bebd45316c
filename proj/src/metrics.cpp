#include "geoclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "geoclust/rng.hpp"

namespace geoclust {

namespace {

// k = max label + 1; every cluster in [0,k) must be populated.
std::size_t cluster_count(const std::vector<std::uint32_t>& labels) {
    if (labels.empty()) throw DataError("empty label vector");
    std::uint32_t max_label = 0;
    for (auto l : labels) max_label = std::max(max_label, l);
    std::size_t k = static_cast<std::size_t>(max_label) + 1;
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) counts[l] += 1;
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == 0)
            throw DataError("empty cluster " + std::to_string(c));
    return k;
}

Matrix cluster_means(const Matrix& features, const std::vector<std::uint32_t>& labels,
                     std::size_t k, std::vector<std::size_t>& counts) {
    Matrix means(k, features.cols);
    counts.assign(k, 0);
    for (std::size_t i = 0; i < features.rows; ++i) {
        counts[labels[i]] += 1;
        const double* x = features.row(i);
        double* mu = means.row(labels[i]);
        for (std::size_t j = 0; j < features.cols; ++j) mu[j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < features.cols; ++j)
            means.at(c, j) /= static_cast<double>(counts[c]);
    return means;
}

inline double euclid(const double* a, const double* b, std::size_t m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double d = a[j] - b[j];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

double calinski_harabasz(const Matrix& features, const std::vector<std::uint32_t>& labels) {
    const std::size_t n = features.rows, m = features.cols;
    if (labels.size() != n) throw DataError("labels length mismatch");
    const std::size_t k = cluster_count(labels);
    if (k < 2) throw DataError("calinski_harabasz needs k >= 2");
    if (n <= k) throw DataError("calinski_harabasz needs n > k");

    std::vector<std::size_t> counts;
    Matrix means = cluster_means(features, labels, k, counts);

    std::vector<double> grand(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = features.row(i);
        for (std::size_t j = 0; j < m; ++j) grand[j] += x[j];
    }
    for (double& g : grand) g /= static_cast<double>(n);

    double trace_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = features.row(i);
        const double* mu = means.row(labels[i]);
        for (std::size_t j = 0; j < m; ++j) {
            double d = x[j] - mu[j];
            trace_w += d * d;
        }
    }
    double trace_b = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double* mu = means.row(c);
        double d2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double d = mu[j] - grand[j];
            d2 += d * d;
        }
        trace_b += static_cast<double>(counts[c]) * d2;
    }

    if (trace_w == 0.0) return std::numeric_limits<double>::infinity();
    return (trace_b / static_cast<double>(k - 1)) /
           (trace_w / static_cast<double>(n - k));
}

double davies_bouldin(const Matrix& features, const std::vector<std::uint32_t>& labels) {
    const std::size_t n = features.rows, m = features.cols;
    if (labels.size() != n) throw DataError("labels length mismatch");
    const std::size_t k = cluster_count(labels);
    if (k < 2) throw DataError("davies_bouldin needs k >= 2");

    std::vector<std::size_t> counts;
    Matrix means = cluster_means(features, labels, k, counts);

    std::vector<double> scatter(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        scatter[labels[i]] += euclid(features.row(i), means.row(labels[i]), m);
    for (std::size_t c = 0; c < k; ++c)
        scatter[c] /= static_cast<double>(counts[c]);

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            double d = euclid(means.row(i), means.row(j), m);
            if (d == 0.0) throw NumericError("coincident centroids in davies_bouldin");
            worst = std::max(worst, (scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

AccuracyResult overall_accuracy(const LabelGrid& grid, const GroundTruthSet& truth) {
    if (truth.points.empty()) throw DataError("no ground truth points");

    // per-cluster class tallies over usable points
    std::map<std::uint32_t, std::map<std::uint32_t, std::size_t>> votes;
    std::size_t excluded = 0;
    for (const auto& p : truth.points) {
        if (p.row >= grid.rows || p.col >= grid.cols)
            throw DataError("ground truth point out of grid bounds");
        std::uint16_t cluster = grid.at(p.row, p.col);
        if (cluster == LabelGrid::kNoData) {
            ++excluded;
            continue;
        }
        votes[cluster][p.class_id] += 1;
    }
    if (votes.empty()) throw DataError("no usable truth points (all on nodata)");

    AccuracyResult result;
    result.points_excluded = excluded;
    for (const auto& [cluster, tally] : votes) {
        std::uint32_t best_class = 0;
        std::size_t best_count = 0;
        for (const auto& [cls, count] : tally) {
            // std::map iterates ascending, so ties keep the lowest class id
            if (count > best_count) {
                best_count = count;
                best_class = cls;
            }
        }
        result.cluster_to_class[cluster] = best_class;
    }

    std::size_t matched = 0, used = 0;
    for (const auto& p : truth.points) {
        std::uint16_t cluster = grid.at(p.row, p.col);
        if (cluster == LabelGrid::kNoData) continue;
        ++used;
        if (result.cluster_to_class.at(cluster) == p.class_id) ++matched;
    }
    result.points_used = used;
    result.accuracy = static_cast<double>(matched) / static_cast<double>(used);
    return result;
}

double silhouette_subsample(const Matrix& features,
                            const std::vector<std::uint32_t>& labels,
                            std::size_t sample_size, std::uint64_t seed) {
    const std::size_t n = features.rows, m = features.cols;
    if (labels.size() != n) throw DataError("labels length mismatch");
    const std::size_t k = cluster_count(labels);
    if (k < 2) throw DataError("silhouette needs k >= 2");
    if (sample_size < k + 1) throw DataError("sample_size must be >= k+1");

    std::vector<std::size_t> sample(n);
    std::iota(sample.begin(), sample.end(), 0);
    if (n > sample_size) {
        // partial Fisher-Yates: the first sample_size slots become a
        // uniform draw without replacement
        SplitMix64 rng(seed);
        for (std::size_t i = 0; i < sample_size; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(sample[i], sample[j]);
        }
        sample.resize(sample_size);
    }

    const std::size_t s = sample.size();
    std::vector<std::size_t> cluster_sizes(k, 0);
    for (std::size_t a = 0; a < s; ++a) cluster_sizes[labels[sample[a]]] += 1;

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (std::size_t a = 0; a < s; ++a) {
        std::size_t i = sample[a];
        std::uint32_t own = labels[i];
        if (cluster_sizes[own] <= 1) continue;  // convention: contributes 0

        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (std::size_t b = 0; b < s; ++b) {
            if (a == b) continue;
            std::size_t j = sample[b];
            mean_dist[labels[j]] += euclid(features.row(i), features.row(j), m);
        }
        double ai = mean_dist[own] / static_cast<double>(cluster_sizes[own] - 1);
        double bi = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || cluster_sizes[c] == 0) continue;
            bi = std::min(bi, mean_dist[c] / static_cast<double>(cluster_sizes[c]));
        }
        if (!std::isfinite(bi)) continue;  // no other cluster in the sample
        double denom = std::max(ai, bi);
        total += denom > 0.0 ? (bi - ai) / denom : 0.0;
    }
    return total / static_cast<double>(s);
}

double adjusted_rand_index(const std::vector<std::uint32_t>& labels_a,
                           const std::vector<std::uint32_t>& labels_b) {
    if (labels_a.size() != labels_b.size())
        throw DataError("adjusted_rand_index length mismatch");
    const std::size_t n = labels_a.size();
    if (n == 0) throw DataError("adjusted_rand_index on empty labels");

    std::map<std::pair<std::uint32_t, std::uint32_t>, double> contingency;
    std::map<std::uint32_t, double> row_sums, col_sums;
    for (std::size_t i = 0; i < n; ++i) {
        contingency[{labels_a[i], labels_b[i]}] += 1.0;
        row_sums[labels_a[i]] += 1.0;
        col_sums[labels_b[i]] += 1.0;
    }

    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, count] : contingency) sum_ij += choose2(count);
    for (const auto& [key, count] : row_sums) sum_a += choose2(count);
    for (const auto& [key, count] : col_sums) sum_b += choose2(count);

    double total_pairs = choose2(static_cast<double>(n));
    double expected = total_pairs > 0.0 ? sum_a * sum_b / total_pairs : 0.0;
    double max_index = 0.5 * (sum_a + sum_b);
    double denom = max_index - expected;
    if (denom == 0.0) return 1.0;  // both partitions trivial and identical
    return (sum_ij - expected) / denom;
}

GroundTruthSet read_ground_truth_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "row,col,class_id")
        throw DataError("ground truth csv must start with header 'row,col,class_id'");
    GroundTruthSet truth;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError("malformed ground truth row: " + line);
        GroundTruthSet::Point p;
        p.row = std::stoull(line.substr(0, c1));
        p.col = std::stoull(line.substr(c1 + 1, c2 - c1 - 1));
        p.class_id = static_cast<std::uint32_t>(std::stoul(line.substr(c2 + 1)));
        truth.points.push_back(p);
    }
    return truth;
}

void write_ground_truth_csv(const GroundTruthSet& truth,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "row,col,class_id\n";
    for (const auto& p : truth.points)
        out << p.row << "," << p.col << "," << p.class_id << "\n";
}

EvaluationReport evaluate_clustering(const Matrix& features,
                                     const std::vector<std::uint32_t>& labels,
                                     Producer producer, const LabelGrid* grid,
                                     const GroundTruthSet* truth) {
    // The scatter metrics see contiguous ids; majority filtering can erase a
    // small cluster entirely and CH/DB only care about the populated ones.
    std::map<std::uint32_t, std::uint32_t> remap;
    for (auto l : labels) remap.emplace(l, 0);
    std::uint32_t next = 0;
    for (auto& [orig, compacted] : remap) compacted = next++;
    std::vector<std::uint32_t> compact(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) compact[i] = remap.at(labels[i]);

    EvaluationReport report;
    report.k = remap.size();
    report.producer = producer;
    report.calinski_harabasz = calinski_harabasz(features, compact);
    report.davies_bouldin = davies_bouldin(features, compact);
    if (grid != nullptr && truth != nullptr) {
        AccuracyResult acc = overall_accuracy(*grid, *truth);
        report.overall_accuracy = acc.accuracy;
        report.cluster_to_class = acc.cluster_to_class;
        report.truth_points_used = acc.points_used;
        report.truth_points_excluded = acc.points_excluded;
    }
    return report;
}

nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json j;
    if (std::isinf(report.calinski_harabasz))
        j["calinski_harabasz"] = "inf";  // JSON has no infinity literal
    else
        j["calinski_harabasz"] = report.calinski_harabasz;
    j["davies_bouldin"] = report.davies_bouldin;
    j["k"] = report.k;
    j["producer"] = producer_name(report.producer);
    if (report.overall_accuracy) j["overall_accuracy"] = *report.overall_accuracy;
    if (report.cluster_to_class) {
        nlohmann::json map = nlohmann::json::object();
        for (const auto& [cluster, cls] : *report.cluster_to_class)
            map[std::to_string(cluster)] = cls;
        j["cluster_to_class"] = map;
    }
    if (report.truth_points_used) j["truth_points_used"] = *report.truth_points_used;
    if (report.truth_points_excluded)
        j["truth_points_excluded"] = *report.truth_points_excluded;
    return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
    EvaluationReport report;
    if (j.at("calinski_harabasz").is_string())
        report.calinski_harabasz = std::numeric_limits<double>::infinity();
    else
        report.calinski_harabasz = j.at("calinski_harabasz").get<double>();
    report.davies_bouldin = j.at("davies_bouldin").get<double>();
    report.k = j.at("k").get<std::size_t>();
    report.producer = producer_from_name(j.at("producer").get<std::string>());
    if (j.contains("overall_accuracy"))
        report.overall_accuracy = j["overall_accuracy"].get<double>();
    if (j.contains("cluster_to_class")) {
        std::map<std::uint32_t, std::uint32_t> map;
        for (const auto& [key, value] : j["cluster_to_class"].items())
            map[static_cast<std::uint32_t>(std::stoul(key))] = value.get<std::uint32_t>();
        report.cluster_to_class = map;
    }
    if (j.contains("truth_points_used"))
        report.truth_points_used = j["truth_points_used"].get<std::size_t>();
    if (j.contains("truth_points_excluded"))
        report.truth_points_excluded = j["truth_points_excluded"].get<std::size_t>();
    return report;
}

}  // namespace geoclust
