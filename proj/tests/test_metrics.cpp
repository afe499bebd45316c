#include "doctest.h"

#include <cmath>

#include "geoclust/metrics.hpp"
#include "geoclust/preprocess.hpp"
#include "geoclust/rng.hpp"
#include "test_util.hpp"

using namespace geoclust;

namespace {

Matrix features_1d(std::vector<double> xs) {
    Matrix m(xs.size(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) m.at(i, 0) = xs[i];
    return m;
}

// Brute-force oracles written straight from the definitions; no code shared
// with src/metrics.cpp.
double ch_oracle(const Matrix& x, const std::vector<std::uint32_t>& labels) {
    std::size_t n = x.rows, m = x.cols;
    std::size_t k = 0;
    for (auto l : labels) k = std::max<std::size_t>(k, l + 1);

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);

    std::vector<double> grand(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) grand[j] += x.at(i, j) / static_cast<double>(n);

    double w = 0.0, b = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> mu(m, 0.0);
        for (std::size_t i : members[c])
            for (std::size_t j = 0; j < m; ++j)
                mu[j] += x.at(i, j) / static_cast<double>(members[c].size());
        for (std::size_t i : members[c])
            for (std::size_t j = 0; j < m; ++j)
                w += (x.at(i, j) - mu[j]) * (x.at(i, j) - mu[j]);
        for (std::size_t j = 0; j < m; ++j)
            b += static_cast<double>(members[c].size()) * (mu[j] - grand[j]) * (mu[j] - grand[j]);
    }
    if (w == 0.0) return std::numeric_limits<double>::infinity();
    return (b / static_cast<double>(k - 1)) / (w / static_cast<double>(n - k));
}

double db_oracle(const Matrix& x, const std::vector<std::uint32_t>& labels) {
    std::size_t n = x.rows, m = x.cols;
    std::size_t k = 0;
    for (auto l : labels) k = std::max<std::size_t>(k, l + 1);

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);

    std::vector<std::vector<double>> mu(k, std::vector<double>(m, 0.0));
    std::vector<double> s(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i : members[c])
            for (std::size_t j = 0; j < m; ++j)
                mu[c][j] += x.at(i, j) / static_cast<double>(members[c].size());
        for (std::size_t i : members[c]) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                d2 += (x.at(i, j) - mu[c][j]) * (x.at(i, j) - mu[c][j]);
            s[c] += std::sqrt(d2) / static_cast<double>(members[c].size());
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            double d2 = 0.0;
            for (std::size_t t = 0; t < m; ++t)
                d2 += (mu[i][t] - mu[j][t]) * (mu[i][t] - mu[j][t]);
            worst = std::max(worst, (s[i] + s[j]) / std::sqrt(d2));
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

struct RandomInstance {
    Matrix features;
    std::vector<std::uint32_t> labels;
};

RandomInstance random_instance(std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::size_t k = 2 + rng.below(4);           // 2..5
    std::size_t n = k + 2 + rng.below(199 - k); // <= 200
    std::size_t m = 1 + rng.below(4);           // 1..4
    RandomInstance inst;
    inst.features = testutil::random_matrix(n, m, rng, -5.0, 5.0);
    inst.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        inst.labels[i] = static_cast<std::uint32_t>(i < k ? i : rng.below(k));
    return inst;
}

}  // namespace

TEST_CASE("calinski_harabasz") {
    SUBCASE("hand instance {0,1,9,10} scores exactly 162") {
        double ch = calinski_harabasz(features_1d({0, 1, 9, 10}), {0, 0, 1, 1});
        CHECK(ch == 162.0);
    }
    SUBCASE("single cluster errors") {
        CHECK_THROWS_AS(calinski_harabasz(features_1d({1, 2, 3}), {0, 0, 0}), DataError);
    }
    SUBCASE("zero within-scatter returns the +inf sentinel") {
        double ch = calinski_harabasz(features_1d({1, 1, 5, 5, 5}), {0, 0, 1, 1, 1});
        CHECK(std::isinf(ch));
        CHECK(ch > 0);
    }
    SUBCASE("empty cluster id errors") {
        CHECK_THROWS_AS(calinski_harabasz(features_1d({1, 2, 3}), {0, 0, 2}), DataError);
    }
    SUBCASE("scale and translation invariance") {
        SplitMix64 rng(4);
        RandomInstance inst = random_instance(777);
        double base = ch_oracle(inst.features, inst.labels);
        Matrix scaled = inst.features;
        for (double& v : scaled.data) v = 3.75 * v;
        CHECK(calinski_harabasz(scaled, inst.labels) ==
              doctest::Approx(base).epsilon(1e-9));
        Matrix shifted = inst.features;
        for (double& v : shifted.data) v += 11.25;
        CHECK(calinski_harabasz(shifted, inst.labels) ==
              doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("davies_bouldin") {
    SUBCASE("hand instance {0,1,9,10} scores 1/9") {
        double db = davies_bouldin(features_1d({0, 1, 9, 10}), {0, 0, 1, 1});
        CHECK(db == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    }
    SUBCASE("two singleton clusters score zero") {
        double db = davies_bouldin(features_1d({2, 9}), {0, 1});
        CHECK(db == 0.0);
    }
    SUBCASE("coincident centroids error") {
        CHECK_THROWS_AS(davies_bouldin(features_1d({0, 2, 0, 2}), {0, 0, 1, 1}),
                        NumericError);
    }
    SUBCASE("k < 2 errors") {
        CHECK_THROWS_AS(davies_bouldin(features_1d({1, 2}), {0, 0}), DataError);
    }
    SUBCASE("translation and scale invariance") {
        RandomInstance inst = random_instance(778);
        double base = davies_bouldin(inst.features, inst.labels);
        Matrix moved = inst.features;
        for (double& v : moved.data) v = 2.5 * v - 7.0;
        CHECK(davies_bouldin(moved, inst.labels) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("CH and DB match the brute-force oracles on random instances") {
    for (std::uint64_t t = 0; t < 25; ++t) {
        RandomInstance inst = random_instance(derive_seed(4000, t));
        double ch = calinski_harabasz(inst.features, inst.labels);
        double db = davies_bouldin(inst.features, inst.labels);
        CHECK(ch == doctest::Approx(ch_oracle(inst.features, inst.labels)).epsilon(1e-9));
        CHECK(db == doctest::Approx(db_oracle(inst.features, inst.labels)).epsilon(1e-9));
    }
}

TEST_CASE("overall_accuracy") {
    LabelGrid grid;
    grid.rows = 2;
    grid.cols = 3;
    grid.labels = {0, 0, 0, 1, 1, LabelGrid::kNoData};

    SUBCASE("plurality vote with 2/3 accuracy") {
        GroundTruthSet truth;
        truth.points = {{0, 0, 1}, {0, 1, 1}, {0, 2, 2}};
        AccuracyResult res = overall_accuracy(grid, truth);
        CHECK(res.accuracy == doctest::Approx(2.0 / 3.0));
        CHECK(res.cluster_to_class.at(0) == 1);
        CHECK(res.points_used == 3);
        CHECK(res.points_excluded == 0);
    }
    SUBCASE("perfect clustering scores 1.0") {
        GroundTruthSet truth;
        truth.points = {{0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {1, 1, 1}};
        AccuracyResult res = overall_accuracy(grid, truth);
        CHECK(res.accuracy == 1.0);
    }
    SUBCASE("points on the sentinel are excluded but counted") {
        GroundTruthSet truth;
        truth.points = {{0, 0, 0}, {1, 2, 4}};
        AccuracyResult res = overall_accuracy(grid, truth);
        CHECK(res.points_used == 1);
        CHECK(res.points_excluded == 1);
        CHECK(res.accuracy == 1.0);
    }
    SUBCASE("all points on the sentinel errors") {
        GroundTruthSet truth;
        truth.points = {{1, 2, 0}};
        CHECK_THROWS_AS(overall_accuracy(grid, truth), DataError);
    }
    SUBCASE("out-of-bounds point errors") {
        GroundTruthSet truth;
        truth.points = {{5, 5, 0}};
        CHECK_THROWS_AS(overall_accuracy(grid, truth), DataError);
    }
    SUBCASE("plurality ties go to the lowest class id") {
        GroundTruthSet truth;
        truth.points = {{0, 0, 3}, {0, 1, 1}};  // cluster 0 sees classes {3,1}
        AccuracyResult res = overall_accuracy(grid, truth);
        CHECK(res.cluster_to_class.at(0) == 1);
    }
    SUBCASE("accuracy is invariant to cluster relabeling") {
        GroundTruthSet truth;
        truth.points = {{0, 0, 1}, {0, 1, 1}, {0, 2, 2}, {1, 0, 0}, {1, 1, 0}};
        double base = overall_accuracy(grid, truth).accuracy;
        LabelGrid renamed = grid;
        for (auto& l : renamed.labels)
            if (l != LabelGrid::kNoData) l = static_cast<std::uint16_t>(9 - l);
        CHECK(overall_accuracy(renamed, truth).accuracy == base);
    }
}

TEST_CASE("silhouette_subsample") {
    SUBCASE("two tight far-apart blobs score above 0.9") {
        SplitMix64 rng(11);
        Matrix f(40, 2);
        std::vector<std::uint32_t> labels(40);
        for (std::size_t i = 0; i < 40; ++i) {
            double cx = i < 20 ? 0.0 : 100.0;
            f.at(i, 0) = cx + rng.uniform(-0.5, 0.5);
            f.at(i, 1) = rng.uniform(-0.5, 0.5);
            labels[i] = i < 20 ? 0 : 1;
        }
        CHECK(silhouette_subsample(f, labels, 10000, 3) > 0.9);
    }
    SUBCASE("all points identical scores 0 by convention") {
        Matrix f(6, 1, 2.5);
        std::vector<std::uint32_t> labels = {0, 0, 0, 1, 1, 1};
        CHECK(silhouette_subsample(f, labels, 10000, 3) == 0.0);
    }
    SUBCASE("sample_size >= n equals the full silhouette exactly") {
        SplitMix64 rng(12);
        Matrix f = testutil::random_matrix(30, 2, rng);
        std::vector<std::uint32_t> labels(30);
        for (std::size_t i = 0; i < 30; ++i) labels[i] = i % 3;
        double full = silhouette_subsample(f, labels, 30, 3);
        double more = silhouette_subsample(f, labels, 10000, 99);
        CHECK(full == more);  // both use every point; the seed is irrelevant
        CHECK(full >= -1.0);
        CHECK(full <= 1.0);
        // subsampled value is seed-deterministic
        CHECK(silhouette_subsample(f, labels, 10, 7) ==
              silhouette_subsample(f, labels, 10, 7));
    }
    SUBCASE("sample_size below k+1 errors") {
        Matrix f(10, 1, 0.0);
        std::vector<std::uint32_t> labels(10);
        for (std::size_t i = 0; i < 10; ++i) labels[i] = i % 3;
        CHECK_THROWS_AS(silhouette_subsample(f, labels, 3, 1), DataError);
    }
}

TEST_CASE("adjusted_rand_index") {
    SUBCASE("identical partitions score 1") {
        CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    }
    SUBCASE("relabeled copy scores 1") {
        CHECK(adjusted_rand_index({0, 0, 1, 2}, {5, 5, 9, 7}) == 1.0);
    }
    SUBCASE("singletons vs one big cluster scores 0 for n=4") {
        CHECK(adjusted_rand_index({0, 1, 2, 3}, {0, 0, 0, 0}) == 0.0);
    }
    SUBCASE("symmetry") {
        std::vector<std::uint32_t> a = {0, 0, 1, 1, 2, 2, 0, 1};
        std::vector<std::uint32_t> b = {0, 1, 1, 1, 2, 0, 0, 2};
        CHECK(adjusted_rand_index(a, b) == adjusted_rand_index(b, a));
    }
    SUBCASE("length mismatch errors") {
        CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), DataError);
    }
}

TEST_CASE("ground truth csv round trip") {
    testutil::TempDir tmp("truth_csv");
    GroundTruthSet truth;
    truth.points = {{0, 1, 2}, {15, 3, 0}, {7, 7, 4}};
    write_ground_truth_csv(truth, tmp.path() / "truth.csv");
    GroundTruthSet back = read_ground_truth_csv(tmp.path() / "truth.csv");
    REQUIRE(back.points.size() == 3);
    CHECK(back.points[1].row == 15);
    CHECK(back.points[1].col == 3);
    CHECK(back.points[2].class_id == 4);
    CHECK_THROWS_AS(read_ground_truth_csv(tmp.path() / "missing.csv"), DataError);
}

TEST_CASE("evaluation report json round trip") {
    EvaluationReport report;
    report.calinski_harabasz = 162.0;
    report.davies_bouldin = 1.0 / 9.0;
    report.overall_accuracy = 0.9;
    report.cluster_to_class = std::map<std::uint32_t, std::uint32_t>{{0, 1}, {1, 0}};
    report.truth_points_used = 27;
    report.truth_points_excluded = 3;
    report.k = 2;
    report.producer = Producer::stacked_ae;

    nlohmann::json j = report_to_json(report);
    EvaluationReport back = report_from_json(j);
    CHECK(back.calinski_harabasz == report.calinski_harabasz);
    CHECK(back.davies_bouldin == report.davies_bouldin);
    CHECK(back.overall_accuracy == report.overall_accuracy);
    CHECK(back.cluster_to_class == report.cluster_to_class);
    CHECK(back.k == 2);
    CHECK(back.producer == Producer::stacked_ae);

    report.calinski_harabasz = std::numeric_limits<double>::infinity();
    nlohmann::json j2 = report_to_json(report);
    CHECK(std::isinf(report_from_json(j2).calinski_harabasz));
}
