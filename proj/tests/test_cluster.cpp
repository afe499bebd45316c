#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "geoclust/cluster.hpp"
#include "geoclust/rng.hpp"
#include "test_util.hpp"

using namespace geoclust;

namespace {

LatentMatrix features_1d(std::vector<double> xs) {
    LatentMatrix f;
    f.values = Matrix(xs.size(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) f.values.at(i, 0) = xs[i];
    return f;
}

// Brute-force optimum: enumerate all partitions of n points into at most k
// blocks (canonical label strings) and take the minimal SSE about block
// means. Independent of the k-means implementation.
double brute_force_sse(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows, m = x.cols;
    std::vector<std::uint32_t> assign(n, 0);
    double best = std::numeric_limits<double>::infinity();

    auto sse_of = [&]() {
        std::size_t blocks = 0;
        for (auto a : assign) blocks = std::max<std::size_t>(blocks, a + 1);
        Matrix sums(blocks, m);
        std::vector<std::size_t> counts(blocks, 0);
        for (std::size_t i = 0; i < n; ++i) {
            counts[assign[i]] += 1;
            for (std::size_t j = 0; j < m; ++j) sums.at(assign[i], j) += x.at(i, j);
        }
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                double d = x.at(i, j) - sums.at(assign[i], j) /
                                            static_cast<double>(counts[assign[i]]);
                sse += d * d;
            }
        }
        return sse;
    };

    // canonical form: label i can be at most 1 + max(previous labels)
    auto rec = [&](auto&& self, std::size_t i, std::uint32_t max_used) -> void {
        if (i == n) {
            best = std::min(best, sse_of());
            return;
        }
        std::uint32_t limit = std::min<std::uint32_t>(
            max_used + 1, static_cast<std::uint32_t>(k - 1));
        for (std::uint32_t a = 0; a <= limit; ++a) {
            assign[i] = a;
            self(self, i + 1, std::max(max_used, a));
        }
    };
    if (n == 1) return 0.0;
    assign[0] = 0;
    rec(rec, 1, 0);
    return best;
}

}  // namespace

TEST_CASE("kmeans_fit hand instances") {
    SUBCASE("1-D {0,1,10,11} with k=2") {
        ClusterModel model = kmeans_fit(features_1d({0, 1, 10, 11}), 2, 5);
        CHECK(model.inertia == doctest::Approx(1.0).epsilon(1e-12));
        std::vector<double> cs = {model.centroids.at(0, 0), model.centroids.at(1, 0)};
        std::sort(cs.begin(), cs.end());
        CHECK(cs[0] == doctest::Approx(0.5));
        CHECK(cs[1] == doctest::Approx(10.5));
        CHECK(model.labels[0] == model.labels[1]);
        CHECK(model.labels[2] == model.labels[3]);
        CHECK(model.labels[0] != model.labels[2]);
    }
    SUBCASE("k=1 gives the mean and the total squared deviation") {
        ClusterModel model = kmeans_fit(features_1d({1, 2, 3, 4, 10}), 1, 5);
        CHECK(model.centroids.at(0, 0) == doctest::Approx(4.0));
        double expect = 9.0 + 4.0 + 1.0 + 0.0 + 36.0;
        CHECK(model.inertia == doctest::Approx(expect));
    }
    SUBCASE("k = number of distinct points gives zero inertia") {
        ClusterModel model = kmeans_fit(features_1d({3, -1, 7, 2}), 4, 5);
        CHECK(model.inertia == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(kmeans_fit(features_1d({1, 2}), 3, 5), DataError);
        LatentMatrix bad = features_1d({1, std::numeric_limits<double>::quiet_NaN()});
        CHECK_THROWS_AS(kmeans_fit(bad, 1, 5), NumericError);
    }
}

TEST_CASE("kmeans_fit vs brute force on tiny instances") {
    std::size_t within = 0, total = 40;
    for (std::uint64_t t = 0; t < total; ++t) {
        SplitMix64 rng(derive_seed(900, t));
        std::size_t k = 1 + rng.below(3);
        std::size_t n = k + 1 + rng.below(12 - k);
        std::size_t m = 1 + rng.below(2);
        LatentMatrix f;
        f.values = testutil::random_matrix(n, m, rng, -5.0, 5.0);

        ClusterModel model = kmeans_fit(f, k, derive_seed(901, t));
        double opt = brute_force_sse(f.values, k);
        CHECK(model.inertia >= opt * (1.0 - 1e-9) - 1e-12);
        if (model.inertia <= opt * 1.05 + 1e-12) ++within;

        // Lloyd's objective never rises along the winning run
        for (std::size_t i = 1; i < model.inertia_history.size(); ++i)
            CHECK(model.inertia_history[i] <=
                  model.inertia_history[i - 1] * (1.0 + 1e-10) + 1e-12);
    }
    CHECK(within >= total * 95 / 100);
}

TEST_CASE("kmeans_fit determinism and permutation invariance of inertia") {
    SplitMix64 rng(77);
    // four separated blobs: every restart reaches the same optimum, so the
    // best-of-restarts inertia is a function of the point set alone
    LatentMatrix f;
    f.values = Matrix(120, 3);
    for (std::size_t i = 0; i < 120; ++i) {
        std::size_t blob = i % 4;
        f.values.at(i, 0) = static_cast<double>(blob % 2) * 10.0 + rng.uniform(-0.5, 0.5);
        f.values.at(i, 1) = static_cast<double>(blob / 2) * 10.0 + rng.uniform(-0.5, 0.5);
        f.values.at(i, 2) = rng.uniform(-0.5, 0.5);
    }

    ClusterModel a = kmeans_fit(f, 4, 42);
    ClusterModel b = kmeans_fit(f, 4, 42);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);
    CHECK(a.centroids.data == b.centroids.data);

    // permute rows; best-of-restarts inertia is unchanged within fp noise
    std::vector<std::size_t> perm(120);
    for (std::size_t i = 0; i < 120; ++i) perm[i] = i;
    SplitMix64 shuffle_rng(5);
    shuffle_rng.shuffle(perm);
    LatentMatrix g;
    g.values = Matrix(120, 3);
    for (std::size_t i = 0; i < 120; ++i)
        for (std::size_t j = 0; j < 3; ++j) g.values.at(i, j) = f.values.at(perm[i], j);
    ClusterModel c = kmeans_fit(g, 4, 42);
    CHECK(std::abs(c.inertia - a.inertia) <= 1e-9 * std::max(1.0, a.inertia));
}

TEST_CASE("kmeans_fit is bit-identical at any thread count") {
    // enough points to span several reduction chunks
    SplitMix64 rng(321);
    LatentMatrix f;
    f.values = testutil::random_matrix(10000, 3, rng);

    setenv("GEOCLUST_THREADS", "1", 1);
    ClusterModel serial = kmeans_fit(f, 5, 17, {.restarts = 3});
    setenv("GEOCLUST_THREADS", "3", 1);
    ClusterModel threaded = kmeans_fit(f, 5, 17, {.restarts = 3});
    unsetenv("GEOCLUST_THREADS");

    CHECK(serial.labels == threaded.labels);
    CHECK(serial.inertia == threaded.inertia);
    CHECK(serial.centroids.data == threaded.centroids.data);
    CHECK(serial.inertia_history == threaded.inertia_history);
}

TEST_CASE("kmeans empty-cluster repair keeps k populated clusters") {
    // a heavy duplicate mass plus far singletons makes empty clusters likely
    std::vector<double> xs(40, 0.0);
    xs[37] = 100.0;
    xs[38] = 200.0;
    xs[39] = 300.0;
    ClusterModel model = kmeans_fit(features_1d(xs), 4, 3);
    std::vector<std::size_t> counts(4, 0);
    for (auto l : model.labels) counts[l] += 1;
    for (std::size_t c = 0; c < 4; ++c) CHECK(counts[c] > 0);
    CHECK(model.inertia == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("elbow_sweep") {
    SplitMix64 rng(31);
    // three well separated 2-D blobs
    LatentMatrix f;
    f.values = Matrix(90, 2);
    for (std::size_t i = 0; i < 90; ++i) {
        double cx = static_cast<double>(i % 3) * 10.0;
        f.values.at(i, 0) = cx + rng.uniform(-0.5, 0.5);
        f.values.at(i, 1) = rng.uniform(-0.5, 0.5);
    }

    SUBCASE("curve has one row per k and is non-increasing") {
        ElbowCurve curve = elbow_sweep(f, 2, 6, 9);
        REQUIRE(curve.k_values.size() == 5);
        CHECK(curve.k_values.front() == 2);
        CHECK(curve.k_values.back() == 6);
        for (std::size_t i = 1; i < curve.wcss.size(); ++i)
            CHECK(curve.wcss[i] <= curve.wcss[i - 1] * (1.0 + 1e-9));
    }
    SUBCASE("k_max beyond the pixel count errors") {
        LatentMatrix tiny = features_1d({1, 2, 3});
        CHECK_THROWS_AS(elbow_sweep(tiny, 2, 12, 9), DataError);
    }
    SUBCASE("range too small for a knee errors") {
        CHECK_THROWS_AS(elbow_sweep(f, 2, 3, 9), ConfigError);
    }
}

TEST_CASE("kneedle_detect") {
    SUBCASE("hand-derived curve picks k=3") {
        ElbowCurve curve;
        curve.k_values = {1, 2, 3, 4, 5, 6};
        curve.wcss = {10, 5, 2, 1.9, 1.8, 1.7};
        CHECK(kneedle_detect(curve) == 3);
    }
    SUBCASE("3-point convex curve picks the middle") {
        ElbowCurve curve;
        curve.k_values = {1, 2, 3};
        curve.wcss = {4, 1, 0.5};
        CHECK(kneedle_detect(curve) == 2);
    }
    SUBCASE("exactly linear decline has no elbow") {
        ElbowCurve curve;
        curve.k_values = {1, 2, 3, 4};
        curve.wcss = {8, 6, 4, 2};
        CHECK_THROWS_AS(kneedle_detect(curve), NumericError);
    }
    SUBCASE("flat curve errors") {
        ElbowCurve curve;
        curve.k_values = {1, 2, 3};
        curve.wcss = {5, 5, 5};
        CHECK_THROWS_AS(kneedle_detect(curve), NumericError);
    }
    SUBCASE("fewer than 3 points errors") {
        ElbowCurve curve;
        curve.k_values = {1, 2};
        curve.wcss = {5, 1};
        CHECK_THROWS_AS(kneedle_detect(curve), DataError);
    }
    SUBCASE("affine rescaling of wcss never moves the knee") {
        ElbowCurve base;
        base.k_values = {2, 3, 4, 5, 6, 7, 8};
        base.wcss = {90, 40, 12, 9, 7.5, 6.5, 6};
        std::size_t expect = kneedle_detect(base);
        for (double a : {1e-3, 1.0, 250.0}) {
            for (double b : {0.0, 5.0, 4000.0}) {
                ElbowCurve scaled = base;
                for (double& w : scaled.wcss) w = a * w + b;
                CHECK(kneedle_detect(scaled) == expect);
            }
        }
    }
    SUBCASE("concave curve (above the chord) raises no-elbow") {
        ElbowCurve curve;
        curve.k_values = {1, 2, 3, 4};
        curve.wcss = {10, 9.5, 8.0, 1.0};
        CHECK_THROWS_AS(kneedle_detect(curve), NumericError);
    }
}

TEST_CASE("elbow csv and cluster model persistence") {
    testutil::TempDir tmp("cluster_persist");

    ElbowCurve curve;
    curve.k_values = {2, 3, 4};
    curve.wcss = {10.5, 3.25, 1.0 / 3.0};
    write_elbow_csv(curve, tmp.path() / "elbow.csv");
    ElbowCurve back = read_elbow_csv(tmp.path() / "elbow.csv");
    CHECK(back.k_values == curve.k_values);
    CHECK(back.wcss == curve.wcss);  // %.17g survives the round trip

    SplitMix64 rng(3);
    LatentMatrix f;
    f.values = testutil::random_matrix(30, 2, rng);
    ClusterModel model = kmeans_fit(f, 3, 7);
    save_cluster_model(model, tmp.path());
    ClusterModel loaded = load_cluster_model(tmp.path());
    CHECK(loaded.k == model.k);
    CHECK(loaded.seed == model.seed);
    CHECK(loaded.inertia == model.inertia);
    CHECK(loaded.iterations_run == model.iterations_run);
    CHECK(loaded.centroids.data == model.centroids.data);
}
