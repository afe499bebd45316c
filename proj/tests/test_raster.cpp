#include "doctest.h"

#include "geoclust/raster.hpp"
#include "geoclust/rng.hpp"
#include "test_util.hpp"

#include <fstream>

using namespace geoclust;

namespace {

RasterGrid make_grid(std::size_t rows, std::size_t cols, std::size_t bands,
                     std::uint64_t seed) {
    RasterGrid g;
    g.rows = rows;
    g.cols = cols;
    g.bands = bands;
    g.values.resize(rows * cols * bands);
    SplitMix64 rng(seed);
    for (double& v : g.values) v = rng.uniform(-100.0, 100.0);
    return g;
}

}  // namespace

TEST_CASE("read_raster: direct layout readout") {
    testutil::TempDir tmp("raster_layout");
    RasterGrid g;
    g.rows = 2;
    g.cols = 2;
    g.bands = 1;
    g.values = {1, 2, 3, 4};
    write_raster(g, tmp.path());
    RasterGrid back = read_raster(tmp.path());
    CHECK(back.value(0, 1, 0) == 2.0);
    CHECK(back.value(1, 0, 0) == 3.0);
}

TEST_CASE("raster round trip is identity after one f32 pass") {
    testutil::TempDir tmp("raster_rt");
    RasterGrid g = make_grid(5, 7, 3, 11);
    g.nodata_value = -9999.0;
    g.geotransform = {{500000.0, 30.0, 0.0, 6500000.0, 0.0, -30.0}};
    g.band_names = std::vector<std::string>{"b1", "b2", "b3"};
    // values already representable in f32 make the round trip exact
    for (double& v : g.values) v = static_cast<double>(static_cast<float>(v));

    write_raster(g, tmp.path());
    RasterGrid back = read_raster(tmp.path());
    CHECK(back.rows == g.rows);
    CHECK(back.cols == g.cols);
    CHECK(back.bands == g.bands);
    CHECK(back.values == g.values);
    CHECK(back.nodata_value == g.nodata_value);
    CHECK(back.geotransform == g.geotransform);
    CHECK(back.band_names == g.band_names);

    // writing twice gives identical bytes
    testutil::TempDir tmp2("raster_rt2");
    write_raster(back, tmp2.path());
    std::ifstream a(tmp.path() / "bands.bin", std::ios::binary);
    std::ifstream b(tmp2.path() / "bands.bin", std::ios::binary);
    std::string abytes((std::istreambuf_iterator<char>(a)), {});
    std::string bbytes((std::istreambuf_iterator<char>(b)), {});
    CHECK(abytes == bbytes);
}

TEST_CASE("write_raster: 1x1 single 0.5 is 4 bytes of IEEE-754 LE") {
    testutil::TempDir tmp("raster_half");
    RasterGrid g;
    g.rows = g.cols = g.bands = 1;
    g.values = {0.5};
    write_raster(g, tmp.path());
    std::ifstream in(tmp.path() / "bands.bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 4);
    // 0.5f = 0x3f000000
    CHECK(static_cast<unsigned char>(bytes[0]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[1]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[2]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[3]) == 0x3f);
}

TEST_CASE("read_raster error paths") {
    testutil::TempDir tmp("raster_err");
    CHECK_THROWS_AS(read_raster(tmp.path() / "nope"), DataError);

    // payload size mismatch: 2x2x1 header with 12 bytes
    RasterGrid g;
    g.rows = 2;
    g.cols = 2;
    g.bands = 1;
    g.values = {1, 2, 3, 4};
    write_raster(g, tmp.path());
    std::ofstream trunc(tmp.path() / "bands.bin", std::ios::binary);
    trunc.write("0123456789ab", 12);
    trunc.close();
    CHECK_THROWS_WITH_AS(read_raster(tmp.path()),
                         doctest::Contains("payload size mismatch"), DataError);

    std::ofstream h(tmp.path() / "header.json", std::ios::binary);
    h << "{not json";
    h.close();
    CHECK_THROWS_AS(read_raster(tmp.path()), DataError);
}

TEST_CASE("write_raster error paths") {
    testutil::TempDir tmp("raster_werr");
    RasterGrid g;
    g.rows = g.cols = g.bands = 1;
    g.values = {1.0};
    // a plain file where the directory should go
    std::ofstream blocker(tmp.path() / "blocked");
    blocker << "x";
    blocker.close();
    CHECK_THROWS_AS(write_raster(g, tmp.path() / "blocked"), DataError);

    RasterGrid bad = g;
    bad.values = {1.0, 2.0};
    CHECK_THROWS_AS(write_raster(bad, tmp.path() / "ok"), DataError);
}

TEST_CASE("resample_nearest selects by pixel centre") {
    RasterGrid g;
    g.rows = 1;
    g.cols = 4;
    g.bands = 1;
    g.values = {10, 20, 30, 40};  // [a,b,c,d]

    SUBCASE("downsample 4 -> 2 picks b and d") {
        RasterGrid out = resample_nearest(g, 1, 2);
        CHECK(out.values == std::vector<double>{20, 40});
    }
    SUBCASE("same size is identity") {
        RasterGrid out = resample_nearest(g, 1, 4);
        CHECK(out.values == g.values);
    }
    SUBCASE("2x2 upsampled to 4x4 replicates blocks") {
        RasterGrid q;
        q.rows = q.cols = 2;
        q.bands = 1;
        q.values = {1, 2, 3, 4};
        RasterGrid out = resample_nearest(q, 4, 4);
        CHECK(out.values == std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2,
                                                3, 3, 4, 4, 3, 3, 4, 4});
    }
    SUBCASE("selection property: no new values appear") {
        SplitMix64 rng(3);
        RasterGrid r = make_grid(6, 9, 2, 17);
        RasterGrid out = resample_nearest(r, 11, 4);
        for (double v : out.values) {
            bool found = false;
            for (double s : r.values) found = found || s == v;
            CHECK(found);
        }
    }
    SUBCASE("geotransform pixel sizes rescale") {
        RasterGrid q = make_grid(2, 2, 1, 5);
        q.geotransform = {{100.0, 10.0, 0.0, 200.0, 0.0, -10.0}};
        RasterGrid out = resample_nearest(q, 4, 4);
        CHECK((*out.geotransform)[1] == doctest::Approx(5.0));
        CHECK((*out.geotransform)[5] == doctest::Approx(-5.0));
        CHECK((*out.geotransform)[0] == 100.0);
    }
    SUBCASE("zero target errors") {
        CHECK_THROWS_AS(resample_nearest(g, 0, 2), DataError);
    }
}

TEST_CASE("stack_bands") {
    SUBCASE("two 2x2 single-band grids stack in order") {
        RasterGrid a = make_grid(2, 2, 1, 1);
        RasterGrid b = make_grid(2, 2, 1, 2);
        RasterGrid out = stack_bands({a, b});
        CHECK(out.bands == 2);
        CHECK(out.value(1, 1, 0) == a.value(1, 1, 0));
        CHECK(out.value(1, 1, 1) == b.value(1, 1, 0));
    }
    SUBCASE("coarse grid is block-replicated to the finest resolution") {
        RasterGrid coarse;
        coarse.rows = coarse.cols = 2;
        coarse.bands = 1;
        coarse.values = {1, 2, 3, 4};
        RasterGrid fine = make_grid(4, 4, 1, 9);
        RasterGrid out = stack_bands({coarse, fine});
        CHECK(out.rows == 4);
        CHECK(out.cols == 4);
        CHECK(out.bands == 2);
        RasterGrid expected = resample_nearest(coarse, 4, 4);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(out.value(r, c, 0) == expected.value(r, c, 0));
                CHECK(out.value(r, c, 1) == fine.value(r, c, 0));
            }
    }
    SUBCASE("band count is the sum of inputs") {
        RasterGrid a = make_grid(3, 3, 2, 4);
        RasterGrid b = make_grid(3, 3, 3, 5);
        RasterGrid c = make_grid(3, 3, 1, 6);
        CHECK(stack_bands({a, b, c}).bands == 6);
    }
    SUBCASE("empty list errors") {
        CHECK_THROWS_AS(stack_bands({}), DataError);
    }
    SUBCASE("mismatched origins error") {
        RasterGrid a = make_grid(2, 2, 1, 1);
        a.geotransform = {{0.0, 1.0, 0.0, 0.0, 0.0, -1.0}};
        RasterGrid b = make_grid(2, 2, 1, 2);
        b.geotransform = {{5.0, 1.0, 0.0, 0.0, 0.0, -1.0}};
        CHECK_THROWS_AS(stack_bands({a, b}), DataError);
    }
    SUBCASE("nodata in any source band invalidates the whole pixel") {
        RasterGrid a = make_grid(2, 2, 1, 1);
        a.nodata_value = -1.0;
        a.values[3] = -1.0;
        RasterGrid b = make_grid(2, 2, 1, 2);
        RasterGrid out = stack_bands({a, b});
        REQUIRE(out.nodata_value == -1.0);
        CHECK(out.pixel_is_nodata(1, 1));
        CHECK(out.value(1, 1, 1) == -1.0);
        CHECK(!out.pixel_is_nodata(0, 0));
    }
}

TEST_CASE("crop") {
    RasterGrid g = make_grid(4, 5, 2, 21);
    g.geotransform = {{1000.0, 10.0, 0.0, 2000.0, 0.0, -10.0}};

    SUBCASE("full extent is identity") {
        RasterGrid out = crop(g, 0, 0, 4, 5);
        CHECK(out.values == g.values);
        CHECK(out.geotransform == g.geotransform);
    }
    SUBCASE("1x1 window picks the pixel") {
        RasterGrid out = crop(g, 0, 0, 1, 1);
        CHECK(out.value(0, 0, 0) == g.value(0, 0, 0));
        CHECK(out.value(0, 0, 1) == g.value(0, 0, 1));
    }
    SUBCASE("window out of bounds errors") {
        CHECK_THROWS_AS(crop(g, 0, 3, 2, 3), DataError);
    }
    SUBCASE("origin shifts by the window offset") {
        RasterGrid out = crop(g, 1, 2, 2, 2);
        CHECK((*out.geotransform)[0] == doctest::Approx(1020.0));
        CHECK((*out.geotransform)[3] == doctest::Approx(1990.0));
    }
    SUBCASE("nested crops compose") {
        RasterGrid once = crop(crop(g, 1, 1, 3, 3), 1, 0, 2, 2);
        RasterGrid composed = crop(g, 2, 1, 2, 2);
        CHECK(once.values == composed.values);
        CHECK(once.geotransform == composed.geotransform);
    }
}
