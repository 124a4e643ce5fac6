#include "seagrid/encoder.hpp"
#include "seagrid/errors.hpp"
#include "support.hpp"

#include <fstream>

#include <doctest.h>

using namespace seagrid;

TEST_CASE("feature csv") {
    testsupport::TempDir tmp("feat");
    std::ofstream(tmp / "one.csv") << "source_id,row,col,f0,f1,f2,f3\nimg,0,1,0.5,1,-2,3e-1\n";
    const auto t = load_precomputed_features(tmp / "one.csv");
    CHECK(t.dim == 4);
    REQUIRE(t.rows.size() == 1);
    const auto& f = t.rows.at({"img", 0, 1});
    CHECK(f[0] == 0.5);
    CHECK(f[3] == 0.3);

    std::ofstream(tmp / "mixed.csv") << "source_id,row,col,f0,f1,f2,f3\na,0,0,1,2,3,4\na,0,1,1,2,3,4,5\n";
    CHECK_THROWS_WITH_AS(load_precomputed_features(tmp / "mixed.csv"), doctest::Contains("3"), DataError);
}

TEST_CASE("feature csv round trip") {
    Rng rng(4);
    FeatureTable t;
    t.dim = 6;
    for (int i = 0; i < 100; ++i) t.rows[{"img" + std::to_string(i / 10), i % 10, 0}] = testsupport::random_matrix(6, 1, rng);
    testsupport::TempDir tmp("featrt");
    write_precomputed_features(t, tmp / "f.csv");
    const auto back = load_precomputed_features(tmp / "f.csv");
    REQUIRE(back.rows.size() == 100);
    for (const auto& [k, v] : t.rows) {
        const auto& w = back.rows.at(k);
        for (int d = 0; d < 6; ++d) CHECK(std::abs(w[d] - v[d]) <= 1e-9 * std::abs(v[d]));
    }
}

TEST_CASE("precomputed encoder coverage") {
    FeatureTable t;
    t.dim = 2;
    t.rows[{"a", 0, 0}] = Eigen::Vector2d(1, 2);
    const PrecomputedEncoder enc(t);
    const std::vector<Patch> ok{Patch{Image(), 0, 0, "a", 0}};
    CHECK(enc.encode_all(ok)(0, 1) == 2.0);
    const std::vector<Patch> missing{Patch{Image(), 0, 1, "a", 0}};
    CHECK_THROWS_AS(enc.require_coverage(missing), DataError);
    CHECK_THROWS_AS(enc.encode(missing[0]), DataError);
}

TEST_CASE("pixel encoder") {
    const PixelEncoder enc(2);
    CHECK(enc.dim() == 12);
    const Patch p{testsupport::constant_image(4, 4, 0.0f, 0.5f, 1.0f), 0, 0, "x", 0};
    const auto v = enc.encode(p);
    CHECK(v[0] == doctest::Approx(-1.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(1.0));
}
