#include <doctest.h>

#include "arsent/errors.hpp"
#include "arsent/mask.hpp"
#include "support.hpp"

using namespace arsent;

TEST_CASE("encode follows the wire grammar") {
    RasterMask m(4, 1);
    m.set(1, 0);
    m.set(2, 0);
    const auto p = rle_encode(m);
    CHECK(p.width == 4);
    CHECK(p.height == 1);
    CHECK(p.runs == std::vector<std::uint64_t>{1, 2, 1});
    CHECK(rle_to_text(p) == "4 1\n1,2,1");

    CHECK(rle_encode(RasterMask(8, 8)).runs == std::vector<std::uint64_t>{64});

    RasterMask first(3, 1);
    first.set(0, 0);
    CHECK(mask_to_rle_text(first) == "3 1\n0,1,2");
    CHECK(mask_from_rle_text("3 1\n0,1,2") == first);
}

TEST_CASE("roundtrip on random masks") {
    Rng rng(2024);
    for (int i = 0; i < 300; ++i) {
        const auto m = testing::random_mask(rng, static_cast<int>(rng.between(1, 150)), static_cast<int>(rng.between(1, 90)));
        const auto payload = rle_encode(m);
        std::uint64_t sum = 0;
        for (auto r : payload.runs) sum += r;
        REQUIRE(sum == m.pixel_count());
        for (std::size_t k = 1; k < payload.runs.size(); ++k) REQUIRE(payload.runs[k] > 0);
        REQUIRE(mask_from_rle_text(rle_to_text(payload)) == m);
    }
}

TEST_CASE("malformed payloads are rejected") {
    const char* corpus[] = {
        "4 1\n1,2,2",      // run sum too large
        "4 1\n1,2",        // run sum too small
        "4 1\n1,x,1",      // non-numeric token
        "4 1\n1,-2,3",     // signed token
        "4 1\n+1,2,1",     // signed token
        "4 1\n1,,3",       // empty token
        "4 1\n1,2,1,",     // trailing comma
        "4 1 1,2,1",       // missing newline
        "4\n4",            // missing height
        "a 1\n4",          // bad header
        "4 1\n 1,2,1",     // stray whitespace
        "",                // empty
        "4 1\n4\n",        // trailing newline
        "4 1\n99999999999999999999999",  // overflow
    };
    for (const char* text : corpus) {
        CAPTURE(text);
        CHECK_THROWS_WITH_AS(mask_from_rle_text(text), "malformed RLE", MalformedRle);
    }
}

TEST_CASE("zero-sized masks") {
    CHECK(mask_from_rle_text(mask_to_rle_text(RasterMask(0, 0))) == RasterMask(0, 0));
}
