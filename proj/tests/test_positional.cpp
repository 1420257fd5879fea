#include <cmath>
#include <doctest.h>
#include <set>

#include "atinuke/errors.hpp"
#include "atinuke/positional.hpp"
#include "test_util.hpp"

using namespace atinuke;

TEST_CASE("row 0 alternates 0,1,0,1") {
    auto pt = build_positional_table(8, 4);
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(pt.table[j] == (j % 2 == 0 ? 0.0 : 1.0));
}

TEST_CASE("spot values against high-precision trig") {
    auto pt2 = build_positional_table(2, 4);
    CHECK(pt2.table.at({1, 0}) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    CHECK(pt2.table.at({1, 1}) == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
    CHECK(pt2.table.at({1, 0}) == doctest::Approx(0.8414710).epsilon(1e-7));
    CHECK(pt2.table.at({1, 1}) == doctest::Approx(0.5403023).epsilon(1e-7));

    // model_dim=4, pos=2, pair i=1: divisor 10000^(2/4) = 100
    auto pt4 = build_positional_table(4, 4);
    CHECK(pt4.table.at({2, 2}) == doctest::Approx(std::sin(0.02)).epsilon(1e-15));
    CHECK(pt4.table.at({2, 3}) == doctest::Approx(std::cos(0.02)).epsilon(1e-15));
    CHECK(pt4.table.at({2, 2}) == doctest::Approx(0.0199987).epsilon(1e-5));
    CHECK(pt4.table.at({2, 3}) == doctest::Approx(0.9998000).epsilon(1e-5));
}

TEST_CASE("entries bounded and construction deterministic") {
    auto a = build_positional_table(16, 100);
    auto b = build_positional_table(16, 100);
    CHECK(testutil::bit_identical(a.table, b.table));
    for (std::size_t i = 0; i < a.table.size(); ++i) {
        CHECK(a.table[i] >= -1.0);
        CHECK(a.table[i] <= 1.0);
    }
}

TEST_CASE("rows 0..511 pairwise distinct at model_dim 16") {
    auto pt = build_positional_table(16, 512);
    std::set<std::vector<long long>> seen;
    for (std::size_t pos = 0; pos < 512; ++pos) {
        std::vector<long long> rounded(16);
        for (std::size_t j = 0; j < 16; ++j)
            rounded[j] = std::llround(pt.table[pos * 16 + j] * 1e9);
        CHECK(seen.insert(rounded).second);
    }
}

TEST_CASE("odd model_dim rejected") {
    CHECK_THROWS_AS(build_positional_table(7, 10), ConfigError);
}

TEST_CASE("lookup copies rows per slot and checks bounds") {
    auto pt = build_positional_table(4, 8);

    Tensor one = lookup_positions(pt, IntTensor({1, 1}, {0}));
    CHECK(one.shape() == Shape{1, 1, 4});
    CHECK(one[0] == 0.0);
    CHECK(one[1] == 1.0);
    CHECK(one[2] == 0.0);
    CHECK(one[3] == 1.0);

    Tensor two = lookup_positions(pt, IntTensor({2, 2}, {0, 1, 0, 1}));
    for (std::size_t j = 0; j < 8; ++j) CHECK(two[j] == two[8 + j]);  // batch independence

    CHECK_THROWS_AS(lookup_positions(pt, IntTensor({1, 1}, {8})), RangeError);
}
