#include <doctest.h>

#include <cmath>

#include "nesslab/rng.hpp"

using namespace nesslab;

TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::apply({0, 0, 0, 0}, {0, 0}) ==
          C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                            {0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                            {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are keyed by seed and trajectory") {
    RandomStream a(42, 3), b(42, 3), c(42, 4), d(43, 3);
    bool differ_c = false, differ_d = false;
    for (int i = 0; i < 16; ++i) {
        const auto x = a();
        CHECK(x == b());
        differ_c |= x != c();
        differ_d |= x != d();
    }
    CHECK(differ_c);
    CHECK(differ_d);
}

TEST_CASE("uniform and normal moments") {
    RandomStream rng(1, 0);
    const int n = 400000;
    double su = 0, sn = 0, sn2 = 0, sn4 = 0;
    double umin = 1, umax = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        su += u;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sn4 += z * z * z * z;
    }
    CHECK(umin > 0.0);
    CHECK(umax < 1.0);
    CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sn / n) < 5 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(sn4 / n - 3.0) < 5 * std::sqrt(96.0 / n));
}
