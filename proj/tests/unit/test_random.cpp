#include <doctest.h>

#include <cmath>
#include <set>

#include "causal/random.hpp"

using namespace causal;

TEST_CASE("derived seeds are stable and distinct") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 5) != derive_seed(2, 5));
}

TEST_CASE("rng streams replay exactly") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
        CHECK(a.index(17) == b.index(17));
    }
}

TEST_CASE("draw moments") {
    Rng r(3);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, sl = 0;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
        su += r.uniform();
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
        sl += std::abs(r.laplace(2.0));
        ones += r.bernoulli(0.3);
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(sl / n == doctest::Approx(2.0).epsilon(0.02));  // E|L| = scale
    CHECK(ones / double(n) == doctest::Approx(0.3).epsilon(0.02));
}
