#include <doctest.h>

#include <cmath>
#include <set>

#include "obslab/error.hpp"
#include "obslab/hash.hpp"
#include "obslab/rng.hpp"
#include "obslab/tensor.hpp"

using namespace obslab;

TEST_CASE("tensor shapes and element access") {
    Tensor m = Tensor::zeros({3, 4});
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 4);
    CHECK(m.numel() == 12);
    m.at(2, 3) = 7.5;
    CHECK(m.values[2 * 4 + 3] == 7.5);

    Tensor v = Tensor::vec({1.0, 2.0, 3.0});
    CHECK(v.rank() == 1);
    CHECK(v.at(1) == 2.0);
    CHECK_THROWS_AS((void)v.rows(), Error);  // rank-1 has no row/col split
}

TEST_CASE("tensor full and row builders") {
    Tensor f = Tensor::full({2, 2}, -1.5);
    for (double x : f.values) CHECK(x == -1.5);
    Tensor m = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    const auto r = m.row_span(1);
    CHECK(std::vector<double>(r.begin(), r.end()) == std::vector<double>{4, 5, 6});
    Tensor reshaped = m.reshape({3, 2});
    CHECK(reshaped.at(2, 1) == 6.0);
    CHECK_THROWS_AS((void)m.reshape({4, 2}), Error);
}

TEST_CASE("bitwise equality distinguishes signed zero but max_abs_diff does not") {
    Tensor a = Tensor::vec({0.0});
    Tensor b = Tensor::vec({-0.0});
    CHECK_FALSE(bitwise_equal(a, b));
    CHECK(max_abs_diff(a, b) == 0.0);
    CHECK(bitwise_equal(a, a));
}

TEST_CASE("ensure_finite rejects NaN and infinity") {
    Tensor ok = Tensor::vec({1.0, -2.0});
    CHECK_NOTHROW(ensure_finite(ok, "ok"));
    Tensor bad = Tensor::vec({1.0, std::nan("")});
    CHECK_THROWS_AS(ensure_finite(bad, "bad"), Error);
    Tensor inf = Tensor::vec({1.0, INFINITY});
    CHECK_THROWS_AS(ensure_finite(inf, "inf"), Error);
}

TEST_CASE("rng streams are deterministic per seed") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform01(), y = b.uniform01(), z = c.uniform01();
        all_equal = all_equal && (x == y);
        any_differs = any_differs || (x != z);
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(all_equal);
    CHECK(any_differs);
}

TEST_CASE("rng normal has plausible first moments") {
    Rng r(7);
    double sum = 0, sumsq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("rng below and sampling without replacement") {
    Rng r(5);
    for (int i = 0; i < 200; ++i) CHECK(r.below(7) < 7);
    const auto picks = r.sample_without_replacement(10, 10);
    std::set<std::size_t> uniq(picks.begin(), picks.end());
    CHECK(uniq.size() == 10);
    CHECK(*uniq.begin() == 0);
    CHECK(*uniq.rbegin() == 9);
    CHECK_THROWS_AS(r.sample_without_replacement(3, 4), Error);
}

TEST_CASE("fnv-1a 64-bit reference values") {
    // Standard offset basis for the empty input and the published value for "a".
    CHECK(hash_bytes("") == 0xcbf29ce484222325ULL);
    CHECK(hash_bytes("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("tensor hashing covers shape and payload") {
    Fnv1a h1, h2, h3;
    h1.update(Tensor::from({2, 2}, {1, 2, 3, 4}));
    h2.update(Tensor::from({4}, {1, 2, 3, 4}));
    h3.update(Tensor::from({2, 2}, {1, 2, 3, 5}));
    CHECK(h1.digest() != h2.digest());
    CHECK(h1.digest() != h3.digest());
    Fnv1a again;
    again.update(Tensor::from({2, 2}, {1, 2, 3, 4}));
    CHECK(h1.digest() == again.digest());
}
