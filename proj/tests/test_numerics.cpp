#include <doctest.h>

#include <cmath>

#include "obslab/error.hpp"
#include "obslab/numerics.hpp"

using namespace obslab;

TEST_CASE("softmax sums to one and is shift invariant bitwise") {
    Tensor x = Tensor::vec({3.0, 1.0, 2.0});
    Tensor p = softmax(x);
    double s = 0;
    for (double v : p.values) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    Tensor shifted = Tensor::vec({3.0 + 10.0, 1.0 + 10.0, 2.0 + 10.0});
    CHECK(bitwise_equal(softmax(shifted), p));
}

TEST_CASE("argmax breaks exact ties toward the lowest index") {
    CHECK(argmax_index(Tensor::vec({1.0, 3.0, 3.0})) == 1);
    CHECK(argmax_index(Tensor::vec({5.0, 5.0, 5.0})) == 0);
    CHECK(argmax_index(Tensor::vec({-2.0, -1.0})) == 1);
}

TEST_CASE("top-m softmax keeps the m largest and renormalizes") {
    Tensor y = Tensor::vec({3.0, 1.0, 2.0});
    Tensor p = topm_softmax(y, 2);
    // Only indices 0 and 2 survive; their odds are e^3 : e^2.
    const double expect0 = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(p.values[0] == doctest::Approx(expect0).epsilon(1e-12));
    CHECK(p.values[1] == 0.0);
    CHECK(p.values[2] == doctest::Approx(1.0 - expect0).epsilon(1e-12));

    const auto support = topm_support(y, 2);
    CHECK(support == std::vector<std::size_t>{0, 2});
}

TEST_CASE("top-m ties at the cutoff keep the lower index") {
    Tensor y = Tensor::vec({5.0, 5.0, 1.0});
    CHECK(topm_support(y, 1) == std::vector<std::size_t>{0});
    Tensor p = topm_softmax(y, 1);
    CHECK(p.values[0] == 1.0);
    CHECK(p.values[1] == 0.0);
}

TEST_CASE("top-m with full support matches plain softmax closely") {
    Tensor y = Tensor::vec({0.3, -1.2, 2.0, 0.0, 0.7});
    Tensor full = topm_softmax(y, 5);
    Tensor plain = softmax(y);
    CHECK(max_abs_diff(full, plain) < 1e-12);
    Tensor wide = topm_softmax(y, 50);  // m beyond the width clamps
    CHECK(max_abs_diff(wide, plain) < 1e-12);
    CHECK_THROWS_AS(topm_softmax(y, 0), Error);
}

TEST_CASE("kl divergence oracle values") {
    Tensor p = Tensor::vec({0.5, 0.5});
    Tensor q = Tensor::vec({0.75, 0.25});
    CHECK(kl_div(p, q) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-12));
    CHECK(kl_div(p, p) == 0.0);

    // Point mass against uniform over M outcomes: exactly ln M.
    const std::size_t M = 8;
    Tensor onehot = Tensor::zeros({M});
    onehot.values[3] = 1.0;
    Tensor uniform = Tensor::full({M}, 1.0 / M);
    CHECK(kl_div(onehot, uniform) == doctest::Approx(std::log(double(M))).epsilon(1e-12));
}

TEST_CASE("kl divergence rejects support violations and bad inputs") {
    Tensor p = Tensor::vec({0.5, 0.5});
    CHECK_THROWS_AS(kl_div(p, Tensor::vec({1.0, 0.0})), Error);
    CHECK_THROWS_AS(kl_div(p, Tensor::vec({0.9, 0.2})), Error);     // sums to 1.1
    CHECK_THROWS_AS(kl_div(p, Tensor::vec({0.5, 0.25, 0.25})), Error);
    CHECK(kl_div(Tensor::vec({0.0, 1.0}), Tensor::vec({0.5, 0.5})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // 0 * ln(0/0) contributes nothing.
    CHECK(kl_div(Tensor::vec({0.0, 1.0}), Tensor::vec({0.0, 1.0})) == 0.0);
}

TEST_CASE("operator norm oracle values") {
    CHECK(spectral_radius(Tensor::from({2, 2}, {3, 0, 0, 1})) == doctest::Approx(3.0).epsilon(1e-8));
    // Rotations are isometries.
    CHECK(spectral_radius(Tensor::from({2, 2}, {0, -1, 1, 0})) == doctest::Approx(1.0).epsilon(1e-8));
    // Largest singular value of the unit shear is the golden ratio.
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(spectral_radius(Tensor::from({2, 2}, {1, 1, 0, 1})) == doctest::Approx(phi).epsilon(1e-8));
    CHECK(spectral_radius(Tensor::zeros({3, 3})) == 0.0);
    CHECK(spectral_radius(Tensor::from({2, 2}, {0.5, 0, 0, 0.25})) ==
          doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("matmul with transpose flags matches hand results") {
    Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
    Tensor ab = matmul(a, b);
    CHECK(ab.values == std::vector<double>{58, 64, 139, 154});
    // a * a^T and a^T * a via the flags.
    Tensor aat = matmul(a, a, false, true);
    CHECK(aat.values == std::vector<double>{14, 32, 32, 77});
    Tensor ata = matmul(a, a, true, false);
    CHECK(ata.at(0, 0) == 17.0);
    CHECK(ata.at(2, 2) == 45.0);
    Tensor bt_at = matmul(b, a, true, true);  // (a b)^T
    CHECK(bt_at.values == std::vector<double>{58, 139, 64, 154});
    CHECK_THROWS_AS(matmul(a, a), Error);  // inner dims disagree
}

TEST_CASE("elementwise kernels and bias rows") {
    Tensor a = Tensor::vec({1.0, -2.0});
    Tensor b = Tensor::vec({0.5, 4.0});
    CHECK(add(a, b).values == std::vector<double>{1.5, 2.0});
    CHECK(sub(a, b).values == std::vector<double>{0.5, -6.0});
    CHECK(mul(a, b).values == std::vector<double>{0.5, -8.0});
    CHECK(scale(a, -2.0).values == std::vector<double>{-2.0, 4.0});
    Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor bias = Tensor::vec({10.0, 20.0});
    CHECK(add_bias_rows(m, bias).values == std::vector<double>{11, 22, 13, 24});
    CHECK(exp_map(Tensor::vec({0.0})).values[0] == 1.0);
    CHECK(tanh_map(Tensor::vec({0.0})).values[0] == 0.0);
}

TEST_CASE("gelu matches the tanh-form definition and derivative is consistent") {
    // 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))), written out independently.
    auto ref = [](double x) {
        const double z = std::sqrt(2.0 / std::acos(-1.0)) * (x + 0.044715 * std::pow(x, 3));
        return 0.5 * x * (1.0 + std::tanh(z));
    };
    for (double x : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
        CHECK(gelu_map(Tensor::vec({x})).values[0] == doctest::Approx(ref(x)).epsilon(1e-12));
        const double h = 1e-6;
        const double fd = (ref(x + h) - ref(x - h)) / (2 * h);
        CHECK(gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
    }
    // Stays close to the erf-exact gaussian CDF form it approximates.
    for (double x : {-1.0, 0.2, 2.0}) {
        const double exact = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
        CHECK(gelu_map(Tensor::vec({x})).values[0] == doctest::Approx(exact).epsilon(5e-3));
    }
}

TEST_CASE("causal softmax rows zero the strict upper triangle") {
    Tensor s = Tensor::from({3, 3}, {1, 99, 99, 2, 2, 99, 1, 2, 3});
    Tensor p = causal_softmax_rows(s);
    CHECK(p.at(0, 0) == 1.0);
    CHECK(p.at(0, 1) == 0.0);
    CHECK(p.at(0, 2) == 0.0);
    CHECK(p.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.at(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.at(1, 2) == 0.0);
    double row2 = p.at(2, 0) + p.at(2, 1) + p.at(2, 2);
    CHECK(row2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log softmax rows agrees with softmax rows") {
    Tensor m = Tensor::from({2, 3}, {0.1, -2.0, 1.5, 3.0, 3.0, 3.0});
    Tensor lp = log_softmax_rows(m);
    Tensor p = softmax_rows(m);
    for (std::size_t i = 0; i < m.numel(); ++i)
        CHECK(std::exp(lp.values[i]) == doctest::Approx(p.values[i]).epsilon(1e-12));
}

TEST_CASE("layer norm normalizes each row to zero mean unit variance") {
    Tensor x = Tensor::from({1, 3}, {1, 2, 3});
    Tensor gain = Tensor::full({3}, 1.0);
    Tensor bias = Tensor::zeros({3});
    Tensor out = layer_norm_rows(x, gain, bias, 0.0);
    const double r = std::sqrt(1.5);  // 1/sqrt(2/3)
    CHECK(out.values[0] == doctest::Approx(-r).epsilon(1e-12));
    CHECK(out.values[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.values[2] == doctest::Approx(r).epsilon(1e-12));
    Tensor g2 = Tensor::vec({2.0, 2.0, 2.0});
    Tensor b2 = Tensor::vec({1.0, 1.0, 1.0});
    Tensor out2 = layer_norm_rows(x, g2, b2, 0.0);
    CHECK(out2.values[0] == doctest::Approx(1.0 - 2 * r).epsilon(1e-12));
}

TEST_CASE("row and column assembly kernels") {
    Tensor m = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
    CHECK(gather_rows(m, {2, 0}).values == std::vector<double>{5, 6, 1, 2});
    CHECK_THROWS_AS(gather_rows(m, {3}), Error);

    Tensor r0 = Tensor::from({1, 2}, {9, 8});
    const std::vector<const Tensor*> parts{&r0, &m};
    CHECK(concat_rows(parts).values == std::vector<double>{9, 8, 1, 2, 3, 4, 5, 6});

    Tensor wide = Tensor::from({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(slice_cols(wide, 1, 2).values == std::vector<double>{2, 3, 6, 7});
    Tensor left = slice_cols(wide, 0, 2), right = slice_cols(wide, 2, 2);
    const std::vector<const Tensor*> halves{&left, &right};
    CHECK(bitwise_equal(concat_cols(halves), wide));

    CHECK(pick_rows(m, {1, 0, 1}).values == std::vector<double>{2, 3, 6});
    CHECK_THROWS_AS(pick_rows(m, {0, 1}), Error);
    CHECK(sum_all(m) == 21.0);
}
