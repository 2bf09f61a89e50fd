#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/gfuncs.hpp"

using namespace blockstat;
using namespace blockstat::gfuncs;

namespace {

double eta_at(double r, double a) {
    const EtaSpec spec{{0.0, 0.0}, a};
    const std::vector<double> x{r, 0.0};
    return eta(spec, x);
}

}  // namespace

TEST_CASE("cutoff weight has the plateau / ramp / zero shape") {
    const double a = 0.7;
    CHECK(eta_at(0.0, a) == 1.0);
    CHECK(eta_at(a, a) == 1.0);
    CHECK(eta_at(2.0 * a, a) == 0.0);
    CHECK(eta_at(3.0 * a, a) == 0.0);
    // midpoint of the ramp by symmetry of the quintic smoothstep
    CHECK(eta_at(1.5 * a, a) == Catch::Approx(0.5).margin(1e-15));
    // strictly decreasing across the ramp
    double prev = 1.0;
    for (int i = 1; i <= 20; ++i) {
        const double r = a + (a * i) / 20.0;
        const double v = eta_at(r, a);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("cutoff weight ramp is twice differentiable at both ends") {
    // second difference stays bounded through r = a and r = 2a
    const double a = 1.0;
    const double h = 1e-4;
    for (double r0 : {a, 2.0 * a}) {
        const double second =
            (eta_at(r0 + h, a) - 2.0 * eta_at(r0, a) + eta_at(r0 - h, a)) / (h * h);
        CHECK(std::abs(second) < 1e-2);
    }
}

TEST_CASE("default radius follows the reference central moment") {
    const std::vector<double> v0{0.0, 1.0};
    CHECK(default_radius(v0, 2) == Catch::Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-15));
    const std::vector<double> shifted{2.0, 5.0};
    CHECK(default_radius(shifted, 4) == Catch::Approx(1.0 / 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(default_radius(std::vector<double>{1.0, 1.0}, 2), DegenerateMomentsError);
}

TEST_CASE("presets vanish at their reference point") {
    const auto lv = log_variance_g({0.0, 1.0});
    const auto sk = skewness_g({0.0, 1.0, 0.0});
    const auto ku = excess_kurtosis_g({0.0, 1.0, 0.0, 3.0});
    CHECK(lv.evaluate(lv.v0) == 0.0);
    CHECK(sk.evaluate(sk.v0) == 0.0);
    CHECK(ku.evaluate(ku.v0) == 0.0);
}

TEST_CASE("preset values at hand-computed moment vectors") {
    const auto lv = log_variance_g({0.0, 1.0});
    const std::vector<double> x{0.0, std::exp(1.0)};
    CHECK(lv.evaluate(x) == Catch::Approx(1.0).epsilon(1e-14));

    const auto sk = skewness_g({0.0, 1.0, 0.0});
    const std::vector<double> y{0.0, 1.0, 2.0};
    CHECK(sk.evaluate(y) == Catch::Approx(2.0).epsilon(1e-14));

    const auto ku = excess_kurtosis_g({0.0, 1.0, 0.0, 3.0});
    const std::vector<double> z{0.0, 1.0, 0.0, 9.0};
    CHECK(ku.evaluate(z) == Catch::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("preset values are translation-consistent with central moments") {
    // moments of X+c shift the raw moments but not the central functionals
    const double c = 0.75;
    // X with mean 0.2, E X^2 = 1.5, E X^3 = 0.9, E X^4 = 6.0
    const double m1 = 0.2, m2 = 1.5, m3 = 0.9, m4 = 6.0;
    const double s1 = m1 + c;
    const double s2 = m2 + 2 * c * m1 + c * c;
    const double s3 = m3 + 3 * c * m2 + 3 * c * c * m1 + c * c * c;
    const double s4 = m4 + 4 * c * m3 + 6 * c * c * m2 + 4 * c * c * c * m1 + c * c * c * c;
    const auto ku = excess_kurtosis_g({0.0, 1.0, 0.0, 3.0});
    const std::vector<double> base{m1, m2, m3, m4};
    const std::vector<double> moved{s1, s2, s3, s4};
    CHECK(ku.evaluate(moved) == Catch::Approx(ku.evaluate(base)).margin(1e-11));
}

TEST_CASE("analytic gradients agree with finite differences") {
    const auto lv = log_variance_g({0.1, 1.3});
    const auto sk = skewness_g({0.1, 1.3, 0.4});
    const auto ku = excess_kurtosis_g({0.1, 1.3, 0.4, 5.5});
    const std::vector<double> p2{0.15, 1.2};
    const std::vector<double> p3{0.15, 1.2, 0.3};
    const std::vector<double> p4{0.15, 1.2, 0.3, 5.0};
    CHECK(gradient_check(lv, p2) < 1e-7);
    CHECK(gradient_check(sk, p3) < 1e-7);
    CHECK(gradient_check(ku, p4) < 1e-7);
}

TEST_CASE("custom functionals honor centering") {
    const auto raw_fn = [](std::span<const double> x) { return x[1] + 10.0; };
    const auto grad_fn = [](std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
        out[1] = 1.0;
    };
    const auto centered = custom_g("shifted", 2, {0.0, 1.0}, 0.5, raw_fn, grad_fn, true);
    CHECK(centered.evaluate(centered.v0) == 0.0);
    const auto uncentered = custom_g("shifted", 2, {0.0, 1.0}, 0.5, raw_fn, grad_fn, false);
    CHECK(uncentered.evaluate(uncentered.v0) == 11.0);
    CHECK_THROWS_AS(custom_g("bad", 2, {0.0}, 0.5, raw_fn, grad_fn, false),
                    DegenerateMomentsError);
    CHECK_THROWS_AS(custom_g("bad", 2, {0.0, 1.0}, 0.0, raw_fn, grad_fn, false),
                    DegenerateMomentsError);
}

TEST_CASE("truncated evaluation never touches the raw functional outside the cutoff") {
    int calls = 0;
    const auto g = custom_g(
        "counting", 2, {0.0, 1.0}, 0.25,
        [&calls](std::span<const double> x) {
            ++calls;
            return x[0];
        },
        [](std::span<const double>, std::span<double> out) {
            out[0] = 1.0;
            out[1] = 0.0;
        },
        false);
    const std::vector<double> far{100.0, 1.0};
    CHECK(g.truncated(far) == 0.0);
    CHECK(calls == 0);
    const std::vector<double> inside{0.1, 1.0};
    CHECK(g.truncated(inside) == Catch::Approx(0.1).epsilon(1e-15));
    CHECK(calls == 1);
}

TEST_CASE("sampled difference quotient brackets the slope of a linear functional") {
    const auto g = custom_g(
        "first", 2, {0.0, 1.0}, 0.5,
        [](std::span<const double> x) { return x[0]; },
        [](std::span<const double>, std::span<double> out) {
            out[0] = 1.0;
            out[1] = 0.0;
        },
        true);
    const double slope = lipschitz_estimate(g, 20'000, 7);
    // plateau slope is 1; the ramp can add at most |g| * sup|eta'| ~ 1.875 * 2
    CHECK(slope >= 0.95);
    CHECK(slope <= 5.0);
}

TEST_CASE("preset registry rejects unknown names") {
    CHECK_THROWS_AS(preset_g("median", {0.0, 1.0}), DegenerateMomentsError);
}
