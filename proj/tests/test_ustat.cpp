#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/rng.hpp"
#include "blockstat/stats.hpp"
#include "blockstat/ustat.hpp"

using namespace blockstat;
using namespace blockstat::ustat;

TEST_CASE("pair statistic on tiny vectors by hand") {
    const std::vector<double> w{1.0, 2.0, 4.0};
    CHECK(u_statistic(w, kernels::gini()) == Catch::Approx(2.0).epsilon(1e-15));
    // mean pairwise squared difference: (1 + 9 + 4) / 3
    CHECK(u_statistic(w, kernels::squared_difference()) ==
          Catch::Approx(14.0 / 3.0).epsilon(1e-15));
    // mean pairwise sum doubles the mean
    const std::vector<double> v{1.0, 2.0, 3.0};
    CHECK(u_statistic(v, kernels::sum()) == Catch::Approx(4.0).epsilon(1e-15));
    // mean pairwise product: (S^2 - sum of squares) / (b (b-1))
    CHECK(u_statistic(v, kernels::product()) ==
          Catch::Approx((36.0 - 14.0) / 6.0).epsilon(1e-15));
}

TEST_CASE("pair statistic with a single distant block value") {
    const std::vector<double> w{0.0, 0.0, 0.0, 0.0, 1.0};
    CHECK(u_statistic(w, kernels::gini()) == Catch::Approx(2.0 / 5.0).epsilon(1e-15));
}

TEST_CASE("pair statistic needs at least two blocks") {
    const std::vector<double> w{1.0};
    CHECK_THROWS_AS(u_statistic(w, kernels::gini()), TooFewBlocksError);
}

TEST_CASE("sorted identity matches the quadratic evaluation") {
    const rng::CounterRng gen(rng::derive_key(11, rng::tag_stream("test-gini")));
    std::vector<double> w(257);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = gen.normal(static_cast<std::int64_t>(i), 0) * 3.0 + 0.5;
    }
    const double slow = u_statistic(w, kernels::gini());
    const double fast = gini_u_statistic(w);
    CHECK(fast == Catch::Approx(slow).epsilon(1e-12));
    CHECK(u_statistic_auto(w, kernels::gini()) == fast);
}

TEST_CASE("kernel registry and validation") {
    CHECK(kernel_by_name("gini").difference_form);
    CHECK(kernel_by_name("sqdiff").difference_form);
    CHECK_FALSE(kernel_by_name("product").difference_form);
    CHECK_THROWS_AS(kernel_by_name("median"), Error);

    const auto report = validate_kernel(kernels::gini(), 10.0, 2000, 3);
    CHECK(report.worst_symmetry_gap == 0.0);
    CHECK(report.growth_ok);
    CHECK(report.sampled_lipschitz <= 1.0 + 1e-12);
}

TEST_CASE("difference kernels are shift invariant on representable shifts") {
    const auto gini_k = kernels::gini();
    const auto sq = kernels::squared_difference();
    const double xs[] = {-3.0, -0.5, 0.25, 1.0, 7.5};
    for (double c : {0.5, 2.0, -4.25}) {
        for (double x : xs) {
            for (double y : xs) {
                CHECK(gini_k.h(x + c, y + c) == gini_k.h(x, y));
                CHECK(sq.h(x + c, y + c) == sq.h(x, y));
            }
        }
    }
}

TEST_CASE("discrete distribution construction is validated") {
    CHECK_THROWS_AS(make_discrete({1.0, 2.0}, {0.5}), Error);
    CHECK_THROWS_AS(make_discrete({1.0, 2.0}, {0.7, 0.5}), Error);
    CHECK_THROWS_AS(make_discrete({1.0, 2.0}, {-0.1, 1.1}), Error);
    CHECK_NOTHROW(make_discrete({1.0, 2.0}, {0.4, 0.6}));
}

TEST_CASE("projection decomposition of the pairwise distance on coin flips") {
    const auto dist = WDistribution{make_discrete({0.0, 1.0}, {0.5, 0.5})};
    const auto parts = hoeffding(kernels::gini(), dist);
    CHECK(parts.mode == "exact-discrete");
    CHECK(parts.theta == Catch::Approx(0.5).margin(1e-15));
    CHECK(parts.h1(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(parts.h1(1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(parts.h2(0.0, 1.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(parts.h2(0.0, 0.0) == Catch::Approx(-0.5).margin(1e-15));
    // the projection variance vanishes: standardization must refuse
    CHECK_THROWS_AS(gamma_n_squared(kernels::gini(), dist), DegenerateKernelError);
}

TEST_CASE("projection decomposition reconstructs the kernel exactly") {
    const auto dist = WDistribution{make_discrete({0.0, 1.0, 3.0}, {0.2, 0.3, 0.5})};
    const auto& d = std::get<DiscreteDist>(dist);
    for (const auto& kernel :
         {kernels::gini(), kernels::sum(), kernels::product(), kernels::squared_difference()}) {
        const auto parts = hoeffding(kernel, dist);
        double mean_h1 = 0.0;
        for (std::size_t i = 0; i < d.atoms.size(); ++i) {
            mean_h1 += d.probs[i] * parts.h1(d.atoms[i]);
        }
        CHECK(std::abs(mean_h1) < 1e-12);
        for (std::size_t i = 0; i < d.atoms.size(); ++i) {
            double row_mean = 0.0;
            for (std::size_t j = 0; j < d.atoms.size(); ++j) {
                const double x = d.atoms[i];
                const double y = d.atoms[j];
                const double rebuilt =
                    parts.theta + parts.h1(x) + parts.h1(y) + parts.h2(x, y);
                CHECK(rebuilt == Catch::Approx(kernel.h(x, y)).margin(1e-12));
                row_mean += d.probs[j] * parts.h2(x, y);
            }
            CHECK(std::abs(row_mean) < 1e-12);
        }
    }
}

TEST_CASE("normal reference mean of the pairwise distance") {
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (double sigma : {1.0, 2.0}) {
        const auto parts = hoeffding(kernels::gini(), NormalDist{sigma});
        CHECK(parts.mode == "gaussian-quadrature");
        CHECK(parts.theta == Catch::Approx(sigma * two_over_sqrt_pi).epsilon(1e-12));
    }
}

TEST_CASE("projection variance of the pairwise distance under a normal reference") {
    const double exact = 1.0 / 3.0 + (2.0 * std::sqrt(3.0) - 4.0) / std::numbers::pi;
    CHECK(gamma_n_squared(kernels::gini(), NormalDist{1.0}) ==
          Catch::Approx(exact).epsilon(1e-10));
    // scales with sigma^2 because the kernel is 1-homogeneous
    CHECK(gamma_n_squared(kernels::gini(), NormalDist{2.0}) ==
          Catch::Approx(4.0 * exact).epsilon(1e-10));
}

TEST_CASE("projection variance of the squared difference under a normal reference") {
    for (double sigma : {1.0, 1.7}) {
        const double s2 = sigma * sigma;
        CHECK(gamma_n_squared(kernels::squared_difference(), NormalDist{sigma}) ==
              Catch::Approx(2.0 * s2 * s2).epsilon(1e-11));
    }
}

TEST_CASE("product kernel degenerates under a centered reference") {
    const auto sym = WDistribution{make_discrete({-1.0, 1.0}, {0.5, 0.5})};
    CHECK_THROWS_AS(gamma_n_squared(kernels::product(), sym), DegenerateKernelError);
    try {
        (void)gamma_n_squared(kernels::product(), sym);
    } catch (const DegenerateKernelError& e) {
        CHECK(e.exit_code() == 2);
    }
}

TEST_CASE("empirical reference centers the projection exactly") {
    const std::vector<double> sample{1.0, 2.0, 4.0};
    const auto dist = WDistribution{EmpiricalDist{sample}};
    const auto parts = hoeffding(kernels::gini(), dist);
    CHECK(parts.mode == "empirical");
    CHECK(parts.theta == Catch::Approx(12.0 / 9.0).epsilon(1e-15));
    double mean_h1 = 0.0;
    for (double s : sample) mean_h1 += parts.h1(s);
    CHECK(std::abs(mean_h1) < 1e-14);
}

TEST_CASE("doubly centered remainder contributes at the degenerate rate") {
    // The remainder sum over distinct pairs, scaled by b^{3/2}, has second
    // moment 2 (b-1) E[h2^2] / (b^2 gamma^2): the closed form decays like 1/b
    // and the sampled average must track it.
    const auto dist = make_discrete({0.0, 1.0, 3.0}, {0.2, 0.3, 0.5});
    const auto kernel = kernels::gini();
    const auto parts = hoeffding(kernel, WDistribution{dist});
    const double gamma_sq = gamma_n_squared(kernel, WDistribution{dist});
    double h2_sq = 0.0;
    for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
        for (std::size_t j = 0; j < dist.atoms.size(); ++j) {
            const double v = parts.h2(dist.atoms[i], dist.atoms[j]);
            h2_sq += dist.probs[i] * dist.probs[j] * v * v;
        }
    }
    const rng::CounterRng gen(rng::derive_key(29, rng::tag_stream("test-h2")));
    std::vector<double> cdf(dist.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        acc += dist.probs[i];
        cdf[i] = acc;
    }
    std::int64_t draw_index = 0;
    const auto draw = [&]() {
        const double u = gen.uniform(draw_index++, 0);
        for (std::size_t i = 0; i < cdf.size(); ++i) {
            if (u <= cdf[i]) return dist.atoms[i];
        }
        return dist.atoms.back();
    };
    double previous = 0.0;
    for (std::size_t b : {25, 50, 100}) {
        const std::size_t reps = 400;
        const double closed = 2.0 * static_cast<double>(b - 1) * h2_sq /
                              (static_cast<double>(b) * static_cast<double>(b) * gamma_sq);
        double mean_sq = 0.0;
        std::vector<double> w(b);
        for (std::size_t r = 0; r < reps; ++r) {
            for (auto& x : w) x = draw();
            double pair_sum = 0.0;
            for (std::size_t j = 0; j < b; ++j) {
                for (std::size_t k = 0; k < b; ++k) {
                    if (j != k) pair_sum += parts.h2(w[j], w[k]);
                }
            }
            const double t = pair_sum /
                             (std::pow(static_cast<double>(b), 1.5) * std::sqrt(gamma_sq));
            mean_sq += t * t;
        }
        mean_sq /= static_cast<double>(reps);
        CHECK(mean_sq > 0.5 * closed);
        CHECK(mean_sq < 2.0 * closed);
        if (previous > 0.0) CHECK(mean_sq < previous);
        previous = mean_sq;
    }
}

TEST_CASE("standardization by hand") {
    const std::vector<double> w{1.0, 2.0, 4.0};
    const auto report =
        standardized_statistic(w, kernels::gini(), 1.0, 0.25, "given");
    CHECK(report.u_stat == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(report.standardized == Catch::Approx(std::sqrt(3.0)).epsilon(1e-14));
    CHECK(report.p_value ==
          Catch::Approx(std::erfc(std::sqrt(3.0) / std::sqrt(2.0))).epsilon(1e-13));
    CHECK(report.block_count == 3);
    CHECK_THROWS_AS(standardized_statistic(w, kernels::gini(), 0.0, 0.0, "given"),
                    DegenerateKernelError);
}
