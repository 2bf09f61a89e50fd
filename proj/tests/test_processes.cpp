#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "blockstat/errors.hpp"
#include "blockstat/processes.hpp"

using namespace blockstat;
using namespace blockstat::processes;

namespace {

ProcessSpec iid_normal(std::uint64_t seed = 1) {
    ProcessSpec spec;
    spec.variant = IidSpec{Innovation::normal};
    spec.seed = seed;
    return spec;
}

ProcessSpec ar_process(double phi, Innovation innovation = Innovation::normal,
                       std::uint64_t seed = 1) {
    CoeffSpec c;
    c.kind = CoeffSpec::Kind::geometric;
    c.scale = 1.0;
    c.rate = phi;
    ProcessSpec spec;
    spec.variant = LinearSpec{c, innovation};
    spec.seed = seed;
    return spec;
}

ProcessSpec ma1_process(double theta, std::uint64_t seed = 1) {
    CoeffSpec c;
    c.kind = CoeffSpec::Kind::list;
    c.values = {1.0, theta};
    ProcessSpec spec;
    spec.variant = LinearSpec{c, Innovation::normal};
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("innovation moments are unit variance with known shapes") {
    CHECK(innovation_moment(Innovation::normal, 1) == 0.0);
    CHECK(innovation_moment(Innovation::normal, 2) == 1.0);
    CHECK(innovation_moment(Innovation::normal, 4) == 3.0);
    CHECK(innovation_moment(Innovation::uniform, 2) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(innovation_moment(Innovation::uniform, 4) == Catch::Approx(9.0 / 5.0).epsilon(1e-14));
    CHECK(innovation_moment(Innovation::rademacher, 2) == 1.0);
    CHECK(innovation_moment(Innovation::rademacher, 4) == 1.0);
    CHECK(innovation_moment(Innovation::rademacher, 3) == 0.0);
}

TEST_CASE("independent-difference moments match closed forms") {
    // unit-variance innovations all share E (eps - eps')^2 = 2
    for (auto kind : {Innovation::normal, Innovation::uniform, Innovation::rademacher}) {
        CHECK(innovation_diff_abs_moment(kind, 2.0) == Catch::Approx(2.0).epsilon(1e-12));
    }
    CHECK(innovation_diff_abs_moment(Innovation::normal, 1.0) ==
          Catch::Approx(2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
    CHECK(innovation_diff_abs_moment(Innovation::uniform, 1.0) ==
          Catch::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-12));
    // rademacher: |e - e'| is 0 or 2 with equal chance
    CHECK(innovation_diff_abs_moment(Innovation::rademacher, 1.0) ==
          Catch::Approx(1.0).epsilon(1e-12));
    CHECK(innovation_diff_abs_moment(Innovation::rademacher, 4.0) ==
          Catch::Approx(8.0).epsilon(1e-12));
    // normal p = 4: E N(0,2)^4 = 3 * 4
    CHECK(innovation_diff_abs_moment(Innovation::normal, 4.0) ==
          Catch::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("materialized filters cover their tails") {
    CoeffSpec geo;
    geo.kind = CoeffSpec::Kind::geometric;
    geo.scale = 2.0;
    geo.rate = 0.5;
    const Filter f = materialize(geo);
    CHECK(f.min_lag == 0);
    CHECK(f.coeffs.front() == 2.0);
    // discarded tail is below the cutoff target
    const double tail = std::abs(f.coeffs.back()) * 0.5 / (1.0 - 0.5);
    CHECK(tail < 2e-8);

    CoeffSpec two;
    two.kind = CoeffSpec::Kind::two_sided_geometric;
    two.scale = 1.0;
    two.rate = 0.5;
    two.window = 8;
    const Filter g = materialize(two);
    CHECK(g.min_lag == -8);
    CHECK(g.max_lag() == 8);
    CHECK(g.at_lag(-3) == g.at_lag(3));
    CHECK(g.at_lag(0) == 1.0);
    CHECK(g.at_lag(100) == 0.0);

    CoeffSpec lst;
    lst.kind = CoeffSpec::Kind::list;
    lst.values = {0.5, -0.25};
    lst.offset = -1;
    const Filter h = materialize(lst);
    CHECK(h.min_lag == -1);
    CHECK(h.at_lag(-1) == 0.5);
    CHECK(h.at_lag(0) == -0.25);
}

TEST_CASE("inadmissible coefficient families are rejected") {
    CoeffSpec bad_rate;
    bad_rate.kind = CoeffSpec::Kind::geometric;
    bad_rate.rate = 1.0;
    CHECK_THROWS_AS(materialize(bad_rate), InvalidCoefficientsError);

    CoeffSpec bad_exp;
    bad_exp.kind = CoeffSpec::Kind::power;
    bad_exp.exponent = 0.5;
    CHECK_THROWS_AS(materialize(bad_exp), InvalidCoefficientsError);

    CoeffSpec empty;
    empty.kind = CoeffSpec::Kind::list;
    CHECK_THROWS_AS(materialize(empty), InvalidCoefficientsError);
}

TEST_CASE("weighted tail bounds dominate brute-force tails") {
    const double weight = 1.5;

    CoeffSpec lst;
    lst.kind = CoeffSpec::Kind::list;
    lst.values = {1.0, 2.0};
    CHECK(weighted_tail_bound(lst, weight, 2).value() == 0.0);

    CoeffSpec geo;
    geo.kind = CoeffSpec::Kind::geometric;
    geo.scale = 1.5;
    geo.rate = 0.7;
    const std::size_t window = 40;
    const auto bound = weighted_tail_bound(geo, weight, window);
    REQUIRE(bound.has_value());
    double brute = 0.0;
    for (std::size_t j = window + 1; j < 4000; ++j) {
        brute += std::pow(static_cast<double>(j), weight) * 1.5 *
                 std::pow(0.7, static_cast<double>(j));
    }
    CHECK(brute <= bound.value());
    CHECK(bound.value() < 10.0 * brute + 1e-12);

    CoeffSpec pow_ok;
    pow_ok.kind = CoeffSpec::Kind::power;
    pow_ok.scale = 1.0;
    pow_ok.exponent = 4.0;
    const auto pow_bound = weighted_tail_bound(pow_ok, weight, 50);
    REQUIRE(pow_bound.has_value());
    double pow_brute = 0.0;
    for (std::size_t j = 51; j < 2'000'000; ++j) {
        pow_brute += std::pow(static_cast<double>(j), weight) *
                     std::pow(static_cast<double>(j + 1), -4.0);
    }
    CHECK(pow_brute <= pow_bound.value());

    CoeffSpec pow_slow;
    pow_slow.kind = CoeffSpec::Kind::power;
    pow_slow.exponent = 2.0;
    CHECK_FALSE(weighted_tail_bound(pow_slow, weight, 50).has_value());
}

TEST_CASE("pointwise transforms evaluate and classify smoothness") {
    Transform t;
    t.name = "abs_power";
    t.param = 0.5;
    CHECK(t(4.0) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(t(-4.0) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(t.hoelder_exponent() == 0.5);

    t.name = "signed_power";
    CHECK(t(-4.0) == Catch::Approx(-2.0).epsilon(1e-15));

    t.name = "square_centered";
    CHECK(t(3.0) == 8.0);
    t.name = "cube";
    CHECK(t(-2.0) == -8.0);
    t.name = "cosine";
    CHECK(t(0.0) == 1.0);
    CHECK(t.hoelder_exponent() == 1.0);

    t.name = "nope";
    CHECK_THROWS_AS(t(1.0), IoError);
}

TEST_CASE("generation is deterministic in the spec") {
    const auto a = generate(iid_normal(42), 64);
    const auto b = generate(iid_normal(42), 64);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values[i] == b.values[i]);
    const auto c = generate(iid_normal(43), 64);
    std::size_t differing = 0;
    for (std::size_t i = 0; i < a.size(); ++i) differing += a.values[i] != c.values[i];
    CHECK(differing > 32);
    CHECK_THROWS_AS(generate(iid_normal(), 0), EmptySeriesError);
}

TEST_CASE("length extension is consistent") {
    // the first n values do not depend on how many more are generated
    const auto longer = generate(ar_process(0.5), 256);
    const auto shorter = generate(ar_process(0.5), 100);
    for (std::size_t i = 0; i < shorter.size(); ++i) {
        CHECK(shorter.values[i] == longer.values[i]);
    }
}

TEST_CASE("identity filter reproduces the iid process bitwise") {
    CoeffSpec ident;
    ident.kind = CoeffSpec::Kind::list;
    ident.values = {1.0};
    ProcessSpec lin;
    lin.variant = LinearSpec{ident, Innovation::normal};
    lin.seed = 9;
    const auto a = generate(lin, 128);
    const auto b = generate(iid_normal(9), 128);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("geometric filter satisfies the autoregressive recursion") {
    const double phi = 0.5;
    const auto x = generate(ar_process(phi), 300);
    const ProcessSpec spec = ar_process(phi);
    for (std::size_t t = 1; t < 300; ++t) {
        const double eps_t = innovation_at(spec, static_cast<std::int64_t>(t + 1));
        const double predicted = phi * x.values[t - 1] + eps_t;
        CHECK(x.values[t] == Catch::Approx(predicted).margin(1e-7));
    }
}

TEST_CASE("coupled paths differ exactly on the filter footprint") {
    const ProcessSpec spec = ma1_process(0.5, 3);
    const std::int64_t i = 50;
    const auto [base, swapped] = generate_coupled(spec, 100, i);
    const double shift = replacement_innovation_at(spec, i) - innovation_at(spec, i);
    for (std::size_t t = 1; t <= 100; ++t) {
        const double gap = swapped.values[t - 1] - base.values[t - 1];
        if (t == 50) {
            CHECK(gap == Catch::Approx(shift).margin(1e-12));
        } else if (t == 51) {
            CHECK(gap == Catch::Approx(0.5 * shift).margin(1e-12));
        } else {
            CHECK(gap == 0.0);
        }
    }
}

TEST_CASE("coupled pair at the origin respects the coefficient at the swap") {
    const ProcessSpec spec = ma1_process(0.75, 5);
    // swap at a future index never reaches X_0
    for (std::uint64_t r = 0; r < 32; ++r) {
        const auto [x, xs] = coupled_pair_at_zero(spec, 1, r);
        CHECK(x == xs);
    }
    // swap at 0 moves X_0 through the leading coefficient
    std::size_t moved = 0;
    for (std::uint64_t r = 0; r < 32; ++r) {
        const auto [x, xs] = coupled_pair_at_zero(spec, 0, r);
        moved += x != xs;
    }
    CHECK(moved == 32);
    // swap at -1 moves X_0 through the lagged coefficient
    const auto [x0, x0s] = coupled_pair_at_zero(spec, -1, 7);
    CHECK(x0 != x0s);
}

TEST_CASE("volterra processes are centered products with no diagonal") {
    VolterraSpec vol;
    vol.entries = {{0, 1, 1.0}};
    ProcessSpec spec;
    spec.variant = vol;
    spec.seed = 2;
    const auto x = generate(spec, 200);
    for (std::size_t t = 1; t <= 200; ++t) {
        const double e0 = innovation_at(spec, static_cast<std::int64_t>(t));
        const double e1 = innovation_at(spec, static_cast<std::int64_t>(t) - 1);
        CHECK(x.values[t - 1] == Catch::Approx(e0 * e1).margin(1e-13));
    }
    VolterraSpec diagonal;
    diagonal.entries = {{2, 2, 1.0}};
    ProcessSpec bad;
    bad.variant = diagonal;
    const auto reject = [&] { return generate(bad, 4); };
    CHECK_THROWS_AS(reject(), InvalidCoefficientsError);
}

TEST_CASE("pathological marginal hits its two visible atoms evenly") {
    ProcessSpec spec;
    spec.variant = PathologicalSpec{};
    spec.seed = 8;
    const std::size_t n = 1 << 16;
    const auto x = generate(spec, n);
    const double visible = std::sqrt(std::exp(-std::exp(std::exp(1.0))));
    std::size_t at_visible = 0, at_zero = 0, negative = 0;
    for (double v : x.values) {
        if (v == 0.0) ++at_zero;
        if (std::abs(std::abs(v) - visible) < 1e-12 * visible) ++at_visible;
        if (std::signbit(v)) ++negative;
    }
    CHECK(at_visible + at_zero == n);
    // each about half, within 5 sigma of binomial noise
    const double half_band = 5.0 * 0.5 * std::sqrt(static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(at_visible) - 0.5 * n) < half_band);
    CHECK(std::abs(static_cast<double>(negative) - 0.5 * n) < half_band);
}

TEST_CASE("pathological coupling replaces exactly the swapped time") {
    ProcessSpec spec;
    spec.variant = PathologicalSpec{};
    spec.seed = 4;
    const auto [base, swapped] = generate_coupled(spec, 32, 10);
    for (std::size_t t = 1; t <= 32; ++t) {
        if (t != 10) CHECK(base.values[t - 1] == swapped.values[t - 1]);
    }
    const rng::CounterRng gen(detail::replacement_key(spec));
    const double expected = detail::pathological_value(gen, 10, 30);
    CHECK(swapped.values[9] == expected);
}

TEST_CASE("population moments of closed-form variants") {
    const auto iid = population_moments(iid_normal(), 4);
    CHECK(iid.analytic);
    CHECK(iid.values[0] == 0.0);
    CHECK(iid.values[1] == 1.0);
    CHECK(iid.values[2] == 0.0);
    CHECK(iid.values[3] == 3.0);

    const auto ar = population_moments(ar_process(0.5, Innovation::rademacher), 4);
    CHECK(ar.analytic);
    CHECK(ar.values[1] == Catch::Approx(4.0 / 3.0).epsilon(1e-9));
    CHECK(ar.values[3] == Catch::Approx(16.0 / 15.0 * (-2.0) + 3.0 * (4.0 / 3.0) * (4.0 / 3.0))
                              .epsilon(1e-8));

    VolterraSpec vol;
    vol.entries = {{0, 1, 1.0}};
    ProcessSpec vspec;
    vspec.variant = vol;
    const auto vmom = population_moments(vspec, 2);
    CHECK(vmom.analytic);
    CHECK(vmom.values[0] == 0.0);
    CHECK(vmom.values[1] == Catch::Approx(1.0).epsilon(1e-12));

    HoelderLinearSpec hoe;
    hoe.phi = Transform{"identity", 0.0};
    CoeffSpec ident;
    ident.kind = CoeffSpec::Kind::list;
    ident.values = {1.0};
    hoe.coeffs = ident;
    ProcessSpec hspec;
    hspec.variant = hoe;
    const auto hmom = population_moments(hspec, 4);
    CHECK(hmom.analytic);
    CHECK(hmom.values[1] == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(hmom.values[3] == Catch::Approx(3.0).epsilon(1e-11));
}

TEST_CASE("monte carlo moments agree with closed forms when forced") {
    // order 5 forces the sampling route for linear processes
    const auto mc = population_moments(ma1_process(0.5, 77), 5, 200'000);
    CHECK_FALSE(mc.analytic);
    CHECK(mc.values[1] == Catch::Approx(1.25).margin(0.02));
    CHECK(std::abs(mc.values[0]) < 0.02);
}

TEST_CASE("latent gaussian reduction exposes the filter correlation") {
    const auto lat = latent_gaussian(ar_process(0.5));
    REQUIRE(lat.has_value());
    CHECK(lat->sigma_y == Catch::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-7));
    REQUIRE(lat->rho.size() >= 3);
    CHECK(lat->rho[0] == 1.0);
    CHECK(lat->rho[1] == Catch::Approx(0.5).epsilon(1e-7));
    CHECK(lat->rho[2] == Catch::Approx(0.25).epsilon(1e-7));
    CHECK(lat->x_of_z(1.0) == Catch::Approx(lat->sigma_y).epsilon(1e-12));

    CHECK_FALSE(latent_gaussian(ar_process(0.5, Innovation::rademacher)).has_value());

    VolterraSpec vol;
    vol.entries = {{0, 1, 1.0}};
    ProcessSpec vspec;
    vspec.variant = vol;
    CHECK_FALSE(latent_gaussian(vspec).has_value());
}

TEST_CASE("hermite expansion recovers polynomial coefficients exactly") {
    const auto sq = hermite_expand([](double z) { return z * z - 1.0; }, 6);
    CHECK(std::abs(sq.coeffs[0]) < 1e-12);
    CHECK(std::abs(sq.coeffs[1]) < 1e-12);
    CHECK(sq.coeffs[2] == Catch::Approx(1.0).epsilon(1e-11));
    CHECK(std::abs(sq.coeffs[3]) < 1e-10);
    CHECK(sq.variance == Catch::Approx(2.0).epsilon(1e-10));

    const auto cube = hermite_expand([](double z) { return z * z * z; }, 6);
    CHECK(cube.coeffs[1] == Catch::Approx(3.0).epsilon(1e-11));
    CHECK(cube.coeffs[3] == Catch::Approx(1.0).epsilon(1e-10));
    // variance: 1! 3^2 + 3! 1^2 = 15
    CHECK(cube.variance == Catch::Approx(15.0).epsilon(1e-10));
}

TEST_CASE("hermite expansion handles the absolute-value kink accurately") {
    const auto av = hermite_expand([](double z) { return std::abs(z); }, 8);
    const double c0 = std::sqrt(2.0 / std::numbers::pi);
    CHECK(av.coeffs[0] == Catch::Approx(c0).epsilon(1e-11));
    CHECK(std::abs(av.coeffs[1]) < 1e-12);
    // c_2 = E |z| He_2(z) / 2! = (E|z|^3 - E|z|) / 2 = (2 c0 - c0) / 2
    CHECK(av.coeffs[2] == Catch::Approx(c0 / 2.0).epsilon(1e-10));
}

TEST_CASE("hermite expansion rejects non square integrable transforms") {
    CHECK_THROWS_AS(hermite_expand([](double z) { return std::exp(z * z); }, 4),
                    NonSquareIntegrableError);
}

TEST_CASE("process specs round trip through json") {
    ProcessSpec ar = ar_process(0.7, Innovation::uniform, 123);
    const auto j = to_json(ar);
    const ProcessSpec back = from_json(j);
    const auto a = generate(ar, 50);
    const auto b = generate(back, 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(a.values[i] == b.values[i]);

    VolterraSpec vol;
    vol.entries = {{0, 2, 0.5}, {1, 3, -0.25}};
    vol.innovation = Innovation::rademacher;
    ProcessSpec vspec;
    vspec.variant = vol;
    vspec.seed = 55;
    const ProcessSpec vback = from_json(to_json(vspec));
    const auto va = generate(vspec, 64);
    const auto vb = generate(vback, 64);
    for (std::size_t i = 0; i < 64; ++i) CHECK(va.values[i] == vb.values[i]);

    GaussianHermiteSpec gh;
    gh.hermite_coeffs = {0.5, 0.0, 1.0};
    CoeffSpec geo;
    geo.kind = CoeffSpec::Kind::geometric;
    geo.rate = 0.4;
    gh.coeffs = geo;
    ProcessSpec gspec;
    gspec.variant = gh;
    gspec.seed = 7;
    const ProcessSpec gback = from_json(to_json(gspec));
    const auto ga = generate(gspec, 64);
    const auto gb = generate(gback, 64);
    for (std::size_t i = 0; i < 64; ++i) CHECK(ga.values[i] == gb.values[i]);

    ProcessSpec path;
    path.variant = PathologicalSpec{12};
    path.seed = 99;
    const ProcessSpec pback = from_json(to_json(path));
    const auto pa = generate(path, 64);
    const auto pb = generate(pback, 64);
    for (std::size_t i = 0; i < 64; ++i) CHECK(pa.values[i] == pb.values[i]);
}

TEST_CASE("json rejects malformed specs") {
    CHECK_THROWS_AS(from_json(nlohmann::json{{"variant", "nope"}}), IoError);
    nlohmann::json missing;
    missing["variant"] = "linear";
    CHECK_THROWS_AS(from_json(missing), IoError);
}
