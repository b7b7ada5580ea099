#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "detcomm/analysis.hpp"
#include "test_util.hpp"

using namespace detcomm;
using detcomm::test::within_3sigma;

TEST_CASE("chi-square survival matches reference values") {
    // frozen from an independent statistics package
    CHECK(chi_square_survival(2.0, 1) == doctest::Approx(0.15729920705028105).epsilon(1e-12));
    CHECK(chi_square_survival(7.81, 1) == doctest::Approx(0.005195790429763153).epsilon(1e-9));
    CHECK(chi_square_survival(2.0, 2) == doctest::Approx(0.36787944117144245).epsilon(1e-12));
    CHECK(chi_square_survival(16.27, 2) == doctest::Approx(0.00029309903577510673).epsilon(1e-9));
    CHECK(chi_square_survival(0.5, 3) == doctest::Approx(0.9188914116546758).epsilon(1e-12));
    CHECK(chi_square_survival(7.81, 3) == doctest::Approx(0.05010605635000589).epsilon(1e-9));
    CHECK(chi_square_survival(16.27, 3) == doctest::Approx(0.0009982232399054186).epsilon(1e-9));
    CHECK_THROWS_AS(chi_square_survival(1.0, 4), std::invalid_argument);
}

TEST_CASE("chi-square on counts: fair, biased, and impossible outcomes") {
    CHECK(chi_square_uniform_pvalue({25000, 25100, 24900, 25000}) > 0.001);
    // a deliberately biased sampler must be caught: the negative control
    CHECK(chi_square_uniform_pvalue({27000, 24000, 25000, 24000}) < 0.001);
    // any observation in a zero-probability category is fatal
    CHECK(chi_square_pvalue({100, 100, 100, 1}, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0}) == 0.0);
    CHECK(chi_square_pvalue({100, 100, 110, 0}, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0}) > 0.001);
}

TEST_CASE("sweeps are deterministic per seed and respect the floor") {
    const SweepResult first = sweep_strategies(SchemeParams::optimal(), 2000,
                                               ForwardingMode::AS_DETECTED, 90125);
    const SweepResult second = sweep_strategies(SchemeParams::optimal(), 2000,
                                                ForwardingMode::AS_DETECTED, 90125);
    CHECK(sweep_to_csv(first.rows) == sweep_to_csv(second.rows)); // byte-identical re-emission

    CHECK(first.summary.n_strategies == 2000);
    CHECK(first.summary.violations == 0);
    CHECK(first.summary.min_rate >= first.summary.bound - 1e-9);
    CHECK(first.summary.bound == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    const SweepResult other_seed = sweep_strategies(SchemeParams::optimal(), 2000,
                                                    ForwardingMode::AS_DETECTED, 90126);
    CHECK(sweep_to_csv(other_seed.rows) != sweep_to_csv(first.rows));

    const SweepResult simple = sweep_strategies(SchemeParams::simple(), 2000,
                                                ForwardingMode::RANDOM_FIXED, 4);
    CHECK(simple.summary.violations == 0);
    CHECK(simple.summary.min_rate >= 0.125 - 1e-9);

    CHECK_THROWS_AS(sweep_strategies(SchemeParams::optimal(), 0,
                                     ForwardingMode::AS_DETECTED, 1),
                    std::invalid_argument);
}

TEST_CASE("sweep CSV carries full-precision floats") {
    const SweepResult result =
        sweep_strategies(SchemeParams::optimal(), 3, ForwardingMode::AS_DETECTED, 8);
    const std::string csv = sweep_to_csv(result.rows);
    CHECK(csv.rfind("strategy_id,forwarding_mode,analytic_rate,empirical_rate,bound\n", 0) == 0);

    // every analytic rate round-trips through its printed form
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line); // header
    for (const SweepRow& row : result.rows) {
        REQUIRE(std::getline(lines, line));
        const std::size_t first = line.find(',');
        const std::size_t second = line.find(',', first + 1);
        const std::size_t third = line.find(',', second + 1);
        const double parsed = std::stod(line.substr(second + 1, third - second - 1));
        CHECK(parsed == row.analytic_rate);
    }
    CHECK(format_g17(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("empirical sweep rates agree with the analytic values") {
    const SweepResult result = sweep_strategies(SchemeParams::optimal(), 3,
                                                ForwardingMode::AS_DETECTED, 62,
                                                std::size_t{20000});
    for (const SweepRow& row : result.rows) {
        REQUIRE(row.empirical_rate.has_value());
        CHECK(within_3sigma(*row.empirical_rate, row.analytic_rate, 20000));
    }
}

TEST_CASE("scheme verification reports") {
    SUBCASE("symmetric preset: everything passes, no backdoor") {
        const SchemeReport report = verify_scheme(1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0),
                                                  1.0 / std::sqrt(3.0));
        CHECK(report.all_pass);
        CHECK_FALSE(report.backdoor.has_value());
        CHECK(report.bound == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("simple preset: passes with a QND advisory") {
        const SchemeReport report = verify_scheme(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0);
        CHECK(report.all_pass);
        REQUIRE(report.backdoor.has_value());
        CHECK(report.backdoor->eigenvalue_pattern == std::array<int, 4>{1, 0, 0, 1});
    }
    SUBCASE("unnormalized triple: normalization failure reported") {
        const SchemeReport report = verify_scheme(0.9, 0.3, 0.3);
        CHECK_FALSE(report.all_pass);
        REQUIRE(report.checks.size() == 1);
        CHECK(report.checks[0].name == "normalization");
        CHECK_FALSE(report.checks[0].pass);
    }
}

TEST_CASE("eve's outcome frequencies carry no bit information") {
    const auto [p_plus, p_minus] = uniformity_test(
        optimal_strategy(build_bases(SchemeParams::optimal())), SchemeParams::optimal(),
        100000, 7);
    CHECK(p_plus > 0.001);
    CHECK(p_minus > 0.001);

    RandomStream rng(71);
    const EveStrategy random_eve = random_strategy(rng, ForwardingMode::AS_DETECTED);
    const auto [q_plus, q_minus] = uniformity_test(random_eve, SchemeParams::optimal(),
                                                   100000, 8);
    CHECK(q_plus > 0.001);
    CHECK(q_minus > 0.001);

    CHECK_THROWS_AS(uniformity_test(EveStrategy::none(), SchemeParams::optimal(), 100000, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(uniformity_test(random_eve, SchemeParams::optimal(), 100, 1),
                    std::invalid_argument);
}
