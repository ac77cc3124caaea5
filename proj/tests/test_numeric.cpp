#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "nvlab/numeric.hpp"

using namespace nvlab;

TEST_CASE("adaptive simpson reproduces textbook integrals") {
    // int_0^pi sin = 2
    REQUIRE(std::abs(adaptive_simpson([](double x) { return std::sin(x); }, 0.0,
                                      std::numbers::pi, 1e-12) -
                     2.0) < 1e-10);
    // int_0^1 x^2 = 1/3 (Simpson is exact on cubics)
    REQUIRE(std::abs(adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0) - 1.0 / 3.0) <
            1e-14);
    // int_1^2 1/x = ln 2
    REQUIRE(std::abs(adaptive_simpson([](double x) { return 1.0 / x; }, 1.0, 2.0, 1e-12) -
                     std::log(2.0)) < 1e-10);
    REQUIRE(adaptive_simpson([](double x) { return x; }, 1.0, 1.0) == 0.0);
}

TEST_CASE("piecewise integration splits exactly at the knots") {
    // f(x) = |x - 1/2| has a kink at 1/2; int_0^1 = 1/4
    const auto f = [](double x) { return std::abs(x - 0.5); };
    const std::vector<double> knots{0.0, 0.5, 1.0};
    REQUIRE(std::abs(integrate_pieces(f, knots, 1e-12) - 0.25) < 1e-12);
}

TEST_CASE("bisection finds the smallest true point of a monotone predicate") {
    const double root = bisect_first_true([](double x) { return x >= 0.3125; }, 0.0, 1.0, 1e-13);
    REQUIRE(std::abs(root - 0.3125) < 1e-12);
}

TEST_CASE("bisection solves increasing roots to tolerance") {
    // x^3 - 2 = 0 -> x = 2^(1/3)
    const double root =
        bisect_root([](double x) { return x * x * x - 2.0; }, 0.0, 2.0, 1e-13, 200);
    REQUIRE(std::abs(root - std::cbrt(2.0)) < 1e-12);
}
