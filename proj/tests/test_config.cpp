#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "json.hpp"
#include "nvlab/config.hpp"

using namespace nvlab;
using nlohmann::json;

namespace {

json minimal_config() {
    return json{{"demand", {{"kind", "uniform"}, {"a", 0.0}, {"b", 1.0}}},
                {"cost", {{"kind", "linear"}, {"h", 1.0}, {"b", 1.0}}},
                {"policy", {{"kind", "saa"}}},
                {"horizon", 1000},
                {"replications", 50},
                {"seed", 7}};
}

} // namespace

TEST_CASE("minimal config parses with defaults") {
    const auto built = build_experiment(minimal_config());
    REQUIRE(built.config.horizon == 1000);
    REQUIRE(built.config.replications == 50);
    REQUIRE(built.config.seed == 7);
    REQUIRE(built.config.workers == 0);
    REQUIRE(built.config.c0 == 1.0);
    REQUIRE_FALSE(built.config.good_event.has_value());
    REQUIRE(built.plan.record.front() == 1);
    REQUIRE(built.plan.record.back() == 1000);
    REQUIRE(built.demand->upper_support() == 1.0);
}

TEST_CASE("demand factory covers all kinds") {
    const auto uni = make_demand(json{{"kind", "uniform"}, {"a", 0.1}, {"b", 0.9}});
    REQUIRE(uni->mean() == Catch::Approx(0.5));
    const auto hard = make_demand(
        json{{"kind", "hard_instance"}, {"alpha", 0.2}, {"rho", 0.5}, {"theta", 0.01}});
    REQUIRE(hard->quantile(0.5) == Catch::Approx(0.42).margin(1e-9));
    const auto flat =
        make_demand(json{{"kind", "local_flat"}, {"alpha", 0.4}, {"beta", 0.05}, {"rho", 0.5}});
    REQUIRE(flat->cdf(0.5) == Catch::Approx(0.5).margin(1e-14));
    REQUIRE_THROWS_AS(make_demand(json{{"kind", "gaussian"}}), ConfigError);
}

TEST_CASE("hard-instance validity condition is reported by name") {
    const json bad{{"kind", "hard_instance"}, {"alpha", 0.6}, {"rho", 0.5}};
    try {
        make_demand(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("alpha <= min{1/2, 2*rho, 2*(1-rho)}") != std::string::npos);
    }
}

TEST_CASE("near-degenerate uniform support is rejected") {
    REQUIRE_THROWS_AS(make_demand(json{{"kind", "uniform"}, {"a", 0.5}, {"b", 0.5 + 1e-10}}),
                      ConfigError);
    REQUIRE_NOTHROW(make_demand(json{{"kind", "uniform"}, {"a", 0.5}, {"b", 0.5 + 1e-8}}));
}

TEST_CASE("cost factory covers all kinds") {
    const auto lin = make_cost(json{{"kind", "linear"}, {"h", 1.0}, {"b", 3.0}});
    REQUIRE(dynamic_cast<const LinearCost*>(lin.get()) != nullptr);
    const auto pw = make_cost(json{{"kind", "piecewise"},
                                   {"overage", {{0.0, 1.0}, {0.5, 2.0}}},
                                   {"underage", {{0.0, 2.0}}}});
    REQUIRE(pw->cost(1.0, 0.2) == Catch::Approx(0.5 + 2.0 * 0.3).margin(1e-12));
    const auto prod =
        make_cost(json{{"kind", "quadratic_production"}, {"kappa", 1.0}, {"p", 2.0}});
    REQUIRE(prod->cost(0.5, 1.0) == Catch::Approx(0.25 - 1.0).margin(1e-12));
    REQUIRE_THROWS_AS(make_cost(json{{"kind", "cubic"}}), ConfigError);
    REQUIRE_THROWS_AS(make_cost(json{{"kind", "linear"}, {"h", -1.0}, {"b", 1.0}}), ConfigError);
}

TEST_CASE("policy factory covers all kinds") {
    const auto demand = make_demand(json{{"kind", "uniform"}, {"a", 0.0}, {"b", 2.0}});
    const auto cost = make_cost(json{{"kind", "linear"}, {"h", 1.0}, {"b", 3.0}});
    auto saa = make_policy_factory(json{{"kind", "saa"}}, *cost, *demand)();
    saa->observe(1.0);
    REQUIRE(saa->decide() == 1.0);
    auto sgd = make_policy_factory(json{{"kind", "sgd"}, {"strong_convexity", 1.0}}, *cost,
                                   *demand)();
    sgd->observe(1.5);  // starts from d_bar/2 = 1
    REQUIRE(sgd->decide() == Catch::Approx(2.0));  // -b step of eta=1 then clamp to d_bar
    // mle_uniform inherits rho from the linear cost when omitted
    auto mle = make_policy_factory(json{{"kind", "mle_uniform"}}, *cost, *demand)();
    mle->observe(0.0);
    mle->observe(1.0);
    REQUIRE(mle->decide() == Catch::Approx(0.75));
    auto fixed = make_policy_factory(json{{"kind", "clairvoyant"}, {"x", 0.4}}, *cost, *demand)();
    REQUIRE(fixed->decide() == 0.4);
    REQUIRE_THROWS_AS(make_policy_factory(json{{"kind", "foo"}}, *cost, *demand), ConfigError);
}

TEST_CASE("mle_uniform without rho needs a linear cost") {
    const auto demand = make_demand(json{{"kind", "uniform"}, {"a", 0.0}, {"b", 1.0}});
    const auto prod =
        make_cost(json{{"kind", "quadratic_production"}, {"kappa", 1.0}, {"p", 1.0}});
    REQUIRE_THROWS_AS(make_policy_factory(json{{"kind", "mle_uniform"}}, *prod, *demand),
                      ConfigError);
    REQUIRE_NOTHROW(make_policy_factory(json{{"kind", "mle_uniform"}, {"rho", 0.5}}, *prod,
                                        *demand));
}

TEST_CASE("record grid specs") {
    json cfg = minimal_config();
    cfg["record"] = json{{"kind", "list"}, {"points", {1, 10, 100, 1000}}};
    REQUIRE(build_experiment(cfg).plan.record == std::vector<long long>{1, 10, 100, 1000});
    cfg["record"] = json{{"kind", "log"}, {"factor", 2.0}, {"include", {999}}};
    const auto grid = build_experiment(cfg).plan.record;
    REQUIRE(std::find(grid.begin(), grid.end(), 999) != grid.end());
    cfg["record"] = json{{"kind", "all"}};
    cfg["horizon"] = 100;
    REQUIRE(build_experiment(cfg).plan.record.size() == 100);
    cfg["record"] = json{{"kind", "list"}, {"points", {0, 5}}};
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
    cfg["record"] = json{{"kind", "all"}};
    cfg["horizon"] = 1000000;
    cfg["replications"] = 100;
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
}

TEST_CASE("good event spec parses and validates") {
    json cfg = minimal_config();
    cfg["good_event"] = json{{"alpha", 0.4}, {"beta", 0.1}};
    REQUIRE(build_experiment(cfg).plan.good_event.has_value());
    cfg["good_event"] = json{{"alpha", 0.0}, {"beta", 0.1}};
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
}

TEST_CASE("top-level validation errors") {
    json cfg = minimal_config();
    cfg["horizon"] = 0;
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
    cfg = minimal_config();
    cfg["replications"] = 0;
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
    cfg = minimal_config();
    cfg.erase("seed");
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
    cfg = minimal_config();
    cfg["typo_key"] = 1;
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
    cfg = minimal_config();
    cfg["demand"] = json{{"kind", "uniform"}, {"a", 0.0}, {"b", 1.0}, {"c", 2.0}};
    REQUIRE_THROWS_AS(build_experiment(cfg), ConfigError);
}

TEST_CASE("config errors carry the offending key path") {
    json cfg = minimal_config();
    cfg["cost"] = json{{"kind", "linear"}, {"h", 1.0}};
    try {
        build_experiment(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("cost.b") != std::string::npos);
    }
}
