#include "dvi/game_sim.hpp"

#include "dvi/double_obstacle.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dvi;

namespace {

// Wide-domain diffusion: domain exit is effectively impossible over t_max = 1.
ProcessSpec wide_diffusion() {
    ProcessSpec spec;
    spec.kind = ProcessKind::drifted_diffusion;
    spec.lambda = 0.2;
    spec.mu = 0.1;
    spec.x0 = 0.0;
    spec.dt = 1e-3;
    spec.t_max = 1.0;
    spec.alpha = 0.0;
    return spec;
}

GridFunction sampled(const Grid1D& grid, double (*fn)(double)) {
    Eigen::VectorXd values(grid.n);
    for (int i = 0; i < grid.n; ++i) values[i] = fn(grid.node(i));
    return GridFunction{grid, values};
}

ChainGame small_chain() {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 6;
    ChainGame chain;
    chain.P.resize(n, n);
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            chain.P(i, j) = unif(rng);
            row += chain.P(i, j);
        }
        for (int j = 0; j < n; ++j) chain.P(i, j) *= 0.8 / row;
    }
    chain.delta = 0.2;
    chain.r.resize(n);
    chain.g.resize(n);
    chain.h.resize(n);
    for (int i = 0; i < n; ++i) {
        chain.r[i] = 0.1 * (unif(rng) - 0.5);
        chain.g[i] = unif(rng) - 0.5;
        chain.h[i] = chain.g[i] + unif(rng);
    }
    return chain;
}

} // namespace

TEST_CASE("grid function interpolation") {
    const Grid1D grid = make_grid(0.0, 1.0, 3); // nodes 0.25, 0.5, 0.75
    Eigen::VectorXd values(3);
    values << 1.0, 3.0, 2.0;
    const GridFunction fn{grid, values};

    CHECK(fn.eval(0.5) == doctest::Approx(3.0));
    CHECK(fn.eval(0.375) == doctest::Approx(2.0));  // midpoint of nodes 0, 1
    CHECK(fn.eval(0.125) == doctest::Approx(0.5));  // ramp from Dirichlet zero
    CHECK(fn.eval(0.875) == doctest::Approx(1.0));
    CHECK(fn.eval(-0.2) == 0.0);
    CHECK(fn.eval(1.3) == 0.0);
}

TEST_CASE("process spec validation and step count") {
    ProcessSpec spec = wide_diffusion();
    CHECK(spec.n_steps() == 1000);
    spec.dt = 2.0; // dt >= t_max
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = wide_diffusion();
    spec.lambda = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    ProcessSpec chain_spec;
    chain_spec.kind = ProcessKind::chain; // no ChainGame attached
    CHECK_THROWS_AS(chain_spec.validate(), std::invalid_argument);
}

TEST_CASE("fixed-time rules reproduce the payoff functions exactly") {
    const Grid1D grid = make_grid(-2.0, 2.0, 39);
    const GridFunction g_fn = sampled(grid, [](double x) { return std::cos(x); });
    const GridFunction h_fn = sampled(grid, [](double x) { return std::cos(x) + 0.5; });
    ProcessSpec spec = wide_diffusion();
    spec.x0 = grid.node(19); // exactly on a node

    // sigma = 0, tau never: pays g(x0) with zero variance.
    const PayoffEstimate a = hitting_time_payoff(
        spec, rule_never(), rule_fixed_time(0.0), g_fn, h_fn, 500, 1);
    CHECK(a.mean == doctest::Approx(g_fn.eval(spec.x0)).epsilon(1e-12));
    CHECK(a.stderr_ == 0.0);
    CHECK(a.truncation_fraction == 0.0);

    // tau = 0 wins the tie against any sigma: pays h(x0).
    const PayoffEstimate b = hitting_time_payoff(
        spec, rule_fixed_time(0.0), rule_fixed_time(0.0), g_fn, h_fn, 500, 1);
    CHECK(b.mean == doctest::Approx(h_fn.eval(spec.x0)).epsilon(1e-12));
    CHECK(b.stderr_ == 0.0);
}

TEST_CASE("terminal sample mean matches the increment law") {
    const Grid1D grid = make_grid(-5.0, 5.0, 199);
    const GridFunction identity = sampled(grid, [](double x) { return x; });
    ProcessSpec spec = wide_diffusion();

    // Stop exactly at t_max with alpha = 0 and h(x) = x: the estimate is the
    // sample mean of X_{t_max}.
    const PayoffEstimate est = hitting_time_payoff(
        spec, rule_fixed_time(spec.t_max), rule_never(), identity, identity,
        20000, 7);
    const double expected = spec.x0 + (spec.mu - spec.lambda * spec.lambda / 2.0);
    CHECK(std::abs(est.mean - expected) <= 3.0 * est.stderr_);
    CHECK(est.truncation_fraction == 0.0);
}

TEST_CASE("estimates are deterministic in (inputs, seed) and schedule-free") {
    const Grid1D grid = make_grid(-3.0, 3.0, 59);
    const GridFunction g_fn = sampled(grid, [](double x) { return x * x / 4.0; });
    const GridFunction h_fn = sampled(grid, [](double x) { return x * x / 4.0 + 0.3; });
    ProcessSpec spec = wide_diffusion();
    spec.alpha = 0.5;

    const StoppingRule tau = rule_threshold_above(1.0);
    const StoppingRule sigma = rule_threshold_below(-1.0);

    const PayoffEstimate r1 =
        hitting_time_payoff(spec, tau, sigma, g_fn, h_fn, 5000, 123);
    const PayoffEstimate r2 =
        hitting_time_payoff(spec, tau, sigma, g_fn, h_fn, 5000, 123);
    CHECK(r1.mean == r2.mean);
    CHECK(r1.stderr_ == r2.stderr_);

    const PayoffEstimate serial = hitting_time_payoff(
        spec, tau, sigma, g_fn, h_fn, 5000, 123, Execution::serial);
    CHECK(serial.mean == r1.mean);
    CHECK(serial.stderr_ == r1.stderr_);

    const PayoffEstimate other_seed =
        hitting_time_payoff(spec, tau, sigma, g_fn, h_fn, 5000, 124);
    CHECK(other_seed.mean != r1.mean);
}

TEST_CASE("stderr shrinks like one over sqrt(n)") {
    const Grid1D grid = make_grid(-3.0, 3.0, 59);
    const GridFunction g_fn = sampled(grid, [](double x) { return -x; });
    const GridFunction h_fn = sampled(grid, [](double x) { return -x + 1.0; });
    ProcessSpec spec = wide_diffusion();
    spec.lambda = 0.8;
    spec.alpha = 0.2;

    const StoppingRule tau = rule_threshold_above(0.8);
    const StoppingRule sigma = rule_threshold_below(-0.8);
    const PayoffEstimate half =
        hitting_time_payoff(spec, tau, sigma, g_fn, h_fn, 10000, 9);
    const PayoffEstimate full =
        hitting_time_payoff(spec, tau, sigma, g_fn, h_fn, 20000, 9);
    const double ratio = full.stderr_ / half.stderr_;
    CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("never-stopping paths are flagged as truncated") {
    const Grid1D grid = make_grid(-50.0, 50.0, 99);
    const GridFunction fn = sampled(grid, [](double) { return 1.0; });
    ProcessSpec spec = wide_diffusion();
    const PayoffEstimate est = hitting_time_payoff(
        spec, rule_never(), rule_never(), fn, fn, 200, 5);
    CHECK(est.truncation_fraction == 1.0);
    CHECK(est.truncation_warning);
}

TEST_CASE("chain replay matches the exact strategy payoff") {
    const ChainGame chain = small_chain();
    ProcessSpec spec;
    spec.kind = ProcessKind::chain;
    spec.chain = chain;
    spec.chain_start = 2;
    spec.dt = 1.0;
    spec.t_max = 500.0;

    const RegionStrategy s_tau{{0, 4}};
    const RegionStrategy s_sigma{{3}};
    const double exact = strategy_payoff(chain, s_tau, s_sigma, spec.chain_start);

    const Grid1D dummy = make_grid(0.0, 1.0, 3);
    const GridFunction fn{dummy, Eigen::VectorXd::Zero(3)};
    const PayoffEstimate est = hitting_time_payoff(
        spec, rule_hit_region(s_tau.stop_set), rule_hit_region(s_sigma.stop_set),
        fn, fn, 50000, 2024);
    CHECK(std::abs(est.mean - exact) <= 3.0 * est.stderr_);
    CHECK(est.truncation_fraction <= 1e-3);
}

TEST_CASE("verify_saddle_mc on the pinched scenario") {
    const Grid1D grid = make_grid(-1.0, 1.0, 19);
    const DiscreteForm form =
        assemble_drift_diffusion(grid, {0.5, 0.1, 0.0, 0.0}, 1.0);
    ObstacleData data;
    data.g.resize(19);
    for (int i = 0; i < 19; ++i)
        data.g[i] = std::max(0.0, 0.5 - std::abs(grid.node(i)));
    data.h = data.g; // zero-gap: the seller stops immediately

    const VISolution sol = solve_double_pgs(form, data, {});
    ProcessSpec spec = wide_diffusion();
    spec.x0 = grid.node(9);
    spec.alpha = 1.0;

    SUBCASE("empty sweep leaves only the equilibrium check") {
        const SaddleReport report =
            verify_saddle_mc(sol, spec, grid, data, {}, 2000, 17);
        CHECK(report.sweep.empty());
        CHECK(report.equilibrium_pass);
        CHECK(report.J_hat == doctest::Approx(report.v_x0).epsilon(1e-12));
        CHECK(report.all_pass());
    }
    SUBCASE("sweep rules cannot beat an immediate stop") {
        const std::vector<StoppingRule> sweep = {
            rule_threshold_above(0.3), rule_threshold_below(-0.3),
            rule_fixed_time(0.1), rule_never()};
        const SaddleReport report =
            verify_saddle_mc(sol, spec, grid, data, sweep, 2000, 17);
        CHECK(report.sweep.size() == 2 * sweep.size());
        CHECK(report.all_pass());
    }
}

TEST_CASE("verify_saddle_mc rejects unusable inputs") {
    const Grid1D grid = make_grid(0.0, 1.0, 5);
    ObstacleData data;
    data.g = Eigen::VectorXd::Zero(5);
    data.h = Eigen::VectorXd::Ones(5);
    VISolution empty_sol;
    CHECK_THROWS_AS(
        verify_saddle_mc(empty_sol, wide_diffusion(), grid, data, {}, 10, 1),
        std::invalid_argument);

    VISolution sol;
    sol.v = Eigen::VectorXd::Zero(5);
    ObstacleData single{Eigen::VectorXd::Zero(5), std::nullopt, {}};
    CHECK_THROWS_AS(
        verify_saddle_mc(sol, wide_diffusion(), grid, single, {}, 10, 1),
        std::invalid_argument);
}
