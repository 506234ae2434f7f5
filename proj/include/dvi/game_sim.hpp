#pragma once

#include "dvi/chain_oracle.hpp"
#include "dvi/double_obstacle.hpp"
#include "dvi/grid_forms.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dvi {

enum class ProcessKind { drifted_diffusion, chain };

// Simulated dynamics. For drifted_diffusion the Euler increment is
//   X_{t+dt} = X_t + (mu - lambda^2/2) dt + lambda sqrt(dt) Z.
// For chain kind the embedded ChainGame is replayed step by step with
// killing realizing the discount.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::drifted_diffusion;
    double lambda = 1.0;
    double mu = 0.0;
    double x0 = 0.0;
    double dt = 1e-3;
    double t_max = 1.0;
    double alpha = 1.0;
    std::optional<ChainGame> chain;
    int chain_start = 0;

    int n_steps() const { return static_cast<int>(std::ceil(t_max / dt)); }
    void validate() const;
};

enum class RuleKind { hit_region, threshold_above, threshold_below, fixed_time, never };

struct StoppingRule {
    RuleKind kind = RuleKind::never;
    std::vector<int> region; // hit_region
    double level = 0.0;      // threshold rules
    double time = 0.0;       // fixed_time

    std::string describe() const;
};

StoppingRule rule_hit_region(std::vector<int> region);
StoppingRule rule_threshold_above(double level);
StoppingRule rule_threshold_below(double level);
StoppingRule rule_fixed_time(double time);
StoppingRule rule_never();

// Payoff sampled on the scenario grid; evaluation interpolates linearly,
// region membership uses the nearest node.
struct GridFunction {
    Grid1D grid;
    Eigen::VectorXd values;

    double eval(double x) const;
};

struct PayoffEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
    double truncation_fraction = 0.0;
    bool truncation_warning = false; // truncation_fraction > 0.05
};

enum class Execution { serial, parallel };

// Estimates J(tau, sigma) for a rule pair by simulation. Per-path randomness
// derives from (seed, path index) only; the mean/stderr reduction is a
// fixed-order pairwise sum, so results do not depend on the schedule.
PayoffEstimate hitting_time_payoff(const ProcessSpec& spec,
                                   const StoppingRule& rule_tau,
                                   const StoppingRule& rule_sigma,
                                   const GridFunction& g_fn,
                                   const GridFunction& h_fn, long n_paths,
                                   std::uint64_t seed,
                                   Execution exec = Execution::parallel);

struct SaddleCheck {
    std::string rule;
    std::string side; // "sigma" (J(tau_hat, rho)) or "tau" (J(rho, sigma_hat))
    double J = 0.0;
    double stderr_ = 0.0;
    bool pass = false;
};

struct SaddleReport {
    double v_x0 = 0.0;
    double J_hat = 0.0;
    double J_hat_stderr = 0.0;
    bool equilibrium_pass = false;
    double truncation_fraction = 0.0;
    std::vector<SaddleCheck> sweep;
    bool all_pass() const;
};

// Verifies the equilibrium identity |J(tau_hat, sigma_hat) - v(x0)| within
// max(grid_tol relative, 3 stderr) and both saddle inequalities against every
// rule in the sweep at 3 combined stderr.
SaddleReport verify_saddle_mc(const VISolution& sol, const ProcessSpec& spec,
                              const Grid1D& grid, const ObstacleData& data,
                              const std::vector<StoppingRule>& sweep,
                              long n_paths, std::uint64_t seed,
                              double grid_tol = 0.02,
                              Execution exec = Execution::parallel);

} // namespace dvi
