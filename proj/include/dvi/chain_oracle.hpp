#pragma once

#include "dvi/grid_forms.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dvi {

// Finite two-player stopping game on a substochastic chain. The killing
// deficit 1 - row_sum realizes the discount.
struct ChainGame {
    Eigen::MatrixXd P;  // substochastic one-step kernel
    Eigen::VectorXd r;  // per-step running reward (collected on continuation)
    Eigen::VectorXd g;  // payoff when the buyer stops first
    Eigen::VectorXd h;  // payoff when the seller stops (ties included)
    double delta = 0.0; // uniform killing margin: row sums <= 1 - delta

    int size() const { return static_cast<int>(P.rows()); }
    void validate() const;
};

// First-hitting-time strategy: stop on the first visit to stop_set
// (time 0 counts when the start state is inside).
struct RegionStrategy {
    std::vector<int> stop_set;

    std::vector<bool> mask(int n) const;
    static RegionStrategy from_mask(std::uint32_t bits, int n);
};

// Jacobi splitting P = I - D^{-1} B, D = diag(B). The clamped fixed point of
// v = Pv + D^{-1} f reproduces the two-obstacle complementarity solution of B
// exactly.
struct ChainDynamics {
    Eigen::MatrixXd P;
    double delta;
    Eigen::VectorXd diag; // D, for mapping sources f -> r = D^{-1} f
};

ChainDynamics build_chain_from_form(const DiscreteForm& form);

ChainGame make_chain_game(const ChainDynamics& dyn, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& h, const Eigen::VectorXd& f);

struct ValueIterationResult {
    Eigen::VectorXd v;
    long iterations = 0;
    std::vector<double> increments; // sup-norm updates, for contraction checks
};

// v <- clamp(Pv + r, g, h) from clamp(0, g, h); a (1 - delta)-contraction.
ValueIterationResult value_iteration(const ChainGame& chain, double tol = 1e-12);

// Exact expected payoff of the pure pair (S_tau, S_sigma) for every start
// state: h on S_tau (tie rule), g on S_sigma \ S_tau, linear solve on the
// continuation set.
Eigen::VectorXd strategy_payoff_all(const ChainGame& chain,
                                    const RegionStrategy& s_tau,
                                    const RegionStrategy& s_sigma);

double strategy_payoff(const ChainGame& chain, const RegionStrategy& s_tau,
                       const RegionStrategy& s_sigma, int x);

struct MinimaxResult {
    double value = 0.0;
    RegionStrategy argmin_tau;
    RegionStrategy argmax_sigma;
    double minmax = 0.0;
    double maxmin = 0.0;
};

// Brute force over all 2^n x 2^n region pairs (n <= 12). Ties broken toward
// the lexicographically smallest region bitmask, so results are independent
// of the parallel schedule.
MinimaxResult minimax_enumerate(const ChainGame& chain, int x,
                                bool parallel = true);

// Full payoff table (S_tau, S_sigma, payoff at x) as CSV; n <= 8.
std::string enumeration_csv(const ChainGame& chain, int x);

} // namespace dvi
