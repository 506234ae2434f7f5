#pragma once

#include "dvi/grid_forms.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace dvi {

struct ObstacleData {
    Eigen::VectorXd g;                // lower obstacle
    std::optional<Eigen::VectorXd> h; // upper obstacle (absent: single obstacle)
    Eigen::VectorXd f;                // source; empty means zero

    Eigen::VectorXd source_or_zero(int n) const {
        return f.size() == 0 ? Eigen::VectorXd::Zero(n) : f;
    }
    void validate(int n) const;
};

struct SolverParams {
    double tol = 1e-10;
    long max_iter = 200000;
    std::vector<double> penalty_eps_schedule = {1e-2, 1e-4, 1e-6, 1e-8};
    double relaxation = 1.0; // in (0, 2)
    bool symmetric_sweeps = false;
};

enum class Method { pgs, penalty, separability };

const char* method_name(Method m);

struct VISolution {
    Eigen::VectorXd v;
    Eigen::VectorXd residual; // B v - f, recomputed at the final iterate
    std::vector<int> contact_lower;
    std::vector<int> contact_upper;
    long iterations = 0;
    Method method = Method::pgs;
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> witnesses;
    // Iterate logs of the alternating supersolution iteration (upper, lower),
    // kept so monotonicity is checkable after the fact.
    std::vector<Eigen::VectorXd> upper_iterates;
    std::vector<Eigen::VectorXd> lower_iterates;
};

// Scale-aware contact classification threshold.
inline double contact_tol(double obstacle_value) {
    return 1e-7 * (1.0 + std::abs(obstacle_value));
}

// Projected Gauss-Seidel for the one-obstacle complementarity problem
//   v >= g,  Bv - f >= 0,  (v - g)^T (Bv - f) = 0,
// returning the componentwise-smallest feasible supersolution.
VISolution solve_single_obstacle_pgs(const DiscreteForm& form,
                                     const ObstacleData& data,
                                     const SolverParams& params);

// Penalty scheme: for each eps in the schedule solve
//   B v = f + (1/eps) max(g - v, 0)
// by per-node exact sweeps, warm-starting across the schedule.
VISolution solve_single_obstacle_penalty(const DiscreteForm& form,
                                         const ObstacleData& data,
                                         const SolverParams& params);

// Checks feasibility/supersolution residuals and minimality of v against
// randomly generated feasible competitors.
bool smallest_potential_check(const DiscreteForm& form, const Eigen::VectorXd& v,
                              const Eigen::VectorXd& g, double tol = 1e-8,
                              unsigned long seed = 20240517);

// Shared helpers.
Eigen::VectorXd residual_of(const DiscreteForm& form, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& f);
void classify_contacts(VISolution& sol, const ObstacleData& data);

} // namespace dvi
